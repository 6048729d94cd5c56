"""Component counts for the polarization-spatial scheme versus a quantum-walk construction.

Counts cover gate sections only; state preparation is excluded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

SCHEMES = ("paper", "quantum_walk")
GATES = ("X", "Z", "CX")


@dataclass(frozen=True)
class ResourceReport:
    d: int
    scheme: str
    gate: str
    pbs_count: int | Fraction
    hwp_count: int | Fraction
    qwp_count: int | Fraction
    warning: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if min(self.pbs_count, self.hwp_count, self.qwp_count) < 0:
            raise ValueError("component counts must be non-negative")

    @property
    def integral(self) -> bool:
        return all(Fraction(c).denominator == 1 for c in (self.pbs_count, self.hwp_count, self.qwp_count))

    def to_dict(self) -> dict:
        def num(c):
            f = Fraction(c)
            return int(f) if f.denominator == 1 else float(f)
        return {"d": self.d, "scheme": self.scheme, "gate": self.gate,
                "pbs": num(self.pbs_count), "hwp": num(self.hwp_count), "qwp": num(self.qwp_count),
                "warning": self.warning}


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")


def paper_scheme_counts(d: int, gate: str) -> ResourceReport:
    """X and CX need d - 1 PBSs; Z needs d HWPs and 2d QWPs."""
    _check_d(d)
    gate = gate.upper()
    if gate in ("X", "CX"):
        return ResourceReport(d, "paper", gate, d - 1, 0, 0)
    if gate == "Z":
        return ResourceReport(d, "paper", gate, 0, d, 2 * d)
    raise ValueError(f"unknown gate {gate!r}; choose from {GATES}")


def _reduce(x: Fraction) -> int | Fraction:
    return int(x) if x.denominator == 1 else x


def quantum_walk_counts(d: int) -> ResourceReport:
    """1.5 d^2 - 2.5 d + 1 PBSs and 3 d^2 - 5 d + 2 HWPs, evaluated exactly.

    A fractional result is returned as a Fraction with a warning instead of
    being rounded.
    """
    _check_d(d)
    pbs = Fraction(3, 2) * d * d - Fraction(5, 2) * d + 1
    hwp = Fraction(3 * d * d - 5 * d + 2)
    warning = ""
    if pbs.denominator != 1 or hwp.denominator != 1:
        warning = f"non-integer count at d={d}"
    return ResourceReport(d, "quantum_walk", "X", _reduce(pbs), _reduce(hwp), 0, warning)


def resource_table(d_max: int, d_min: int = 2) -> list[dict]:
    """One row per d with both schemes side by side."""
    if d_max < 2:
        raise ValueError(f"--d-max must be >= 2, got {d_max}")
    rows = []
    for d in range(d_min, d_max + 1):
        x = paper_scheme_counts(d, "X").to_dict()
        z = paper_scheme_counts(d, "Z").to_dict()
        w = quantum_walk_counts(d).to_dict()
        rows.append({
            "d": d,
            "paper_x_pbs": x["pbs"],
            "paper_cx_pbs": x["pbs"],
            "paper_z_hwp": z["hwp"],
            "paper_z_qwp": z["qwp"],
            "walk_pbs": w["pbs"],
            "walk_hwp": w["hwp"],
            "pbs_ratio": w["pbs"] / x["pbs"],
            "warning": w["warning"],
        })
    return rows


RESOURCE_COLUMNS = ("d", "paper_x_pbs", "paper_cx_pbs", "paper_z_hwp", "paper_z_qwp",
                    "walk_pbs", "walk_hwp", "pbs_ratio", "warning")
