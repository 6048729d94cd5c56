"""Staged optical netlists, their compilation, and the prebuilt gate circuits."""

from __future__ import annotations

import math
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import components as comp
from .components import Component, ComponentError
from .gates import PRESETS
from .hilbert import TOL, ModeBasis, Operator, StateVector

SCHEMA_VERSION = "1.0"


class NetlistError(ValueError):
    """Structural problem in a netlist; ``location`` points at the offending field."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def mode_labels(d: int) -> tuple[str, ...]:
    if not 1 <= d <= 26:
        raise ValueError("mode labels are single letters; d must be <= 26")
    return tuple(string.ascii_lowercase[:d])


@dataclass(frozen=True)
class Netlist:
    basis: ModeBasis
    stages: tuple[tuple[Component, ...], ...]
    name: str = ""
    provenance: str = ""

    def __post_init__(self):
        if len(self.basis.factors) != 2:
            raise NetlistError("netlists need a polarization x spatial basis")
        stages = tuple(tuple(s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        modes = set(self.basis.spatial_modes)
        for i, stage in enumerate(stages):
            used: set[str] = set()
            for j, c in enumerate(stage):
                where = f"stages[{i}].components[{j}]"
                unknown = [p for p in c.ports if p not in modes]
                if unknown:
                    raise NetlistError(f"unknown mode(s) {unknown}", where + ".ports")
                clash = used.intersection(c.ports)
                if clash:
                    raise NetlistError(f"port collision on {sorted(clash)} within one stage", where + ".ports")
                used.update(c.ports)

    @property
    def modes(self) -> tuple[str, ...]:
        return self.basis.spatial_modes

    def components(self) -> Iterable[Component]:
        for stage in self.stages:
            yield from stage

    def then(self, other: "Netlist", name: str | None = None) -> "Netlist":
        if other.basis.labels != self.basis.labels:
            raise NetlistError("cannot chain netlists over different bases")
        return Netlist(self.basis, self.stages + other.stages,
                       self.name if name is None else name, self.provenance)


def stage_operator(basis: ModeBasis, stage: Sequence[Component]) -> np.ndarray:
    m = np.eye(basis.dim, dtype=complex)
    for c in stage:
        local = c.operator()
        idx = basis.indices(local.basis.labels)
        m[np.ix_(idx, idx)] = local.matrix
    return m


def compile_netlist(netlist: Netlist) -> Operator:
    """Product of stage operators, later stages on the left."""
    u = np.eye(netlist.basis.dim, dtype=complex)
    for stage in netlist.stages:
        u = stage_operator(netlist.basis, stage) @ u
    return Operator(netlist.basis, u)


compile = compile_netlist  # noqa: A001  (module-level name used by callers as circuits.compile)


def component_counts(netlist: Netlist) -> Counter:
    return Counter(c.kind for c in netlist.components())


# ---------------------------------------------------------------------------
# state preparation


@dataclass(frozen=True)
class PrepSpec:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        norm = sum(abs(complex(x)) ** 2 for x in self.amplitudes)
        if abs(norm - 1) > TOL.exact:
            raise ValueError(f"preparation amplitudes are not normalized (sum |.|^2 = {norm})")

    @property
    def amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return (complex(self.alpha), complex(self.beta), complex(self.gamma), complex(self.delta))


def prep_circuit(spec: PrepSpec, basis: ModeBasis | None = None) -> Netlist:
    """Three-splitter tree that turns H on mode ``a`` into the requested state.

    VBS1 sends r1 to the (a, b) branch and t1 to the (c, d) branch; VBS2 and
    VBS3 split each branch; trailing phase shifters carry the complex phases.
    """
    basis = basis or ModeBasis.hybrid()
    a, b, c, d = basis.spatial_modes[:4]
    amps = spec.amplitudes
    mags = [abs(x) for x in amps]
    r1 = math.hypot(mags[0], mags[1])
    t1 = math.hypot(mags[2], mags[3])
    # an empty branch gets a fully reflecting splitter
    r2, t2 = (mags[0] / r1, mags[1] / r1) if r1 > 0 else (1.0, 0.0)
    r3, t3 = (mags[2] / t1, mags[3] / t1) if t1 > 0 else (1.0, 0.0)
    stages = [
        (comp.vbs(a, c, r1, t1),),
        (comp.vbs(a, b, r2, t2), comp.vbs(c, d, r3, t3)),
    ]
    shifters = tuple(comp.phase_shifter(m, float(np.angle(x)))
                     for m, x, mag in zip((a, b, c, d), amps, mags)
                     if mag > 0 and abs(np.angle(x)) > 0)
    if shifters:
        stages.append(shifters)
    return Netlist(basis, tuple(stages), "prep", "three-VBS preparation tree")


def prepared_state(spec: PrepSpec, basis: ModeBasis | None = None) -> StateVector:
    net = prep_circuit(spec, basis)
    start = StateVector.basis_state(net.basis, "H" + net.modes[0])
    return compile_netlist(net) @ start


def vbs_stack(p1: str, p2: str, r: float, t: float) -> list[tuple[Component, ...]]:
    """HWP -> PBS -> HWP realization of a real VBS(r, t) fed by H on ``p1``.

    The reflected (V) arm stays on ``p1`` and is turned back to H; a phase
    shifter gives the transmitted arm the same i as the reflection, so the
    output is i (r |H p1> + t |H p2>).
    """
    theta = comp.vbs_hwp_angle(r, t)
    return [
        (comp.hwp(p1, theta),),
        (comp.pbs(p1, p2),),
        (comp.hwp(p1, np.pi / 4), comp.phase_shifter(p2, np.pi / 2)),
    ]


# ---------------------------------------------------------------------------
# gate sections


def shift_cycles(d: int, n: int) -> list[list[int]]:
    """Cycles of l -> l + n (mod d), each listed in mapping order."""
    n %= d
    seen, cycles = set(), []
    for start in range(d):
        if start in seen:
            continue
        cyc, l = [], start
        while l not in seen:
            seen.add(l)
            cyc.append(l)
            l = (l + n) % d
        if len(cyc) > 1:
            cycles.append(cyc)
    return cycles


def x_stages(modes: Sequence[str], n: int) -> list[tuple[Component, ...]]:
    """PBS routing network for the shift by ``n``.

    Each ideal PBS swaps the H light of its two rails, so every cycle
    (c0 c1 ... ck-1) is built from the star (c0 c1), (c0 c2), ... applied in
    that order.  This uses d - gcd(n, d) PBSs, the minimum for the permutation.
    """
    stages = []
    for cyc in shift_cycles(len(modes), n):
        for j in range(1, len(cyc)):
            stages.append((comp.pbs(modes[cyc[0]], modes[cyc[j]]),))
    return stages


def _rail_degrees(stages, modes) -> dict[str, int]:
    deg = {m: 0 for m in modes}
    for stage in stages:
        for c in stage:
            if c.kind in ("PBS", "BeamDisplacer"):
                for p in c.ports:
                    deg[p] += 1
    return deg


def v_compensation(stages, modes) -> list[list[Component]]:
    """Per-rail wave plates (phase shifters only if unavoidable) undoing V reflection phases.

    A V photon keeps its rail and picks up i per PBS, so rail m carries
    i**deg(m).  The correction diag(1, (-i)**deg) is built from QWP(90) =
    e^{i pi/4} diag(1, -i) and HWP(0) = diag(1, -1).  When all degrees share a
    parity the leftover common factor is the same on every rail; otherwise
    phase shifters remove it.
    """
    deg = _rail_degrees(stages, modes)
    ks = {m: deg[m] % 4 for m in modes}
    mixed = len({k % 2 for k in ks.values()}) > 1
    chains = []
    for m in modes:
        k, chain = ks[m], []
        if k % 2:
            chain.append(comp.qwp(m, np.pi / 2))
            if k == 3:
                chain.append(comp.hwp(m, 0.0))
            if mixed:
                chain.append(comp.phase_shifter(m, -np.pi / 4))
        elif k == 2:
            chain.append(comp.hwp(m, 0.0))
        chains.append(chain)
    return chains


def _rail_chains_to_stages(chains) -> list[tuple[Component, ...]]:
    depth = max((len(c) for c in chains), default=0)
    return [tuple(chain[i] for chain in chains if i < len(chain)) for i in range(depth)]


def z_stages(modes: Sequence[str], n: int) -> list[tuple[Component, ...]]:
    """One QWP-HWP-QWP group per rail placing exp(2 pi i n l / d) on rail l.

    Quarter-turn phases use the tabulated angles; other phases use the
    continuous retarder setting on every rail so the common factor stays uniform.
    """
    d = len(modes)
    quarter_turns = [(4 * n * l) // d if (4 * n * l) % d == 0 else None for l in range(d)]
    chains = []
    if all(k is not None for k in quarter_turns):
        for m, k in zip(modes, quarter_turns):
            chains.append(comp.phase_plate_components(m, k))
    else:
        for l, m in enumerate(modes):
            q1, h, q2 = comp.retarder_sandwich_angles(2 * np.pi * ((n * l) % d) / d)
            chains.append([comp.qwp(m, q1), comp.hwp(m, h), comp.qwp(m, q2)])
    return _rail_chains_to_stages(chains)


def x_netlist(d: int, n: int, name: str = "") -> Netlist:
    basis = ModeBasis.hybrid(mode_labels(d))
    return Netlist(basis, tuple(x_stages(basis.spatial_modes, n)), name or f"X{d}^{n % d}",
                   "PBS routing network")


def z_netlist(d: int, n: int, name: str = "") -> Netlist:
    basis = ModeBasis.hybrid(mode_labels(d))
    return Netlist(basis, tuple(z_stages(basis.spatial_modes, n)), name or f"Z{d}^{n % d}",
                   "per-mode wave-plate phase groups")


def cx_netlist(d: int, n: int, name: str = "") -> Netlist:
    """PBS network on the full polarization x spatial space plus V-phase compensation."""
    basis = ModeBasis.hybrid(mode_labels(d))
    stages = x_stages(basis.spatial_modes, n)
    stages = stages + _rail_chains_to_stages(v_compensation(stages, basis.spatial_modes))
    return Netlist(basis, tuple(stages), name or f"CX{d}^{n % d}",
                   "PBS routing network with polarization phase compensation")


def paper_circuit(name: str) -> Netlist:
    """Gate section (after preparation) for one of the nine presets."""
    try:
        family, n = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown gate preset {name!r}; choose from {sorted(PRESETS)}") from None
    build = {"X": x_netlist, "Z": z_netlist, "CX_hybrid": cx_netlist}[family]
    return build(4, n, name)


# ---------------------------------------------------------------------------
# JSON form (angles in degrees)


def _deg(x: float) -> float:
    v = float(f"{float(np.rad2deg(x)):.12g}")
    return v + 0.0  # normalizes -0.0


def _num(x: complex):
    x = complex(x)
    if x.imag == 0:
        return x.real + 0.0
    return [x.real, x.imag]


def component_to_dict(c: Component) -> dict:
    params = {}
    for key, val in c.params.items():
        if key == "theta":
            params[key] = _deg(float(np.real(val)))
        elif key in ("r", "t"):
            params[key] = _num(val)
        else:
            params[key] = float(np.real(val))
    return {"kind": c.kind, "ports": list(c.ports), "params": params}


def netlist_to_dict(net: Netlist) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "netlist",
        "name": net.name,
        "modes": list(net.modes),
        "stages": [{"components": [component_to_dict(c) for c in stage]} for stage in net.stages],
    }
    if net.provenance:
        doc["provenance"] = net.provenance
    return doc


_TOP_KEYS = {"schema_version", "kind", "name", "modes", "stages", "provenance"}


def _parse_param(key, val, where):
    if key == "theta":
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise NetlistError("angle must be a number of degrees", where)
        return float(np.deg2rad(val))
    if key in ("r", "t"):
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            return float(val)
        if isinstance(val, list) and len(val) == 2 and all(isinstance(v, (int, float)) for v in val):
            return complex(val[0], val[1])
        raise NetlistError("splitting amplitude must be a number or [re, im]", where)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise NetlistError("parameter must be a number", where)
    return float(val)


def netlist_from_dict(doc) -> Netlist:
    if not isinstance(doc, dict):
        raise NetlistError("netlist document must be an object", "$")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise NetlistError(f"unknown field(s) {sorted(extra)}", "$")
    if doc.get("kind", "netlist") != "netlist":
        raise NetlistError(f"expected kind 'netlist', got {doc.get('kind')!r}", "kind")
    modes = doc.get("modes")
    if not isinstance(modes, list) or not modes or not all(isinstance(m, str) for m in modes):
        raise NetlistError("modes must be a non-empty list of strings", "modes")
    stages_doc = doc.get("stages")
    if not isinstance(stages_doc, list):
        raise NetlistError("stages must be a list", "stages")
    try:
        basis = ModeBasis.hybrid(tuple(modes))
    except ValueError as exc:
        raise NetlistError(str(exc), "modes") from None
    stages = []
    for i, sdoc in enumerate(stages_doc):
        where = f"stages[{i}]"
        if not isinstance(sdoc, dict) or set(sdoc) != {"components"} or not isinstance(sdoc["components"], list):
            raise NetlistError("stage must be an object with a 'components' list", where)
        stage = []
        for j, cdoc in enumerate(sdoc["components"]):
            cw = f"{where}.components[{j}]"
            if not isinstance(cdoc, dict):
                raise NetlistError("component must be an object", cw)
            if set(cdoc) - {"kind", "ports", "params"}:
                raise NetlistError(f"unknown field(s) {sorted(set(cdoc) - {'kind', 'ports', 'params'})}", cw)
            kind, ports, params = cdoc.get("kind"), cdoc.get("ports"), cdoc.get("params", {})
            if not isinstance(ports, list) or not all(isinstance(p, str) for p in ports):
                raise NetlistError("ports must be a list of mode labels", cw + ".ports")
            if not isinstance(params, dict):
                raise NetlistError("params must be an object", cw + ".params")
            parsed = {k: _parse_param(k, v, f"{cw}.params.{k}") for k, v in params.items()}
            try:
                stage.append(Component(kind, tuple(ports), parsed))
            except ComponentError as exc:
                raise NetlistError(str(exc), cw) from None
        stages.append(tuple(stage))
    return Netlist(basis, tuple(stages), str(doc.get("name", "")), str(doc.get("provenance", "")))
