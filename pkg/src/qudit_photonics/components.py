"""Jones-calculus models of the optical elements.

Wave-plate matrices are written in (H, V) ordering.  Every element returns an
:class:`Operator` whose basis labels name the (polarization, port) pairs it
touches, so circuits can embed it by label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .hilbert import TOL, ModeBasis, Operator, tensor

KINDS = ("HWP", "QWP", "PBS", "PhaseShifter", "VBS", "BeamDisplacer", "Mirror")
PORT_COUNT = {"HWP": 1, "QWP": 1, "PhaseShifter": 1, "Mirror": 1,
              "PBS": 2, "VBS": 2, "BeamDisplacer": 2}
ANGLE_PARAMS = {"HWP": ("theta",), "QWP": ("theta",), "PhaseShifter": ("theta",)}
OPTIONAL_PARAMS = {"PBS": ("extinction",), "BeamDisplacer": ("extinction",)}

_POL = ModeBasis.polarization(("H", "V"))


class ComponentError(ValueError):
    pass


def hwp_matrix(theta: float) -> Operator:
    """Half-wave plate with optical axis at ``theta``: H -> cos2t H + sin2t V."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return Operator(_POL, [[c, s], [s, -c]])


def qwp_matrix(theta: float) -> Operator:
    """Quarter-wave plate, fast axis at ``theta``; an SU(2) element (det = 1)."""
    c, s = np.cos(theta), np.sin(theta)
    m = np.array([[c * c + 1j * s * s, (1 - 1j) * s * c],
                  [(1 - 1j) * s * c, s * s + 1j * c * c]])
    return Operator(_POL, np.exp(-1j * np.pi / 4) * m)


def waveplate_sandwich(qwp1: float, hwp: float, qwp2: float) -> Operator:
    """QWP1 -> HWP -> QWP2 in propagation order (so QWP2 is leftmost)."""
    return qwp_matrix(qwp2) @ hwp_matrix(hwp) @ qwp_matrix(qwp1)


# Wave-plate angles (degrees, propagation order QWP1, HWP, QWP2) that put
# exp(i k pi/2) on an H-polarized photon, k = 0..3.  All rows share the
# common factor -i of the QWP convention above.
PHASE_PLATE_TABLE: Mapping[int, tuple[float, float, float]] = MappingProxyType({
    0: (0.0, 0.0, 0.0),
    1: (90.0, 0.0, 0.0),
    2: (0.0, 90.0, 0.0),
    3: (90.0, 90.0, 0.0),
})
PHASE_PLATE_OFFSET = -1j


def phase_plate_arms(quarter_turns: int) -> np.ndarray:
    """Two-arm action on H light: reference arm with the theta=0 row, other arm with row k.

    Equals diag(1, exp(i k pi/2)) up to the common factor.
    """
    ref = waveplate_sandwich(*np.deg2rad(PHASE_PLATE_TABLE[0])).matrix[0, 0]
    arm = waveplate_sandwich(*np.deg2rad(PHASE_PLATE_TABLE[quarter_turns % 4])).matrix[0, 0]
    return np.diag([ref, arm])


def retarder_sandwich_angles(theta: float) -> tuple[float, float, float]:
    """Continuous phase-plate setting (radians): QWP(-45), HWP(theta/2), QWP(-45).

    Acts as diag(exp(i theta), -exp(-i theta)) with no extra common factor.
    """
    return (-np.pi / 4, theta / 2, -np.pi / 4)


def _ports_basis(ports) -> ModeBasis:
    return ModeBasis.hybrid(tuple(ports))


def pbs_scatter(extinction: float = 0.0, ports=("p1", "p2")) -> Operator:
    """Input-port to output-face scattering matrix of a PBS.

    Output face ``k`` carries the transmitted light of input port ``k``:
    H p1 -> H p1', V p1 -> i V p2' (and symmetrically).  ``extinction`` is the
    fraction of intensity sent the wrong way for each polarization.
    """
    if not 0.0 <= extinction < 0.5:
        raise ComponentError(f"PBS extinction must be in [0, 0.5), got {extinction}")
    basis = _ports_basis(ports)
    g, l = np.sqrt(1 - extinction), np.sqrt(extinction)
    h_block = np.array([[g, 1j * l], [1j * l, g]])
    v_block = np.array([[l, 1j * g], [1j * g, l]])
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = v_block  # basis order V p1, V p2, H p1, H p2
    m[2:, 2:] = h_block
    return Operator(basis, m)


def pbs_rail_matrix(extinction: float = 0.0, ports=("p1", "p2")) -> Operator:
    """PBS as placed in a netlist: the transmitted beams cross onto each other's rail.

    With ideal extinction, H swaps rails and V stays on its rail with phase i.
    """
    s = pbs_scatter(extinction, ports)
    cross = np.kron(np.eye(2), [[0, 1], [1, 0]])
    return Operator(s.basis, cross @ s.matrix)


def beam_displacer_matrix(extinction: float = 0.0, ports=("p1", "p2")) -> Operator:
    return pbs_rail_matrix(extinction, ports)


def vbs_matrix(r: complex, t: complex, ports=("p1", "p2")) -> Operator:
    """Polarization-independent splitter: port1 -> r port1 + t port2.

    Second column is the unitary completion (conj(t), -conj(r)).
    """
    r, t = complex(r), complex(t)
    if abs(abs(r) ** 2 + abs(t) ** 2 - 1) > TOL.exact:
        raise ComponentError(f"VBS amplitudes not normalized: |r|^2+|t|^2 = {abs(r)**2 + abs(t)**2}")
    return Operator(ModeBasis.spatial(tuple(ports)), [[r, t.conjugate()], [t, -r.conjugate()]])


def vbs_hwp_angle(r: float, t: float) -> float:
    """HWP angle that makes HWP-PBS-HWP split like VBS(r, t) for real r, t."""
    return 0.5 * np.arctan2(r, t)


def phase_shifter_matrix(theta: float, port: str = "p") -> Operator:
    return Operator(ModeBasis.spatial((port,)), [[np.exp(1j * theta)]])


@dataclass(frozen=True)
class Component:
    kind: str
    ports: tuple[str, ...]
    params: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ComponentError(f"unknown component kind {self.kind!r}")
        ports = tuple(self.ports)
        object.__setattr__(self, "ports", ports)
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        if len(ports) != PORT_COUNT[self.kind]:
            raise ComponentError(f"{self.kind} acts on {PORT_COUNT[self.kind]} port(s), got {list(ports)}")
        if len(set(ports)) != len(ports):
            raise ComponentError(f"{self.kind} ports repeat: {list(ports)}")
        allowed = set(ANGLE_PARAMS.get(self.kind, ())) | set(OPTIONAL_PARAMS.get(self.kind, ()))
        if self.kind == "VBS":
            allowed = {"r", "t"}
        required = set(ANGLE_PARAMS.get(self.kind, ())) | ({"r", "t"} if self.kind == "VBS" else set())
        keys = set(self.params)
        if keys - allowed:
            raise ComponentError(f"{self.kind} does not take parameters {sorted(keys - allowed)}")
        if required - keys:
            raise ComponentError(f"{self.kind} is missing parameters {sorted(required - keys)}")
        if self.kind == "VBS":
            vbs_matrix(self.params["r"], self.params["t"])

    def operator(self) -> Operator:
        """Local operator over (polarization x own ports)."""
        k, p = self.kind, self.params
        if k in ("HWP", "QWP"):
            pol = (hwp_matrix if k == "HWP" else qwp_matrix)(float(np.real(p["theta"])))
            return tensor(pol, Operator.identity(ModeBasis.spatial(self.ports)))
        if k == "PBS":
            return pbs_rail_matrix(float(p.get("extinction", 0.0)), self.ports)
        if k == "BeamDisplacer":
            return beam_displacer_matrix(float(p.get("extinction", 0.0)), self.ports)
        if k == "VBS":
            spatial = vbs_matrix(p["r"], p["t"], self.ports)
        elif k == "PhaseShifter":
            spatial = phase_shifter_matrix(float(np.real(p["theta"])), self.ports[0])
        else:  # Mirror
            spatial = Operator.identity(ModeBasis.spatial(self.ports))
        return tensor(Operator.identity(_POL), spatial)

    def with_params(self, **updates) -> "Component":
        return Component(self.kind, self.ports, {**self.params, **updates})


def hwp(port: str, theta: float) -> Component:
    return Component("HWP", (port,), {"theta": theta})


def qwp(port: str, theta: float) -> Component:
    return Component("QWP", (port,), {"theta": theta})


def pbs(p1: str, p2: str) -> Component:
    return Component("PBS", (p1, p2))


def vbs(p1: str, p2: str, r: complex, t: complex) -> Component:
    return Component("VBS", (p1, p2), {"r": r, "t": t})


def phase_shifter(port: str, theta: float) -> Component:
    return Component("PhaseShifter", (port,), {"theta": theta})


def phase_plate_components(port: str, quarter_turns: int) -> list[Component]:
    """The three wave plates of the table row for exp(i k pi/2), in propagation order."""
    q1, h, q2 = (np.deg2rad(a) for a in PHASE_PLATE_TABLE[quarter_turns % 4])
    return [qwp(port, q1), hwp(port, h), qwp(port, q2)]
