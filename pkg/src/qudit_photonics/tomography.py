"""Pure-state reconstruction from mode populations and pairwise interference."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .hilbert import DensityMatrix, ModeBasis, StateVector

SPATIAL_CHAIN = (("a", "b"), ("c", "d"), ("b", "c"))
OFFSETS = (0.0, np.pi / 2)


def hybrid_chain(modes: Sequence[str] = ("a", "b", "c", "d")) -> tuple[tuple[str, str], ...]:
    """Spanning chain over all polarization x spatial labels: the spatial chain
    inside each polarization block plus one V-H link on the second mode, which
    keeps the chain shallow."""
    base = SPATIAL_CHAIN if tuple(modes) == ("a", "b", "c", "d") else tuple(zip(modes, modes[1:]))
    bridge = modes[1] if len(modes) > 1 else modes[0]
    return (tuple((f"V{x}", f"V{y}") for x, y in base) + tuple((f"H{x}", f"H{y}") for x, y in base)
            + ((f"V{bridge}", f"H{bridge}"),))


@dataclass(frozen=True)
class InterferenceMeasurement:
    mode_pair: tuple[str, str]
    probability: float
    reference_offset: float

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


def mode_indices(basis: ModeBasis, label: str) -> list[int]:
    """Basis indices behind a detector label: a full label, or a spatial mode
    (all polarizations, in polarization order)."""
    if label in basis.labels:
        return [basis.index(label)]
    if len(basis.factors) == 2 and label in basis.spatial_modes:
        return [basis.index(p + label) for p in basis.polarizations]
    raise ValueError(f"{label!r} is neither a basis label nor a spatial mode")


def pair_weight(state: StateVector, pair: tuple[str, str]) -> float:
    amps = state.amplitudes
    return float(sum(np.sum(np.abs(amps[mode_indices(state.basis, m)]) ** 2) for m in pair))


def interference_probability(a1: np.ndarray, a2: np.ndarray, offset: float) -> float:
    """First-port probability of a balanced combination, renormalized to the pair."""
    w = float(np.sum(np.abs(a1) ** 2 + np.abs(a2) ** 2))
    if w <= 0:
        raise ValueError("no weight in the interfering pair; relative phase undefined")
    port1 = a1 + np.exp(1j * offset) * a2
    p = float(np.sum(np.abs(port1) ** 2)) / (2 * w)
    return min(max(p, 0.0), 1.0)


def simulate_interference(state: StateVector, pair: tuple[str, str], offset: float) -> float:
    """Probability at the first output port after shifting the second mode by ``offset``.

    Equals (1 + cos(dphi + offset)) / 2 for equal-magnitude amplitudes.
    """
    i1 = mode_indices(state.basis, pair[0])
    i2 = mode_indices(state.basis, pair[1])
    if len(i1) != len(i2):
        raise ValueError("pair members must carry the same number of polarizations")
    return interference_probability(state.amplitudes[i1], state.amplitudes[i2], offset)


def extract_phase(p0: float, p90: float) -> float:
    """Relative phase (second minus first) from the 0 and pi/2 offset measurements.

    cos = 2 p0 - 1 and sin = 1 - 2 p90; any visibility < 1 cancels in atan2.
    """
    for p in (p0, p90):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    theta = float(np.arctan2(1 - 2 * p90, 2 * p0 - 1))
    return np.pi if theta <= -np.pi else theta


@dataclass(frozen=True)
class ReconstructionResult:
    state: StateVector
    density: DensityMatrix
    phases: Mapping[tuple[str, str], float]
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def to_dict(self, fidelity_vs_ideal: float | None = None) -> dict:
        amps = self.state.amplitudes
        rho = self.density.matrix
        doc = {
            "labels": list(self.state.basis.labels),
            "amplitudes": [[float(a.real), float(a.imag)] for a in amps],
            "phases": [{"pair": list(k), "phase": float(v)} for k, v in self.phases.items()],
            "density_real": rho.real.tolist(),
            "density_imag": rho.imag.tolist(),
            "zero_modes": list(self.diagnostics.get("zero_modes", ())),
        }
        if fidelity_vs_ideal is not None:
            doc["fidelity_vs_ideal"] = float(fidelity_vs_ideal)
        return doc


def reconstruct(populations, phases: Sequence[tuple[str, str, float]],
                labels: Sequence[str] | None = None,
                zero_threshold: float = 1e-12) -> ReconstructionResult:
    """Rank-one state from populations and a chain of relative phases.

    ``populations`` is a mapping label -> probability (or a sequence aligned
    with ``labels``); each phase entry ``(m1, m2, theta)`` means
    phi(m2) - phi(m1) = theta.  The first label is the zero-phase reference.
    """
    if isinstance(populations, Mapping):
        labels = tuple(labels or populations.keys())
        pops = np.array([float(populations[m]) for m in labels])
    else:
        if labels is None:
            raise ValueError("labels are required when populations is a sequence")
        labels = tuple(labels)
        pops = np.asarray(populations, dtype=float)
    if len(pops) != len(labels):
        raise ValueError("populations and labels differ in length")
    if np.any(pops < 0):
        raise ValueError("populations must be non-negative")
    residual = float(abs(pops.sum() - 1.0))
    if residual > 1e-6:
        raise ValueError(f"populations sum to {pops.sum()}, not 1")

    adj: dict[str, list[tuple[str, float]]] = {m: [] for m in labels}
    for m1, m2, theta in phases:
        if m1 not in adj or m2 not in adj:
            raise ValueError(f"phase link ({m1}, {m2}) refers to an unknown mode")
        adj[m1].append((m2, float(theta)))
        adj[m2].append((m1, -float(theta)))
    phi = {labels[0]: 0.0}
    queue = deque([labels[0]])
    while queue:
        m = queue.popleft()
        for nb, theta in adj[m]:
            if nb not in phi:
                phi[nb] = phi[m] + theta
                queue.append(nb)
    # empty modes carry no phase, so the chain only has to reach occupied ones
    zero = tuple(m for m, p in zip(labels, pops) if p <= zero_threshold)
    missing = [m for m in labels if m not in phi and m not in zero]
    if missing:
        raise ValueError(f"phase chain does not reach mode(s) {missing}; add a link to {missing[0]!r}")

    angles = np.array([0.0 if m in zero else phi[m] for m in labels])
    amps = np.sqrt(pops / pops.sum()) * np.exp(1j * angles)
    basis = ModeBasis.spatial(labels)
    state = StateVector.normalized(basis, amps)
    density = DensityMatrix.from_state(state)
    return ReconstructionResult(
        state, density,
        {(m1, m2): float(t) for m1, m2, t in phases},
        {"zero_modes": zero, "normalization_residual": residual},
    )


def populations_of(state: StateVector, labels: Sequence[str]) -> dict[str, float]:
    probs = state.probabilities()
    return {m: float(probs[mode_indices(state.basis, m)].sum()) for m in labels}


def noiseless_reconstruction(state: StateVector, labels: Sequence[str],
                             chain: Sequence[tuple[str, str]]) -> ReconstructionResult:
    """Exact measurement probabilities fed through :func:`extract_phase` and :func:`reconstruct`."""
    pops = populations_of(state, labels)
    phases = []
    for pair in chain:
        if pair_weight(state, pair) <= 0:
            phases.append((*pair, 0.0))
            continue
        p0, p90 = (simulate_interference(state, pair, off) for off in OFFSETS)
        phases.append((*pair, extract_phase(p0, p90)))
    return reconstruct(pops, phases, labels)
