"""Ideal generalized Pauli gates and truth-table metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import ModeBasis, Operator, TOL

FAMILIES = ("X", "Z", "Y", "CX_hybrid", "CX_qudit")

# preset name -> (family, power)
PRESETS = {
    "X4": ("X", 1), "X4_sq": ("X", 2), "X4_dag": ("X", 3),
    "Z4": ("Z", 1), "Z4_sq": ("Z", 2), "Z4_dag": ("Z", 3),
    "CX4": ("CX_hybrid", 1), "CX4_sq": ("CX_hybrid", 2), "CX4_dag": ("CX_hybrid", 3),
}

CLASSICAL_BOUND = 0.4982
CLASSICAL_BOUND_NOTE = "reported experimental classical-gate fidelity bound; quoted, not derived"


@dataclass(frozen=True)
class GateSpec:
    d: int
    n: int
    family: str

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown gate family {self.family!r}")
        if self.family != "CX_qudit":
            object.__setattr__(self, "n", self.n % self.d)

    def operator(self) -> Operator:
        if self.family == "X":
            return pauli_x(self.d, self.n)
        if self.family == "Z":
            return pauli_z(self.d, self.n)
        if self.family == "Y":
            return pauli_y(self.d, self.n)
        if self.family == "CX_hybrid":
            return cx_hybrid(self.n, self.d)
        return cx_qudit(self.d, self.n)


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def pauli_x(d: int, n: int = 1) -> Operator:
    """Cyclic shift |l> -> |l + n mod d>."""
    if d < 2:
        raise ValueError("d must be >= 2")
    n %= d
    m = np.zeros((d, d))
    for l in range(d):
        m[(l + n) % d, l] = 1.0
    return Operator(ModeBasis.qudit(d), m)


def pauli_z(d: int, n: int = 1) -> Operator:
    """Clock operator |l> -> omega^(n l) |l>."""
    if d < 2:
        raise ValueError("d must be >= 2")
    n %= d
    # exact phases: reduce n*l before exponentiating
    phases = np.exp(2j * np.pi * ((n * np.arange(d)) % d) / d)
    return Operator(ModeBasis.qudit(d), np.diag(phases))


def pauli_y(d: int, n: int = 1) -> Operator:
    return pauli_x(d, n) @ pauli_z(d, n)


def cx_qudit(d: int, n: int = 1) -> Operator:
    """Two-qudit controlled shift |k>|l> -> |k>|k + l + (n - 1) mod d>, taken literally."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if n < 1:
        raise ValueError("cx_qudit power must be >= 1")
    basis = ModeBasis((tuple(f"c{k}" for k in range(d)), tuple(f"t{l}" for l in range(d))))
    m = np.zeros((d * d, d * d))
    for k in range(d):
        for l in range(d):
            m[k * d + (k + l + n - 1) % d, k * d + l] = 1.0
    return Operator(basis, m)


def cx_hybrid(n: int = 1, d: int = 4) -> Operator:
    """Polarization-controlled shift |V><V| (x) I + |H><H| (x) X^n over V..H blocks."""
    basis = ModeBasis.hybrid(tuple("abcdefghijklmnopqrstuvwxyz"[:d]))
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    m[:d, :d] = np.eye(d)
    m[d:, d:] = pauli_x(d, n).matrix
    return Operator(basis, m)


def ideal_gate(name: str) -> Operator:
    """Ideal target for a preset: 4x4 on the qudit for X/Z, 8x8 hybrid for CX."""
    try:
        family, n = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown gate preset {name!r}; choose from {sorted(PRESETS)}") from None
    return GateSpec(4, n, family).operator()


def classical_bound() -> float:
    return CLASSICAL_BOUND


@dataclass(frozen=True)
class TruthTable:
    """Output probabilities per computational-basis input.

    ``targets[i]`` is the output the ideal gate sends input ``i`` to; the
    conversion efficiency of row ``i`` is ``P(i, targets[i])``.
    """

    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]
    probabilities: np.ndarray
    targets: tuple[str, ...]
    counts: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (len(self.input_labels), len(self.output_labels)):
            raise ValueError("probability table shape does not match labels")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        if self.counts is not None:
            c = np.array(self.counts, dtype=np.int64)
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)

    @classmethod
    def from_counts(cls, input_labels, output_labels, counts, targets) -> "TruthTable":
        counts = np.asarray(counts, dtype=np.int64)
        totals = counts.sum(axis=1, keepdims=True)
        if np.any(totals == 0):
            raise ValueError("a truth-table row has no counts")
        return cls(tuple(input_labels), tuple(output_labels), counts / totals, tuple(targets), counts)

    def efficiencies(self) -> np.ndarray:
        cols = [self.output_labels.index(t) for t in self.targets]
        return self.probabilities[np.arange(len(cols)), cols]

    def average_efficiency(self) -> float:
        return float(np.mean(self.efficiencies()))

    def max_off_target(self) -> float:
        p = self.probabilities.copy()
        cols = [self.output_labels.index(t) for t in self.targets]
        p[np.arange(len(cols)), cols] = 0.0
        return float(p.max())

    def to_dict(self) -> dict:
        doc = {
            "inputs": list(self.input_labels),
            "outputs": list(self.output_labels),
            "targets": list(self.targets),
            "probabilities": self.probabilities.tolist(),
            "efficiencies": self.efficiencies().tolist(),
            "average_efficiency": self.average_efficiency(),
        }
        if self.counts is not None:
            doc["counts"] = self.counts.tolist()
        return doc

    def csv_rows(self) -> list[list]:
        rows = [["input", *self.output_labels]]
        for lab, row in zip(self.input_labels, self.probabilities):
            rows.append([lab, *(repr(float(x)) for x in row)])
        return rows


def detector_groups(basis: ModeBasis, resolve_polarization: bool) -> list[tuple[str, list[int]]]:
    """Detector label and the basis indices it collects.

    Without polarization resolution a detector sits on each spatial mode and
    sees both polarizations.
    """
    if resolve_polarization or len(basis.factors) != 2:
        return [(lab, [i]) for i, lab in enumerate(basis.labels)]
    pols, modes = basis.factors
    return [(m, [basis.index(p + m) for p in pols]) for m in modes]


def output_distribution(amplitudes: np.ndarray, groups) -> np.ndarray:
    probs = np.abs(np.asarray(amplitudes)) ** 2
    return np.array([probs[idx].sum() for _, idx in groups])


def truth_table(u: Operator, inputs: Sequence[str] | None = None,
                resolve_polarization: bool | None = None,
                ideal: Operator | None = None) -> TruthTable:
    """Exact table P(i, j) = |<j|U|i>|^2 for basis inputs.

    ``inputs`` defaults to the encoded subspace.  ``ideal`` (defaults to ``u``)
    defines the target output of each row.
    """
    if not u.is_unitary(TOL.spectral):
        raise ValueError("truth_table needs a unitary operator")
    basis = u.basis
    if inputs is None:
        inputs = basis.encoding or basis.labels
    if resolve_polarization is None:
        resolve_polarization = len(inputs) == basis.dim
    groups = detector_groups(basis, resolve_polarization)
    rows, targets = [], []
    ref = ideal if ideal is not None else u
    for lab in inputs:
        col = basis.index(lab)
        rows.append(output_distribution(u.matrix[:, col], groups))
        ideal_row = output_distribution(_column(ref, basis, lab), groups)
        targets.append(groups[int(np.argmax(ideal_row))][0])
    return TruthTable(tuple(inputs), tuple(g[0] for g in groups), np.array(rows), tuple(targets))


def _column(op: Operator, basis: ModeBasis, label: str) -> np.ndarray:
    """Column of ``op`` for ``label``, lifting a qudit-level op onto ``basis`` if needed."""
    if op.basis.labels == basis.labels:
        return op.matrix[:, basis.index(label)]
    enc = basis.encoding
    if op.basis.dim != len(enc):
        raise ValueError("ideal operator does not match the basis or its encoding")
    out = np.zeros(basis.dim, dtype=complex)
    out[basis.indices(enc)] = op.matrix[:, enc.index(label)]
    return out
