"""Linear-algebra substrate: labelled bases, states, operators and fidelities.

Every basis is a tensor product of labelled factors.  The optical circuits use
a two-factor basis, polarization (V, H) times spatial modes (a, b, c, d, ...),
enumerated polarization-major so the 8-dimensional space reads
``Va Vb Vc Vd Ha Hb Hc Hd``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    exact: float = 1e-10  # algebraic identities, unitarity
    spectral: float = 1e-8  # anything that went through an eigendecomposition


TOL = Tolerances()


class BasisError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeBasis:
    """Ordered product basis.

    ``factors`` lists the label alphabet of each tensor factor; basis labels
    are the concatenation of one label per factor, row-major in factor order.
    ``encoding`` maps logical level ``l`` to the basis label that carries it.
    """

    factors: tuple[tuple[str, ...], ...]
    encoding: tuple[str, ...] = ()
    labels: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factors = tuple(tuple(f) for f in self.factors)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "encoding", tuple(self.encoding))
        flat = [lab for f in factors for lab in f]
        if len(set(flat)) != len(flat):
            raise BasisError(f"factor labels are not distinct: {flat}")
        labels = tuple("".join(p) for p in itertools.product(*factors))
        if len(set(labels)) != len(labels):
            raise BasisError("concatenated basis labels collide")
        object.__setattr__(self, "labels", labels)
        if len(set(self.encoding)) != len(self.encoding):
            raise BasisError("encoding is not injective")
        missing = [lab for lab in self.encoding if lab not in labels]
        if missing:
            raise BasisError(f"encoding refers to unknown labels {missing}")

    # constructors -------------------------------------------------------
    @classmethod
    def hybrid(cls, spatial: Sequence[str] = ("a", "b", "c", "d")) -> "ModeBasis":
        spatial = tuple(spatial)
        return cls((("V", "H"), spatial), tuple("H" + m for m in spatial))

    @classmethod
    def polarization(cls, order: Sequence[str] = ("H", "V")) -> "ModeBasis":
        return cls((tuple(order),))

    @classmethod
    def spatial(cls, modes: Sequence[str]) -> "ModeBasis":
        modes = tuple(modes)
        return cls((modes,), modes)

    @classmethod
    def qudit(cls, d: int, prefix: str = "") -> "ModeBasis":
        labels = tuple(f"{prefix}{l}" for l in range(d))
        return cls((labels,), labels)

    # queries ---------------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def polarizations(self) -> tuple[str, ...]:
        return self.factors[0] if len(self.factors) == 2 else ()

    @property
    def spatial_modes(self) -> tuple[str, ...]:
        return self.factors[-1]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise BasisError(f"unknown basis label {label!r}") from None

    def indices(self, labels: Sequence[str]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def encoded_indices(self) -> list[int]:
        return self.indices(self.encoding) if self.encoding else list(range(self.dim))


@dataclass(frozen=True)
class StateVector:
    basis: ModeBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.basis.dim,):
            raise BasisError(f"expected {self.basis.dim} amplitudes, got {amps.shape[0]}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, basis: ModeBasis, amplitudes, tol: float = TOL.exact) -> "StateVector":
        """Constructor that refuses anything not already unit-norm."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > tol:
            raise ValueError(f"state norm^2 is {norm!r}, not 1")
        return cls(basis, amps)

    @classmethod
    def basis_state(cls, basis: ModeBasis, label: str) -> "StateVector":
        amps = np.zeros(basis.dim, dtype=complex)
        amps[basis.index(label)] = 1.0
        return cls(basis, amps)

    @classmethod
    def from_levels(cls, basis: ModeBasis, coefficients) -> "StateVector":
        """Place logical-level coefficients onto the basis via its encoding."""
        coefficients = np.asarray(coefficients, dtype=complex)
        idx = basis.encoded_indices()
        if len(coefficients) != len(idx):
            raise BasisError("coefficient count does not match the encoding")
        amps = np.zeros(basis.dim, dtype=complex)
        amps[idx] = coefficients
        return cls.normalized(basis, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def levels(self) -> np.ndarray:
        return np.array(self.amplitudes[self.basis.encoded_indices()])


@dataclass(frozen=True)
class Operator:
    basis: ModeBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise BasisError(f"matrix shape {m.shape} does not fit basis of size {self.basis.dim}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, basis: ModeBasis) -> "Operator":
        return cls(basis, np.eye(basis.dim))

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_basis(self.basis, other.basis)
            return Operator(self.basis, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            _same_basis(self.basis, other.basis)
            return StateVector(self.basis, self.matrix @ other.amplitudes)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        _same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix + other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    @property
    def dagger(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T)

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(len(m)))))

    def is_unitary(self, tol: float = TOL.exact) -> bool:
        return self.unitarity_error() <= tol

    def restrict(self, labels: Sequence[str] | None = None) -> "Operator":
        """Block of the matrix on ``labels`` (default: the encoded subspace)."""
        if labels is None:
            labels = self.basis.encoding
        idx = self.basis.indices(labels)
        sub = ModeBasis((tuple(labels),), tuple(labels))
        return Operator(sub, self.matrix[np.ix_(idx, idx)])

    def power(self, n: int) -> "Operator":
        return Operator(self.basis, np.linalg.matrix_power(self.matrix, n))


def _same_basis(a: ModeBasis, b: ModeBasis) -> None:
    if a.labels != b.labels:
        raise BasisError("operands live on different bases")


@dataclass(frozen=True)
class DensityMatrix:
    basis: ModeBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise BasisError("density matrix shape does not fit its basis")
        if np.max(np.abs(m - m.conj().T)) > TOL.exact:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL.exact:
            raise ValueError(f"density matrix trace is {np.trace(m).real!r}, not 1")
        if np.min(np.linalg.eigvalsh(m)) < -TOL.spectral:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes / state.norm()
        return cls(state.basis, np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


Tensorable = Union[Operator, StateVector]


def tensor(a: Tensorable, b: Tensorable) -> Tensorable:
    """Kronecker product; index (i, j) of the result is ``i * dim(b) + j``."""
    basis = ModeBasis(
        a.basis.factors + b.basis.factors,
        tuple(x + y for x in a.basis.encoding for y in b.basis.encoding),
    )
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(basis, np.kron(a.matrix, b.matrix))
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(basis, np.kron(a.amplitudes, b.amplitudes))
    raise TypeError("tensor() needs two operators or two states")


@dataclass(frozen=True)
class PhaseMatch:
    equal: bool
    phase: float | None  # phi with v ~ exp(i phi) u, only when equal
    deviation: float

    def __bool__(self) -> bool:
        return self.equal


def equal_up_to_global_phase(u: Operator | np.ndarray, v: Operator | np.ndarray,
                             tol: float = TOL.exact) -> PhaseMatch:
    """Test ``v == exp(i phi) u`` for some phi, read off the largest entry of v."""
    mu = u.matrix if isinstance(u, Operator) else np.asarray(u, dtype=complex)
    mv = v.matrix if isinstance(v, Operator) else np.asarray(v, dtype=complex)
    if mu.shape != mv.shape:
        raise BasisError("shapes differ")
    k = np.unravel_index(np.argmax(np.abs(mv)), mv.shape)
    if abs(mu[k]) == 0:
        return PhaseMatch(False, None, float(np.max(np.abs(mv))))
    phase = float(np.angle(mv[k] / mu[k]))
    if phase <= -np.pi:
        phase += 2 * np.pi
    deviation = float(np.max(np.abs(mu * np.exp(1j * phase) - mv)))
    ok = deviation <= tol
    return PhaseMatch(ok, phase if ok else None, deviation)


def psd_sqrt(m: np.ndarray, clamp: float = TOL.spectral) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues below -clamp are an error."""
    w, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if np.min(w) < -clamp:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {np.min(w):.3g})")
    # round-off eigenvalues (below numerical rank) would otherwise contribute sqrt(eps)
    w = np.where(w > len(w) * np.finfo(float).eps * max(np.max(w), 0.0), w, 0.0)
    return (vecs * np.sqrt(w)) @ vecs.conj().T


def _fidelity_general(a: np.ndarray, b: np.ndarray) -> float:
    # Tr sqrt(sqrt(a) b sqrt(a)) is the trace norm of sqrt(a) sqrt(b); the singular
    # values avoid square-rooting round-off eigenvalues when either state is rank deficient
    return float(np.sum(np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)))


def uhlmann_fidelity(rho_e: DensityMatrix, rho_t: DensityMatrix, method: str = "auto") -> float:
    """Tr sqrt(sqrt(rho_e) rho_t sqrt(rho_e)), clipped to [0, 1].

    With ``method="auto"`` a pure target uses sqrt(<psi|rho_e|psi>).
    """
    _same_basis(rho_e.basis, rho_t.basis)
    a, b = rho_e.matrix, rho_t.matrix
    if method == "general":
        f = _fidelity_general(a, b)
    elif method in ("auto", "pure"):
        if method == "pure" or rho_t.purity() > 1 - TOL.exact:
            w, vecs = np.linalg.eigh(b)
            psi = vecs[:, -1]
            f = float(np.sqrt(max(np.vdot(psi, a @ psi).real, 0.0)))
        elif rho_e.purity() > 1 - TOL.exact:
            return uhlmann_fidelity(rho_t, rho_e, method)
        else:
            f = _fidelity_general(a, b)
    else:
        raise ValueError(f"unknown fidelity method {method!r}")
    return min(max(f, 0.0), 1.0)


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>| for normalized pure states (the Uhlmann value for rank one)."""
    _same_basis(a.basis, b.basis)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) / (a.norm() * b.norm()))
