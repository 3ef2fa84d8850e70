"""Single-qubit density matrices for the four polarization states.

Computational basis {|0>, |1>} is identified with {|H>, |V>}; the cross
basis is |u> = (|0>+|1>)/sqrt2, |d> = (|0>-|1>)/sqrt2. Bit 0 is |H> or |u>,
bit 1 is |V> or |d>.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-12
SQRT_HALF = 1.0 / math.sqrt(2.0)


class InvalidStateError(ValueError):
    """A matrix that is not a valid single-qubit density matrix."""


class Basis(enum.Enum):
    PLUS = "+"
    CROSS = "x"

    def __repr__(self) -> str:
        return f"Basis.{self.name}"


class EncodingOp(enum.Enum):
    I = "I"
    U = "U"

    @property
    def matrix(self) -> np.ndarray:
        return _OP_MATRICES[self]

    @classmethod
    def for_bit(cls, bit: int) -> "EncodingOp":
        return cls.U if bit else cls.I


_OP_MATRICES = {
    EncodingOp.I: np.eye(2, dtype=complex),
    # i*sigma_y = |0><1| - |1><0|
    EncodingOp.U: np.array([[0, 1], [-1, 0]], dtype=complex),
}

_KETS = {
    (Basis.PLUS, 0): np.array([1, 0], dtype=complex),
    (Basis.PLUS, 1): np.array([0, 1], dtype=complex),
    (Basis.CROSS, 0): np.array([SQRT_HALF, SQRT_HALF], dtype=complex),
    (Basis.CROSS, 1): np.array([SQRT_HALF, -SQRT_HALF], dtype=complex),
}


def _check_density(rho: np.ndarray) -> None:
    if rho.shape != (2, 2):
        raise InvalidStateError(f"expected a 2x2 matrix, got shape {rho.shape}")
    (a, b), (c, d) = rho.tolist()
    if abs(b - c.conjugate()) > TOL or abs(a.imag) > TOL or abs(d.imag) > TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = a.real + d.real
    if abs(tr - 1.0) > TOL:
        raise InvalidStateError(f"trace {tr!r} differs from 1")
    # smaller eigenvalue of a 2x2 Hermitian matrix
    lam_min = 0.5 * tr - math.sqrt(max(0.25 * (a.real - d.real) ** 2 + abs(b) ** 2, 0.0))
    if lam_min < -TOL:
        raise InvalidStateError(f"negative eigenvalue {lam_min!r}")


@dataclass(frozen=True, eq=False)
class QubitState:
    """Immutable 2x2 density matrix, validated on construction."""

    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = np.array(self.rho, dtype=complex)
        _check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, ket: Sequence[complex]) -> "QubitState":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def allclose(self, other: "QubitState", atol: float = TOL) -> bool:
        return bool(np.allclose(self.rho, other.rho, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"QubitState({np.array2string(self.rho, precision=6)})"


def _pure(basis: Basis, bit: int) -> QubitState:
    return QubitState.from_ket(_KETS[basis, bit])


_PREPARED = {key: _pure(*key) for key in _KETS}
_PROJECTORS = {key: state.rho for key, state in _PREPARED.items()}
MAXIMALLY_MIXED = QubitState(np.eye(2) / 2)


def prepare(basis: Basis, bit: int) -> QubitState:
    """Rank-1 density matrix of the polarization state named by (basis, bit)."""
    try:
        return _PREPARED[basis, bit]
    except KeyError:
        raise ValueError(f"bit must be 0 or 1, got {bit!r}") from None


def born_probability(state: QubitState, basis: Basis, bit: int) -> float:
    """tr(rho P) for the projector P onto the basis eigenstate of `bit`."""
    rho = state.rho
    if basis is Basis.PLUS:
        p0 = rho[0, 0].real
    else:
        # <u|rho|u> = (rho00 + rho11)/2 + Re(rho01)
        p0 = 0.5 * (rho[0, 0].real + rho[1, 1].real) + rho[0, 1].real
    p0 = min(max(float(p0), 0.0), 1.0)
    return p0 if bit == 0 else 1.0 - p0


def measure(state: QubitState, basis: Basis, randomness: float) -> tuple[int, QubitState]:
    """Projective measurement; outcome 0 iff ``randomness`` < P(0)."""
    bit = 0 if randomness < born_probability(state, basis, 0) else 1
    return bit, _PREPARED[basis, bit]


def apply_encoding(op: EncodingOp, state: QubitState) -> QubitState:
    if op is EncodingOp.I:
        return state
    m = op.matrix
    return QubitState(m @ state.rho @ m.conj().T)


def _clipped_eigenvalues(rho: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -TOL:
        raise InvalidStateError(f"negative eigenvalue {lam.min()!r}")
    return np.clip(lam, 0.0, 1.0)


def shannon_entropy(probs: Iterable[float]) -> float:
    """-sum p log2 p with 0 log 0 = 0."""
    return float(-sum(p * math.log2(p) for p in probs if p > 0.0))


def von_neumann_entropy(state: QubitState) -> float:
    return shannon_entropy(_clipped_eigenvalues(state.rho))


@dataclass(frozen=True)
class Ensemble:
    """Probability-weighted list of states, as prepared by the sender."""

    entries: tuple[tuple[float, QubitState], ...]

    def __post_init__(self) -> None:
        entries = tuple((float(p), s) for p, s in self.entries)
        if not entries:
            raise ValueError("ensemble must have at least one entry")
        if any(p < 0.0 or p > 1.0 for p, _ in entries):
            raise ValueError("ensemble probabilities must lie in [0, 1]")
        if abs(sum(p for p, _ in entries) - 1.0) > TOL:
            raise ValueError("ensemble probabilities must sum to 1")
        object.__setattr__(self, "entries", entries)

    def mixture(self) -> QubitState:
        rho = sum(p * s.rho for p, s in self.entries)
        # renormalize away summation round-off before validation
        rho = rho / np.trace(rho).real
        return QubitState(0.5 * (rho + rho.conj().T))


def holevo_bound(ensemble: Ensemble) -> float:
    """S(sum_x P_x rho_x) - sum_x P_x S(rho_x), in bits."""
    chi = von_neumann_entropy(ensemble.mixture()) - sum(
        p * von_neumann_entropy(s) for p, s in ensemble.entries
    )
    return chi


def source_entropy(ensemble: Ensemble) -> float:
    """Shannon entropy of the preparation labels, H(B) = -sum P_x log2 P_x."""
    return shannon_entropy(p for p, _ in ensemble.entries)
