"""Dense complex linear algebra on finite-dimensional Hilbert spaces.

State vectors, density operators and projectors are thin immutable wrappers
around numpy arrays that validate their defining invariants at construction
time. Everything else is a pure function on those arrays, so values can be
shared freely between threads.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NotHermitian

# Absolute tolerances for the construction-time invariant checks.
NORM_ATOL = 1e-10
HERMITICITY_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
IDEMPOTENCY_ATOL = 1e-10

# Eigenvalues closer than this are merged into one degenerate eigenspace.
DEGENERACY_GAP = 1e-8

# Dense-only engine: refuse matrices beyond desk scale.
MAX_DIM = 64


def as_cmatrix(entries) -> np.ndarray:
    """Coerce input to a read-only 2-D complex matrix with finite entries."""
    m = np.array(entries, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    if max(m.shape) > MAX_DIM:
        raise DimensionMismatch(
            f"matrix dimension {max(m.shape)} exceeds the dense cap {MAX_DIM}"
        )
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    m.setflags(write=False)
    return m


def _require_square(m: np.ndarray) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def _require_hermitian(m: np.ndarray, atol: float = HERMITICITY_ATOL) -> np.ndarray:
    _require_square(m)
    if np.abs(m - m.conj().T).max() > atol:
        raise NotHermitian(
            f"matrix deviates from Hermiticity by {np.abs(m - m.conj().T).max():.3e}"
        )
    return m


def matrix_of(op) -> np.ndarray:
    """Underlying matrix of an operator-like object (wrapper or array)."""
    inner = getattr(op, "matrix", None)
    if inner is not None:
        return inner
    return as_cmatrix(op)


class StateVector:
    """A unit vector in a d-dimensional complex Hilbert space."""

    def __init__(self, amplitudes):
        v = np.array(amplitudes, dtype=complex).reshape(-1)
        if v.size == 0 or v.size > MAX_DIM:
            raise DimensionMismatch(f"state dimension {v.size} outside [1, {MAX_DIM}]")
        if not np.isfinite(v).all():
            raise ValueError("state amplitudes must be finite")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {NORM_ATOL}")
        v.setflags(write=False)
        self._v = v

    @property
    def amplitudes(self) -> np.ndarray:
        return self._v

    @property
    def dim(self) -> int:
        return self._v.size

    def density(self) -> "DensityOperator":
        """Rank-1 density operator |psi><psi|."""
        return DensityOperator(np.outer(self._v, self._v.conj()))

    def canonical(self) -> "StateVector":
        """Phase-fixed copy: first nonzero amplitude made real and positive.

        States are physically defined only up to a global phase; use this
        before comparing vectors componentwise.
        """
        v = self._v
        idx = np.flatnonzero(np.abs(v) > 1e-12)
        if idx.size == 0:
            return self
        phase = v[idx[0]] / abs(v[idx[0]])
        return StateVector(v / phase)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if self.dim != other.dim:
            raise DimensionMismatch("state dimensions differ")
        return complex(np.vdot(self._v, other._v))

    def __repr__(self) -> str:
        return f"StateVector(dim={self.dim})"


class DensityOperator:
    """A positive, unit-trace Hermitian matrix.

    Represents pure states, improper mixtures and reduced states alike; the
    constructor enforces Hermiticity, positive semidefiniteness and unit
    trace at the module tolerances.
    """

    def __init__(self, matrix):
        m = _require_hermitian(as_cmatrix(matrix))
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density operator trace {tr!r} is not 1 within {TRACE_ATOL}")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -PSD_ATOL:
            raise ValueError(f"density operator has negative eigenvalue {evals.min():.3e}")
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def purity(self) -> float:
        """Tr[rho^2]; equals 1 exactly for pure states."""
        return float(np.real(np.trace(self._m @ self._m)))

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim}, purity={self.purity():.6f})"


class Projector:
    """An orthogonal projection operator (Hermitian and idempotent)."""

    def __init__(self, matrix):
        m = _require_hermitian(as_cmatrix(matrix))
        if np.abs(m @ m - m).max() > IDEMPOTENCY_ATOL:
            raise ValueError("matrix is not idempotent within tolerance")
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.real(np.trace(self._m))))

    def __repr__(self) -> str:
        return f"Projector(dim={self.dim}, rank={self.rank})"


def eigen_clusters(op) -> list[tuple[float, np.ndarray]]:
    """Eigendecomposition of a Hermitian matrix with degeneracy merging.

    Returns ``(eigenvalue, basis)`` pairs sorted by ascending eigenvalue.
    ``basis`` has one orthonormal column per merged eigenvector; consecutive
    eigenvalues with gap below ``DEGENERACY_GAP`` are collapsed into a single
    cluster whose reported eigenvalue is their mean.
    """
    m = _require_hermitian(as_cmatrix(op))
    w, v = np.linalg.eigh(m)
    clusters: list[tuple[float, np.ndarray]] = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > DEGENERACY_GAP:
            block = v[:, start:i].copy()
            block.setflags(write=False)
            clusters.append((float(np.mean(w[start:i])), block))
            start = i
    return clusters


def spectral_decompose(op) -> list[tuple[float, Projector]]:
    """Spectral resolution of a Hermitian matrix.

    Returns ``(eigenvalue, projector)`` pairs, eigenvalues ascending and
    projectors mutually orthogonal, summing to the identity. Degenerate
    eigenvalues are merged into a single eigenspace projector.
    """
    return [
        (value, Projector(basis @ basis.conj().T))
        for value, basis in eigen_clusters(op)
    ]


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two matrices (first factor indexes slowest)."""
    return np.kron(matrix_of(a), matrix_of(b))


def tensor_vec(a, b) -> np.ndarray:
    """Kronecker product of two vectors."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    return np.kron(va, vb)


def partial_trace(rho, dims: Sequence[int], keep: str = "A") -> DensityOperator:
    """Trace out one factor of a bipartite density operator.

    Parameters
    ----------
    rho : DensityOperator or matrix
        State on the composite space of dimension ``dims[0] * dims[1]``.
    dims : (int, int)
        Dimensions of the two tensor factors, first factor slowest.
    keep : "A" or "B"
        Which factor survives.
    """
    m = matrix_of(rho)
    d_a, d_b = int(dims[0]), int(dims[1])
    if m.shape[0] != d_a * d_b:
        raise DimensionMismatch(
            f"matrix dimension {m.shape[0]} != {d_a} * {d_b}"
        )
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep.upper() == "A":
        reduced = np.einsum("ijkj->ik", t)
    elif keep.upper() == "B":
        reduced = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityOperator(reduced)


def expectation(rho, op) -> complex:
    """Tr[rho * op]; real (within tolerance) whenever op is Hermitian."""
    m = matrix_of(rho)
    o = matrix_of(op)
    if m.shape != o.shape:
        raise DimensionMismatch(f"shapes {m.shape} and {o.shape} differ")
    return complex(np.trace(m @ o))


def unitary_exp(h, t: float, hbar: float = 1.0) -> np.ndarray:
    """Propagator exp(-i * h * t / hbar) of a Hermitian generator.

    Computed through the eigendecomposition of ``h`` so that the result is
    unitary to machine precision.
    """
    m = _require_hermitian(as_cmatrix(h))
    w, v = np.linalg.eigh(m)
    phases = np.exp(-1j * w * (t / hbar))
    return (v * phases) @ v.conj().T


# --- JSON wire format -------------------------------------------------------
#
# Matrices serialize as row-major nested lists of [re, im] pairs; vectors as
# flat lists of [re, im] pairs. Every module and the CLI share this format.

def matrix_to_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix_of(m)]


def matrix_from_json(data) -> np.ndarray:
    try:
        return as_cmatrix([[complex(re, im) for re, im in row] for row in data])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc


def vector_to_json(v) -> list:
    arr = v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in arr]


def vector_from_json(data) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in data], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed vector JSON: {exc}") from exc
