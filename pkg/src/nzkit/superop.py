"""Dense superoperator primitives.

Density matrices are plain ``(d, d)`` complex arrays and superoperators are
``(d**2, d**2)`` arrays acting on column-stacked vectors, so that entry
``(i, j)`` of a matrix lands at index ``i + j*d`` and

    vec(A @ X @ B) == kron(B.T, A) @ vec(X)

Composite spaces are ordered system factor first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class TensorSpace:
    """Ordered factor dimensions of a composite Hilbert space, e.g. ``(d_S, d_B)``."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"factor dimensions must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def _square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    return a


def hermiticity_residual(m) -> float:
    a = np.asarray(m)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(m, name: str = "matrix", tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = _square(m, name)
    res = hermiticity_residual(a)
    if res > tol:
        raise ValidationError(f"{name} is not Hermitian (residual {res:.3e} > {tol:.0e})")
    return a


def check_density_matrix(rho, name: str = "density matrix",
                         positivity_tol: float = POSITIVITY_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Violations raise :class:`ValidationError`; nothing is repaired.
    """
    a = check_hermitian(rho, name)
    tr = np.trace(a)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"{name} has trace {tr.real:.12g}{tr.imag:+.3g}j, expected 1")
    lo = float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])
    if lo < positivity_tol:
        raise ValidationError(f"{name} has negative eigenvalue {lo:.3e}")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vectorize(m) -> np.ndarray:
    """Column-stack a square matrix into a length ``d**2`` vector."""
    a = _square(m)
    return a.reshape(-1, order="F")


def devectorize(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = v.size
    if d is None:
        d = int(round(np.sqrt(n)))
    if d * d != n:
        raise ValidationError(f"vector of length {n} does not match dimension {d}")
    return v.reshape(d, d, order="F")


def hilbert_dim(s: np.ndarray) -> int:
    """Hilbert-space dimension ``d`` of a ``(d**2, d**2)`` superoperator."""
    n = s.shape[0]
    d = int(round(np.sqrt(n)))
    if s.ndim != 2 or s.shape[1] != n or d * d != n:
        raise ValidationError(f"shape {s.shape} is not a superoperator shape")
    return d


def apply(s: np.ndarray, x) -> np.ndarray:
    """Apply superoperator ``s`` to the matrix ``x``."""
    x = _square(x)
    return devectorize(s @ x.reshape(-1, order="F"), x.shape[0])


def identity_superop(d: int) -> np.ndarray:
    return np.eye(d * d, dtype=complex)


def spre(a) -> np.ndarray:
    """Superoperator of ``X -> a @ X``."""
    a = _square(a)
    return np.kron(np.eye(a.shape[0]), a)


def spost(b) -> np.ndarray:
    """Superoperator of ``X -> X @ b``."""
    b = _square(b)
    return np.kron(b.T, np.eye(b.shape[0]))


def sprepost(a, b) -> np.ndarray:
    """Superoperator of ``X -> a @ X @ b``."""
    return np.kron(_square(b).T, _square(a))


def commutator_superop(h) -> np.ndarray:
    """Superoperator of ``-i[h, X]`` (angular frequency units, hbar = 1)."""
    h = check_hermitian(h, "Hamiltonian")
    return -1j * (spre(h) - spost(h))


def raw_commutator_superop(o) -> np.ndarray:
    """``-i[o, X]`` for an arbitrary (not necessarily Hermitian) operator."""
    o = _square(o)
    return -1j * (spre(o) - spost(o))


def dissipator_superop(a, rate: float = 1.0) -> np.ndarray:
    """Superoperator of ``rate * (a X a^dag - {a^dag a, X}/2)``."""
    if rate < 0:
        raise ValidationError(f"dissipation rate must be non-negative, got {rate}")
    a = _square(a, "jump operator")
    ada = a.conj().T @ a
    return rate * (np.kron(a.conj(), a) - 0.5 * spre(ada) - 0.5 * spost(ada))


def partial_trace(rho, space: TensorSpace | Sequence[int], keep: int = 0) -> np.ndarray:
    """Reduced matrix on factor ``keep`` of a bipartite space."""
    if not isinstance(space, TensorSpace):
        space = TensorSpace(tuple(space))
    if len(space.dims) != 2:
        raise ValidationError("partial_trace supports bipartite spaces only")
    if keep not in (0, 1):
        raise ValidationError(f"invalid factor index {keep}")
    a = _square(rho, "rho")
    if a.shape[0] != space.total:
        raise ValidationError(
            f"matrix dimension {a.shape[0]} does not match space {space.dims}")
    ds, db = space.dims
    t = a.reshape(ds, db, ds, db)
    if keep == 0:
        return np.einsum("ibjb->ij", t)
    return np.einsum("aiaj->ij", t)


def expectation(o, rho) -> complex:
    o = _square(o, "observable")
    rho = _square(rho, "rho")
    if o.shape != rho.shape:
        raise ValidationError(f"dimension mismatch: {o.shape} vs {rho.shape}")
    # Tr(o rho) without forming the product
    return complex(np.sum(o * rho.T))


def trace_distance(a, b) -> float:
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    ev = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(ev)))


def superop_from_map(func, d_in: int, d_out: int | None = None) -> np.ndarray:
    """Matrix of a linear map on matrices, assembled column by column from matrix units."""
    d_out = d_in if d_out is None else d_out
    out = np.empty((d_out * d_out, d_in * d_in), dtype=complex)
    for col in range(d_in * d_in):
        unit = np.zeros((d_in, d_in), dtype=complex)
        unit[col % d_in, col // d_in] = 1.0
        out[:, col] = np.asarray(func(unit), dtype=complex).reshape(-1, order="F")
    return out


def restrict_superop(s: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Block of ``s`` mapping matrices supported on ``indices`` to that same support."""
    d = hilbert_dim(s)
    idx = np.asarray(indices, dtype=int)
    rows = (idx[:, None] + d * idx[None, :]).reshape(-1, order="F")
    return s[np.ix_(rows, rows)]
