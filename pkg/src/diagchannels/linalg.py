"""Dense complex matrix algebra on numpy arrays.

Hermitian inputs are symmetrized on entry, so callers may pass matrices that
are Hermitian only up to rounding. All routines return new arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, DimensionError, DomainError, NotPSDError

PSD_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def as_square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_part(a) -> np.ndarray:
    """(A + A*) / 2; exact conjugate symmetry as stored."""
    m = as_square(a)
    return (m + m.conj().T) / 2


def ones(n: int) -> np.ndarray:
    """The all-ones matrix J_n, identity element of the Hadamard product."""
    return np.ones((n, n), dtype=complex)


def hadamard(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard: shape mismatch {a.shape} vs {b.shape}")
    return a * b


def kron(a, b) -> np.ndarray:
    """Kronecker product, first factor outer (row index ``i * rows(b) + r``)."""
    return np.kron(as_matrix(a), as_matrix(b))


def trace(m) -> complex:
    return complex(np.trace(as_square(m)))


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def herm_eig(h) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = hermitian_part(h)
    try:
        w, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        # LAPACK does not expose its sweep count.
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}", iterations=None) from exc
    return EigenDecomposition(w, u)


def _clamped_spectrum(w: np.ndarray, tol: float, what: str) -> np.ndarray:
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    threshold = tol * scale
    lowest = float(w[0])
    if lowest < -threshold:
        raise NotPSDError(lowest, threshold, what)
    return np.where(w < 0, 0.0, w)


def psd_eigh(h, tol: float = PSD_TOL, what: str = "matrix") -> EigenDecomposition:
    """Eigendecomposition with eigenvalues in ``[-tol*||h||_2, 0)`` clamped to zero.

    Raises
    ------
    NotPSDError
        If an eigenvalue lies below ``-tol * ||h||_2``.
    """
    w, u = herm_eig(h)
    return EigenDecomposition(_clamped_spectrum(w, tol, what), u)


def psd_eigvals(h, tol: float = PSD_TOL, what: str = "matrix") -> np.ndarray:
    w = np.linalg.eigvalsh(hermitian_part(h))
    return _clamped_spectrum(w, tol, what)


def psd_power(h, p: float, tol: float = PSD_TOL) -> np.ndarray:
    """Fractional power of a PSD matrix computed in its eigenbasis.

    ``p = 0.5`` gives the principal square root. Zero eigenvalues are raised
    to ``p = 0`` as 1, so ``psd_power(h, 0)`` is the identity.
    """
    if p < 0:
        raise DomainError(f"psd_power requires p >= 0, got {p}")
    w, u = psd_eigh(h, tol)
    return hermitian_part((u * w**p) @ u.conj().T)


def psd_sqrt(h, tol: float = PSD_TOL) -> np.ndarray:
    return psd_power(h, 0.5, tol)


def trace_power(h, p: float, tol: float = PSD_TOL) -> float:
    """Tr h^p for PSD ``h``, from clamped eigenvalues."""
    if p < 0:
        raise DomainError(f"trace_power requires p >= 0, got {p}")
    w = psd_eigvals(h, tol)
    return float(np.sum(w**p))


def schatten_pnorm(h, p: float, tol: float = PSD_TOL) -> float:
    """Schatten p-norm ``(sum_i lambda_i^p)^(1/p)`` of a PSD matrix."""
    if p < 1:
        raise DomainError(f"Schatten norm requires p >= 1, got {p}")
    return trace_power(h, p, tol) ** (1.0 / p)


def von_neumann_entropy(h, tol: float = PSD_TOL) -> float:
    """-Tr h log h (natural log) for a density matrix, with 0 log 0 = 0."""
    h = as_square(h)
    tr = np.trace(h).real
    if abs(tr - 1.0) > 1e-10:
        raise DomainError(f"entropy requires unit trace, got {tr!r}")
    w = psd_eigvals(h, tol)
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


@dataclass(frozen=True)
class BlockIndex:
    """An ``n x n`` grid of ``k x k`` blocks on a space of dimension ``n*k``."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise DimensionError(f"block counts must be positive, got n={self.n}, k={self.k}")

    @property
    def dim(self) -> int:
        return self.n * self.k

    def check(self, m: np.ndarray) -> None:
        if m.shape != (self.dim, self.dim):
            raise DimensionError(
                f"matrix of shape {m.shape} does not factor as {self.n}x{self.n} "
                f"blocks of size {self.k}"
            )


def block(m, idx: BlockIndex, i: int, j: int) -> np.ndarray:
    """The ``k x k`` block at block position ``(i, j)``."""
    m = as_square(m)
    idx.check(m)
    if not (0 <= i < idx.n and 0 <= j < idx.n):
        raise IndexError(f"block ({i}, {j}) out of range for n={idx.n}")
    k = idx.k
    return m[i * k:(i + 1) * k, j * k:(j + 1) * k].copy()


def block_rows(m, idx: BlockIndex) -> list[np.ndarray]:
    """The ``n`` horizontal slices of shape ``k x nk``."""
    m = as_square(m)
    idx.check(m)
    k = idx.k
    return [m[i * k:(i + 1) * k, :].copy() for i in range(idx.n)]


def block_diag(blocks) -> np.ndarray:
    """Place rectangular blocks along the diagonal."""
    return scipy.linalg.block_diag(*[as_matrix(b) for b in blocks]).astype(complex)


def relative_residual(actual, target) -> float:
    """``||actual - target||_F / max(1, ||target||_F)``."""
    actual = np.asarray(actual)
    target = np.asarray(target)
    if actual.shape != target.shape:
        raise DimensionError(f"residual: shape mismatch {actual.shape} vs {target.shape}")
    return float(np.linalg.norm(actual - target) / max(1.0, np.linalg.norm(target)))
