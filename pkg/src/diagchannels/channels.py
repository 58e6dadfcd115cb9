"""Completely positive maps in Kraus, diagonal (Hadamard) and Choi form.

A diagonal map acts as ``rho -> C * rho`` (entrywise product) for a positive
semidefinite ``C``. Spectrally decomposing ``C = sum_m psi_m psi_m^*`` gives
the equivalent Kraus form with operators ``Diag(psi_m)``.

Channel equality is extensional: two objects are the same map when their
action agrees, Kraus lists are not unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DimensionError, DomainError, NotPSDError, ValidationError
from .linalg import PSD_TOL, as_matrix, as_square, hermitian_part, psd_eigh
from .validation import check_hermitian

TP_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """``rho -> sum_i A_i rho A_i^*``.

    Parameters
    ----------
    kraus_ops : array_like, shape (r, dim_out, dim_in)
        Nonempty stack of Kraus operators.
    """

    kraus_ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.kraus_ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0 or 0 in ops.shape[1:]:
            raise ValidationError(
                "kraus.shape", f"expected a nonempty stack of equal-shape matrices, got {ops.shape}"
            )
        object.__setattr__(self, "kraus_ops", _frozen(ops))

    @property
    def dim_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus_ops.shape[0]

    def apply(self, rho) -> np.ndarray:
        rho = as_square(rho)
        if rho.shape[0] != self.dim_in:
            raise DimensionError(f"channel expects dimension {self.dim_in}, got {rho.shape[0]}")
        a = self.kraus_ops
        out = (a @ rho @ a.conj().transpose(0, 2, 1)).sum(axis=0)
        return hermitian_part(out)

    def apply_adjoint(self, x) -> np.ndarray:
        x = as_square(x)
        if x.shape[0] != self.dim_out:
            raise DimensionError(f"adjoint expects dimension {self.dim_out}, got {x.shape[0]}")
        a = self.kraus_ops
        return hermitian_part((a.conj().transpose(0, 2, 1) @ x @ a).sum(axis=0))

    def gram(self) -> np.ndarray:
        """``sum_i A_i^* A_i``; the identity exactly when the map preserves trace."""
        a = self.kraus_ops
        return (a.conj().transpose(0, 2, 1) @ a).sum(axis=0)

    @property
    def trace_preserving(self) -> bool:
        return bool(np.max(np.abs(self.gram() - np.eye(self.dim_in))) <= TP_TOL)


@dataclass(frozen=True, eq=False)
class DiagonalChannel:
    """``rho -> C * rho`` for a positive semidefinite ``C``."""

    c: np.ndarray

    def __post_init__(self):
        c = check_hermitian(self.c, what="diagonal.c")
        try:
            psd_eigh(c, PSD_TOL, what="diagonal.c")
        except NotPSDError as exc:
            raise ValidationError("diagonal.c.psd", str(exc)) from exc
        object.__setattr__(self, "c", _frozen(c))

    @property
    def dim_in(self) -> int:
        return self.c.shape[0]

    dim_out = dim_in

    def apply(self, rho) -> np.ndarray:
        rho = as_square(rho)
        if rho.shape != self.c.shape:
            raise DimensionError(f"channel expects dimension {self.dim_in}, got {rho.shape[0]}")
        return hermitian_part(self.c * rho)

    def apply_adjoint(self, x) -> np.ndarray:
        x = as_square(x)
        if x.shape != self.c.shape:
            raise DimensionError(f"adjoint expects dimension {self.dim_in}, got {x.shape[0]}")
        return hermitian_part(self.c.conj() * x)

    @property
    def trace_preserving(self) -> bool:
        return bool(np.max(np.abs(np.diag(self.c) - 1.0)) <= TP_TOL)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """``sum_ij |i><j| (x) Phi(|i><j|)``, input factor outer."""

    dim_in: int
    dim_out: int
    matrix: np.ndarray

    def __post_init__(self):
        m = check_hermitian(self.matrix, what="choi")
        if m.shape[0] != self.dim_in * self.dim_out:
            raise ValidationError(
                "choi.shape",
                f"matrix dimension {m.shape[0]} != dim_in*dim_out = {self.dim_in * self.dim_out}",
            )
        object.__setattr__(self, "matrix", _frozen(m))


Channel = Union[KrausChannel, DiagonalChannel]


def as_kraus(ch) -> KrausChannel:
    if isinstance(ch, KrausChannel):
        return ch
    if isinstance(ch, DiagonalChannel):
        return kraus_from_diagonal(ch)
    if isinstance(ch, ChoiMatrix):
        return channel_from_choi(ch)
    raise TypeError(f"not a channel: {type(ch).__name__}")


def apply(ch: Channel, rho) -> np.ndarray:
    return ch.apply(rho)


def _spectral_vectors(h, tol: float) -> np.ndarray:
    """Columns ``sqrt(lambda_m) u_m`` over the nonzero spectrum of PSD ``h``.

    Each vector's phase is fixed so its largest-magnitude entry is real positive.
    """
    w, u = psd_eigh(h, tol)
    keep = w > tol * max(float(w[-1]), 0.0)
    if not np.any(keep):
        keep = w >= w[-1]
    vecs = u[:, keep] * np.sqrt(w[keep])
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)


def kraus_from_diagonal(ch: DiagonalChannel, tol: float = PSD_TOL) -> KrausChannel:
    """Kraus operators ``Diag(psi_m)`` from the spectral decomposition of ``C``."""
    vecs = _spectral_vectors(ch.c, tol)
    return KrausChannel(np.stack([np.diag(v) for v in vecs.T]))


def tensor(phi, psi) -> KrausChannel:
    """The product map with Kraus operators ``A_i (x) B_j``, ``phi`` outer."""
    a = as_kraus(phi).kraus_ops
    b = as_kraus(psi).kraus_ops
    ops = np.einsum("aij,bkl->abikjl", a, b)
    r = a.shape[0] * b.shape[0]
    return KrausChannel(ops.reshape(r, a.shape[1] * b.shape[1], a.shape[2] * b.shape[2]))


def adjoint(ch) -> KrausChannel:
    """The Hilbert-Schmidt adjoint, Kraus operators ``A_i^*``."""
    a = as_kraus(ch).kraus_ops
    return KrausChannel(a.conj().transpose(0, 2, 1))


def choi(ch) -> ChoiMatrix:
    if isinstance(ch, ChoiMatrix):
        return ch
    a = as_kraus(ch).kraus_ops
    # Columns of the vectorized operators: w_a[i*dout + r] = A_a[r, i].
    w = a.transpose(0, 2, 1).reshape(a.shape[0], -1)
    return ChoiMatrix(a.shape[2], a.shape[1], w.T @ w.conj())


def channel_from_choi(cm: ChoiMatrix, tol: float = PSD_TOL) -> KrausChannel:
    """Kraus form of a CP map from its Choi matrix.

    Raises
    ------
    NotPSDError
        If the Choi matrix is not PSD, i.e. the map is not completely positive.
    """
    vecs = _spectral_vectors(cm.matrix, tol)
    ops = vecs.T.reshape(-1, cm.dim_in, cm.dim_out).transpose(0, 2, 1)
    return KrausChannel(ops)


def is_cp(ch, tol: float = PSD_TOL) -> bool:
    if isinstance(ch, DiagonalChannel):
        m = ch.c
    else:
        m = choi(ch).matrix
    try:
        psd_eigh(m, tol)
    except NotPSDError:
        return False
    return True


def is_trace_preserving(ch) -> bool:
    if isinstance(ch, ChoiMatrix):
        ch = channel_from_choi(ch)
    return ch.trace_preserving


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d, dtype=complex)[None])


def dephasing_channel(n: int) -> DiagonalChannel:
    """Completely dephasing map, ``C = I``."""
    return DiagonalChannel(np.eye(n))


def depolarizing_channel(d: int) -> KrausChannel:
    """``rho -> Tr(rho) I/d``."""
    ops = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            ops[i * d + j, i, j] = 1 / np.sqrt(d)
    return KrausChannel(ops)


def werner_holevo(d: int) -> KrausChannel:
    """``rho -> (I Tr rho - rho^T) / (d - 1)`` with Kraus operators ``(|i><j| - |j><i|)/sqrt(d-1)``."""
    if d < 2:
        raise DomainError(f"Werner-Holevo channel requires d >= 2, got {d}")
    ops = []
    for i in range(d):
        for j in range(i + 1, d):
            a = np.zeros((d, d), dtype=complex)
            a[i, j] = 1.0
            a[j, i] = -1.0
            ops.append(a / np.sqrt(d - 1))
    return KrausChannel(np.stack(ops))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def haar_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-random ``rows x cols`` isometry (orthonormal columns)."""
    if rows < cols:
        raise DimensionError(f"isometry needs rows >= cols, got {rows}x{cols}")
    q, r = np.linalg.qr(complex_gaussian(rng, (rows, cols)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(dim_in: int, dim_out: int, kraus_rank: int, seed) -> KrausChannel:
    """Trace-preserving channel sliced from a Haar-random isometry."""
    if kraus_rank < 1:
        raise DomainError(f"kraus_rank must be >= 1, got {kraus_rank}")
    if kraus_rank * dim_out < dim_in:
        raise DomainError(
            f"a trace-preserving map {dim_in} -> {dim_out} needs kraus_rank >= {-(-dim_in // dim_out)}"
        )
    rng = np.random.default_rng(seed)
    w = haar_isometry(rng, kraus_rank * dim_out, dim_in)
    return KrausChannel(w.reshape(kraus_rank, dim_out, dim_in))


def random_diagonal(n: int, rank: int, seed, trace_preserving: bool = False) -> DiagonalChannel:
    """Diagonal map with ``C = G^* G`` for a ``rank x n`` complex Gaussian ``G``.

    With ``trace_preserving`` the rows and columns of ``C`` are rescaled so
    that ``diag(C) = 1``.
    """
    if not 1 <= rank <= n:
        raise DomainError(f"rank must lie in [1, {n}], got {rank}")
    rng = np.random.default_rng(seed)
    g = complex_gaussian(rng, (rank, n))
    c = g.conj().T @ g
    if trace_preserving:
        s = 1 / np.sqrt(np.diag(c).real)
        c = c * np.outer(s, s)
        np.fill_diagonal(c, 1.0)
    return DiagonalChannel(c)


def random_state(dim: int, seed, rank: int | None = None) -> np.ndarray:
    """Density matrix ``G G^* / Tr`` for a ``dim x rank`` Ginibre matrix."""
    rng = np.random.default_rng(seed)
    g = complex_gaussian(rng, (dim, rank or dim))
    rho = g @ g.conj().T
    return hermitian_part(rho / np.trace(rho).real)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector."""
    v = complex_gaussian(rng, dim)
    return v / np.linalg.norm(v)


def max_entangled_state(d: int) -> np.ndarray:
    """``d^{-1/2} sum_i |i>|i>``."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
