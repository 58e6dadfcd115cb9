"""Input validation helpers for states, pure states and probability parameters."""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError, NotPSDError, ValidationError
from .linalg import PSD_TOL, as_square, hermitian_part, psd_eigvals

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
NORM_TOL = 1e-12


def check_hermitian(m, tol: float = HERMITIAN_TOL, what: str = "matrix") -> np.ndarray:
    """Symmetrize ``m`` if its asymmetry is within ``tol * max|m_ij|``, else reject."""
    m = as_square(m)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > tol * max(scale, np.finfo(float).tiny):
        raise ValidationError(f"{what}.hermitian", f"max asymmetry {asym:.3e} exceeds {tol:g} relative")
    return hermitian_part(m)


def check_psd(m, tol: float = PSD_TOL, what: str = "matrix") -> np.ndarray:
    m = check_hermitian(m, what=what)
    try:
        psd_eigvals(m, tol, what)
    except NotPSDError as exc:
        raise ValidationError(f"{what}.psd", str(exc)) from exc
    return m


def check_density_matrix(rho, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a state: Hermitian, PSD within ``tol``, unit trace within 1e-10."""
    rho = check_psd(rho, tol, what="density_matrix")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError("density_matrix.trace", f"trace {tr!r} differs from 1")
    return rho


def check_pure_state(psi, dim: int | None = None) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if dim is not None and psi.shape[0] != dim:
        raise ValidationError("pure_state.dim", f"expected dimension {dim}, got {psi.shape[0]}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValidationError("pure_state.norm", f"norm {norm!r} differs from 1")
    return psi


def check_p(p: float, minimum: float = 1.0) -> float:
    p = float(p)
    if not np.isfinite(p) or p < minimum:
        raise DomainError(f"p must be a finite real >= {minimum}, got {p}")
    return p


def projector(psi) -> np.ndarray:
    """The rank-one density matrix ``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())
