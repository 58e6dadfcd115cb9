"""Factorized form of a diagonal-times-arbitrary product channel output.

For a diagonal map ``Phi`` (Hadamard product with ``C`` on ``C^n``), a CP map
``Psi`` on ``C^k`` and a state ``rho`` on ``C^n (x) C^k``:

* ``alpha_i = Tr rho_ii``, ``A_ij = sqrt(alpha_i alpha_j)`` and
  ``tau_ij = rho_ij / sqrt(alpha_i alpha_j)`` give ``rho = (A (x) J_k) * tau``;
* the block rows ``V_i`` of ``sqrt((I (x) Psi)(tau))`` assemble into a
  block-diagonal ``V`` with ``(Phi (x) Psi)(rho) = V K V^*`` where
  ``K = Phi(A) (x) I``.

:func:`verify_certificate` replays the construction on an instance and
records every identity as a residual and every inequality in the bound
``Tr (Phi (x) Psi)(rho)^p <= nu_p(Phi)^p nu_p(Psi)^p`` as a slack.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import Channel, DiagonalChannel, as_kraus, identity_channel, tensor
from .exceptions import DimensionError
from .linalg import (
    PSD_TOL,
    BlockIndex,
    as_matrix,
    block_diag,
    block_rows,
    hadamard,
    hermitian_part,
    kron,
    ones,
    psd_eigh,
    psd_eigvals,
    psd_power,
    relative_residual,
    trace_power,
)
from .purity import OptimizerConfig, PurityEstimate, estimate_nu_p
from .validation import check_density_matrix, check_p

RESIDUAL_TOL = 1e-10
LT_TOL = 1e-10
OPT_TOL = 1e-6
SPECTRUM_TOL = 1e-10


@dataclass
class StateDecomposition:
    index: BlockIndex
    alpha: np.ndarray
    a_matrix: np.ndarray
    tau: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """``(A (x) J_k) * tau``."""
        return hadamard(kron(self.a_matrix, ones(self.index.k)), self.tau)


@dataclass
class Factorization:
    psi_tau: np.ndarray
    v_blocks: list[np.ndarray]
    v: np.ndarray
    phi_a: np.ndarray
    k_matrix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.v_blocks)

    @property
    def m(self) -> int:
        """Output dimension of the second channel (``k`` for square maps)."""
        return self.v_blocks[0].shape[0]

    def product(self) -> np.ndarray:
        return self.v @ self.k_matrix @ self.v.conj().T


def decompose_state(rho, idx: BlockIndex) -> StateDecomposition:
    """Split ``rho`` into block weights ``alpha``, the rank-one ``A`` and ``tau``.

    Where ``alpha_i = 0`` the whole ``i``-th block row of a PSD ``rho``
    vanishes; ``tau`` is filled with ``tau_ii = I_k / k`` and zero
    off-diagonal blocks there, which keeps ``rho = (A (x) J_k) * tau`` exact.
    """
    rho = as_matrix(rho)
    idx.check(rho)
    n, k = idx.n, idx.k
    blocks = rho.reshape(n, k, n, k)
    alpha = np.maximum(np.einsum("iaia->i", blocks).real, 0.0)
    a_matrix = np.sqrt(np.outer(alpha, alpha)).astype(complex)

    live = alpha > 0
    inv = np.zeros(n)
    inv[live] = 1 / np.sqrt(alpha[live])
    tau = blocks * inv[:, None, None, None] * inv[None, None, :, None]
    for i in np.flatnonzero(~live):
        tau[i, :, :, :] = 0
        tau[:, :, i, :] = 0
        tau[i, :, i, :] = np.eye(k) / k
    return StateDecomposition(idx, alpha, a_matrix, hermitian_part(tau.reshape(n * k, n * k)))


def apply_second(psi: Channel, x, n: int) -> np.ndarray:
    """``(I_n (x) Psi)(x)``, acting blockwise on an ``n x n`` grid of blocks."""
    ops = as_kraus(psi).kraus_ops
    k, m = ops.shape[2], ops.shape[1]
    x4 = as_matrix(x).reshape(n, k, n, k)
    out = np.einsum("jxk,akbl,jyl->axby", ops, x4, ops.conj(), optimize=True)
    return hermitian_part(out.reshape(n * m, n * m))


def build_factorization(dec: StateDecomposition, psi: Channel, phi: DiagonalChannel) -> Factorization:
    """Square root, block rows ``V_i``, block-diagonal ``V`` and ``K = Phi(A) (x) I``.

    Raises
    ------
    NotPSDError
        If ``(I (x) Psi)(tau)`` is not PSD (non-CP ``psi`` or corrupted ``tau``).
    """
    n = dec.index.n
    if phi.dim_in != n:
        raise DimensionError(f"diagonal channel acts on dimension {phi.dim_in}, state has {n} blocks")
    if psi.dim_in != dec.index.k:
        raise DimensionError(f"second channel acts on dimension {psi.dim_in}, blocks have size {dec.index.k}")
    psi_tau = apply_second(psi, dec.tau, n)
    m = psi.dim_out
    root = psd_power(psi_tau, 0.5)
    v_blocks = block_rows(root, BlockIndex(n, m))
    phi_a = phi.apply(dec.a_matrix)
    k_matrix = kron(phi_a, np.eye(n * m))
    return Factorization(psi_tau, v_blocks, block_diag(v_blocks), phi_a, k_matrix)


@dataclass
class LiebThirringResult:
    lhs: float
    rhs: float
    slack: float
    scale: float


def lieb_thirring_check(v, k, p: float, tol: float = PSD_TOL) -> LiebThirringResult:
    """Evaluate ``Tr (V K V^*)^p <= Tr (V^* V)^p K^p``.

    Raises
    ------
    NotPSDError
        If ``k`` is not PSD within ``tol``.
    """
    v = as_matrix(v)
    k = as_matrix(k)
    p = check_p(p)
    if v.shape[1] != k.shape[0]:
        raise DimensionError(f"V of shape {v.shape} incompatible with K of shape {k.shape}")
    w, u = psd_eigh(k, tol, what="K")
    k_p = hermitian_part((u * w**p) @ u.conj().T)
    k_clamped = hermitian_part((u * w) @ u.conj().T)
    lhs = trace_power(v @ k_clamped @ v.conj().T, p, tol)
    rhs = float(np.trace(psd_power(v.conj().T @ v, p, tol) @ k_p).real)
    return LiebThirringResult(lhs, rhs, rhs - lhs, max(1.0, abs(lhs), abs(rhs)))


def spectrum_sharing_error(v_block) -> float:
    """Largest relative gap between the spectra of ``V_i V_i^*`` and ``V_i^* V_i``.

    The smaller Gram matrix is compared with the same number of leading
    eigenvalues of the larger one; the rest of the larger spectrum is zero.
    """
    v_block = as_matrix(v_block)
    small = psd_eigvals(v_block @ v_block.conj().T)
    large = psd_eigvals(v_block.conj().T @ v_block)
    if small.size > large.size:
        small, large = large, small
    top = large[large.size - small.size:]
    rest = large[:large.size - small.size]
    scale = max(1.0, float(large[-1]))
    gap = max(float(np.max(np.abs(top - small))), float(np.max(rest, initial=0.0)))
    return gap / scale


@dataclass
class CertificateReport:
    instance: dict
    residuals: dict
    slacks: dict
    scales: dict
    spectrum_sharing: dict
    chain: dict
    nu_p_phi: dict | None
    nu_p_psi: dict | None
    verdict: str
    failing_steps: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_summary(est: PurityEstimate | None) -> dict | None:
    if est is None:
        return None
    return {
        "p": est.p,
        "value": est.value,
        "maximizer": [[float(z.real), float(z.imag)] for z in est.maximizer],
        "per_restart_values": list(est.per_restart_values),
        "converged": est.converged,
    }


def evaluate_certificate(
    phi: DiagonalChannel,
    psi: Channel,
    rho,
    p: float,
    dec: StateDecomposition,
    fac: Factorization,
    nu_phi: PurityEstimate | None,
    nu_psi: PurityEstimate | None,
    instance: dict | None = None,
) -> CertificateReport:
    """Record residuals, slacks and the spectrum check for a built factorization.

    A step that raises is recorded in ``errors`` and listed as failing; the
    remaining steps are still evaluated.
    """
    rho = as_matrix(rho)
    n = dec.index.n
    residuals: dict = {}
    slacks: dict = {}
    scales: dict = {}
    chain: dict = {}
    errors: dict = {}
    warnings: list[str] = []
    m = fac.m
    j_m = ones(m)

    def step(name, fn):
        try:
            fn()
        except (ArithmeticError, ValueError) as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"

    second = tensor(identity_channel(n), psi).apply(rho)
    product_out = tensor(phi, psi).apply(rho)

    def r1():
        residuals["r1"] = relative_residual(dec.reconstruct(), rho)

    def r2():
        residuals["r2"] = relative_residual(hadamard(kron(dec.a_matrix, j_m), fac.psi_tau), second)

    def r3():
        residuals["r3"] = relative_residual(hadamard(kron(fac.phi_a, j_m), fac.psi_tau), product_out)

    def r4():
        residuals["r4"] = relative_residual(fac.product(), product_out)

    def r5():
        lhs = float(np.trace(psd_power(fac.v.conj().T @ fac.v, p) @ psd_power(fac.k_matrix, p)).real)
        phi_a_p = psd_power(fac.phi_a, p)
        rhs = sum(
            trace_power(vb.conj().T @ vb, p) * float(phi_a_p[i, i].real)
            for i, vb in enumerate(fac.v_blocks)
        )
        residuals["r5"] = abs(lhs - rhs) / max(1.0, abs(rhs))

    def r6():
        residuals["r6"] = abs(float(np.trace(dec.a_matrix).real) - 1.0)

    def s1():
        lt = lieb_thirring_check(fac.v, fac.k_matrix, p)
        slacks["s1"] = lt.slack
        scales["s1"] = lt.scale
        chain["lt_lhs"] = lt.lhs
        chain["lt_rhs"] = lt.rhs

    for name, fn in [("r1", r1), ("r2", r2), ("r3", r3), ("r4", r4), ("r5", r5), ("r6", r6), ("s1", s1)]:
        step(name, fn)

    out_p = trace_power(product_out, p)
    tr_phi_a = trace_power(fac.phi_a, p)
    chain["output_trace_power"] = out_p
    chain["phi_a_trace_power"] = tr_phi_a
    if nu_psi is not None:
        nu_psi_p = nu_psi.value**p
        block_slacks = [nu_psi_p - trace_power(vb @ vb.conj().T, p) for vb in fac.v_blocks]
        slacks["s2"] = min(block_slacks)
        slacks["s2_blocks"] = block_slacks
        chain["block_bound"] = nu_psi_p * tr_phi_a
    if nu_phi is not None:
        slacks["s3"] = nu_phi.value**p - tr_phi_a
    if nu_phi is not None and nu_psi is not None:
        final = nu_phi.value**p * nu_psi.value**p
        slacks["s4"] = final - out_p
        chain["final_bound"] = final

    gaps = [spectrum_sharing_error(vb) for vb in fac.v_blocks]
    sharing = {"max_rel_error": max(gaps), "pass": max(gaps) <= SPECTRUM_TOL}

    failing = [name for name, val in residuals.items() if not val <= RESIDUAL_TOL]
    if "s1" in slacks and not slacks["s1"] >= -LT_TOL * scales["s1"]:
        failing.append("s1")
    estimated_ok = all(e is not None and e.converged for e in (nu_phi, nu_psi))
    for name in ("s2", "s3", "s4"):
        if name in slacks and not slacks[name] >= -OPT_TOL:
            if estimated_ok:
                failing.append(name)
            else:
                warnings.append(f"{name} below -{OPT_TOL:g} with an unconverged nu_p estimate")
    if not sharing["pass"]:
        failing.append("spectrum_sharing")
    failing.extend(name for name in errors if name not in failing)

    return CertificateReport(
        instance=instance or {},
        residuals=residuals,
        slacks=slacks,
        scales=scales,
        spectrum_sharing=sharing,
        chain=chain,
        nu_p_phi=estimate_summary(nu_phi),
        nu_p_psi=estimate_summary(nu_psi),
        verdict="fail" if failing else "pass",
        failing_steps=failing,
        warnings=warnings,
        errors=errors,
    )


def verify_certificate(
    phi: DiagonalChannel,
    psi: Channel,
    rho,
    p: float,
    cfg: OptimizerConfig | None = None,
    nu_phi: PurityEstimate | None = None,
    nu_psi: PurityEstimate | None = None,
    instance: dict | None = None,
) -> CertificateReport:
    """Replay the factorization and the inequality chain on one instance.

    ``nu_phi`` and ``nu_psi`` are estimated with ``cfg`` unless supplied.
    """
    p = check_p(p)
    cfg = cfg or OptimizerConfig()
    n, k = phi.dim_in, psi.dim_in
    rho = check_density_matrix(rho)
    if rho.shape[0] != n * k:
        raise DimensionError(f"state dimension {rho.shape[0]} != {n}*{k}")
    dec = decompose_state(rho, BlockIndex(n, k))
    fac = build_factorization(dec, psi, phi)
    if nu_phi is None:
        nu_phi = estimate_nu_p(phi, p, cfg)
    if nu_psi is None:
        nu_psi = estimate_nu_p(psi, p, cfg)
    meta = {"n": n, "k": k, "p": p}
    meta.update(instance or {})
    return evaluate_certificate(phi, psi, rho, p, dec, fac, nu_phi, nu_psi, meta)

