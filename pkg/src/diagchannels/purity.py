"""Maximal output p-norm and minimal output entropy by ascent over pure states.

Both quantities are extremized over pure inputs only: ``rho -> ||Phi(rho)||_p``
is convex and ``rho -> S(Phi(rho))`` is concave, so the extremum over the
state space is attained at an extreme point. The optimizer is a projected
gradient method on the complex unit sphere with backtracking, restarted from
several starting vectors. The landscape is non-concave, so every value returned
here is an estimate (a lower bound for ``nu_p``, an upper bound for ``S_min``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channels import Channel, DiagonalChannel, as_kraus, random_pure_state, tensor
from .exceptions import DimensionError, DomainError
from .linalg import schatten_pnorm, von_neumann_entropy
from .validation import check_p, projector

GRAD_CLAMP = 1e-12
ARMIJO = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e6
STALL_ULPS = 4
STALL_STEPS = 10


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 20
    max_iters: int = 2000
    grad_tol: float = 1e-9
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    seed: int = 0
    basis_starts: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")
        if self.grad_tol <= 0:
            raise DomainError(f"grad_tol must be positive, got {self.grad_tol}")
        if not 0 < self.backtrack_factor < 1:
            raise DomainError(f"backtrack_factor must lie in (0, 1), got {self.backtrack_factor}")
        if self.step_init <= 0:
            raise DomainError(f"step_init must be positive, got {self.step_init}")


@dataclass
class AscentRun:
    """One restart: final vector, objective trajectory and termination state."""

    psi: np.ndarray
    trajectory: list[float]
    iterations: int
    converged: bool


@dataclass
class PurityEstimate:
    p: float
    value: float
    maximizer: np.ndarray
    per_restart_values: list[float]
    iterations_used: list[int]
    converged: bool
    trajectories: list[list[float]] = field(default_factory=list, repr=False)


@dataclass
class EntropyEstimate:
    value: float
    minimizer: np.ndarray
    per_restart_values: list[float]
    iterations_used: list[int]
    converged: bool
    trajectories: list[list[float]] = field(default_factory=list, repr=False)


@dataclass
class ProductBound:
    """Product-state value ``nu_p(phi) nu_p(psi)`` and the witness attaining it."""

    value: float
    witness: np.ndarray
    phi_estimate: PurityEstimate
    psi_estimate: PurityEstimate


def _check_vector(ch, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != ch.dim_in:
        raise DimensionError(f"channel expects dimension {ch.dim_in}, got vector of length {psi.shape[0]}")
    return psi


class _Kernel:
    """Lean ``psi -> Phi(psi psi^*)`` and ``(X, psi) -> Phi^dag(X) psi`` for the inner loop."""

    def __init__(self, ch):
        if isinstance(ch, DiagonalChannel):
            self.c = np.asarray(ch.c)
            self.ops = None
        else:
            self.c = None
            self.ops = as_kraus(ch).kraus_ops
            self.ops_h = self.ops.conj().transpose(0, 2, 1)
        self.dim_in = ch.dim_in

    def output(self, psi):
        if self.ops is None:
            return self.c * np.outer(psi, psi.conj())
        m = self.ops @ psi  # (r, dim_out)
        return m.T @ m.conj()

    def adjoint_times(self, x, psi):
        if self.ops is None:
            return (self.c.conj() * x) @ psi
        m = self.ops @ psi
        return np.einsum("aij,ja->i", self.ops_h, x @ m.T)

    def spectrum(self, psi):
        w, u = np.linalg.eigh(self.output(psi))
        return np.where(w < 0, 0.0, w), u


def _power_value(kern, psi, p):
    w = np.linalg.eigvalsh(kern.output(psi))
    return float(np.sum(np.where(w < 0, 0.0, w) ** p))


def _power_grad(kern, psi, p):
    w, u = kern.spectrum(psi)
    if p < 2:
        w = np.where(w < GRAD_CLAMP, 0.0, w)
    d = p * w ** (p - 1)
    return 2 * kern.adjoint_times((u * d) @ u.conj().T, psi)


def _entropy_value(kern, psi):
    w = np.linalg.eigvalsh(kern.output(psi))
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def _entropy_grad(kern, psi):
    w, u = kern.spectrum(psi)
    d = np.log(np.maximum(w, GRAD_CLAMP)) + 1.0
    return -2 * kern.adjoint_times((u * d) @ u.conj().T, psi)


def objective(ch: Channel, psi, p: float) -> float:
    """``Tr Phi(psi psi^*)^p`` from clamped output eigenvalues (no normalization of ``psi``)."""
    psi = _check_vector(ch, psi)
    return _power_value(_Kernel(ch), psi, check_p(p))


def objective_gradient(ch: Channel, psi, p: float) -> np.ndarray:
    """Euclidean gradient ``2p Phi^dag(sigma^{p-1}) psi`` of :func:`objective`.

    The real and imaginary parts are the partial derivatives with respect to
    the real and imaginary parts of ``psi``. For ``p < 2`` output eigenvalues
    below ``1e-12`` are treated as zero before the ``(p-1)`` power.
    """
    psi = _check_vector(ch, psi)
    return _power_grad(_Kernel(ch), psi, check_p(p))


def entropy_objective(ch: Channel, psi) -> float:
    """``S(Phi(psi psi^*))`` with ``0 log 0 = 0``."""
    return _entropy_value(_Kernel(ch), _check_vector(ch, psi))


def entropy_gradient(ch: Channel, psi) -> np.ndarray:
    """Euclidean gradient ``-2 Phi^dag(log sigma + I) psi``; eigenvalues floored at 1e-12 in the log."""
    return _entropy_grad(_Kernel(ch), _check_vector(ch, psi))


def tangent(psi: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Projection onto the tangent space of the unit sphere (real inner product)."""
    return g - np.real(np.vdot(psi, g)) * psi


def ascend(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    psi0: np.ndarray,
    cfg: OptimizerConfig,
) -> AscentRun:
    """Maximize ``f`` on the unit sphere from ``psi0``.

    Each step moves along the tangent gradient and renormalizes. The trial
    step is a Barzilai-Borwein estimate from the previous iterate (falling
    back to ``cfg.step_init``), shrunk by ``cfg.backtrack_factor`` until an
    Armijo increase holds, so the trajectory never decreases.

    Besides the gradient test, the run stops once ``STALL_STEPS`` consecutive
    steps change the objective by no more than a few ulps: past that point
    the tangent gradient is rounding noise.
    """
    psi = psi0 / np.linalg.norm(psi0)
    fval = f(psi)
    trajectory = [fval]
    converged = False
    stalled = 0
    prev = None
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gt = tangent(psi, grad(psi))
        gnorm2 = float(np.real(np.vdot(gt, gt)))
        if gnorm2 < cfg.grad_tol**2:
            converged = True
            it -= 1
            break
        t = cfg.step_init
        if prev is not None:
            s = psi - prev[0]
            y = gt - prev[1]
            curv = -float(np.real(np.vdot(s, y)))
            if curv > 0:
                t = min(float(np.real(np.vdot(s, s))) / curv, MAX_STEP)
        prev = (psi, gt)
        while True:
            cand = psi + t * gt
            cand /= np.linalg.norm(cand)
            fc = f(cand)
            if fc >= fval + ARMIJO * t * gnorm2:
                break
            t *= cfg.backtrack_factor
            if t < MIN_STEP:
                cand = None
                break
        if cand is None:
            # No representable ascent left along the gradient.
            converged = True
            it -= 1
            break
        stalled = stalled + 1 if fc - fval <= STALL_ULPS * np.spacing(max(1.0, abs(fval))) else 0
        psi, fval = cand, fc
        trajectory.append(fval)
        if stalled >= STALL_STEPS:
            converged = True
            break
    return AscentRun(psi, trajectory, it, converged)


def _starts(dim: int, cfg: OptimizerConfig, initial_states: Sequence | None) -> list[np.ndarray]:
    starts = [np.asarray(s, dtype=complex).reshape(-1) for s in (initial_states or [])]
    for s in starts:
        if s.shape[0] != dim:
            raise DimensionError(f"initial state has length {s.shape[0]}, expected {dim}")
    if cfg.basis_starts:
        starts.extend(np.eye(dim, dtype=complex))
    for r in range(cfg.restarts):
        starts.append(random_pure_state(dim, np.random.default_rng([cfg.seed, r])))
    return starts


def _prepare(ch):
    # Diagonal maps are applied in Hadamard form; everything else through Kraus.
    return ch if isinstance(ch, DiagonalChannel) else as_kraus(ch)


def estimate_nu_p(
    ch: Channel,
    p: float,
    cfg: OptimizerConfig | None = None,
    initial_states: Sequence | None = None,
) -> PurityEstimate:
    """Estimate ``nu_p(ch) = sup_rho ||ch(rho)||_p``.

    Starts are, in order: ``initial_states``, the computational basis (if
    ``cfg.basis_starts``), then ``cfg.restarts`` Haar-random vectors, the
    ``r``-th drawn from ``default_rng([cfg.seed, r])``.
    """
    cfg = cfg or OptimizerConfig()
    p = check_p(p)
    ch = _prepare(ch)
    dim = ch.dim_in
    if p == 1.0 and ch.trace_preserving:
        e0 = np.eye(dim, dtype=complex)[0]
        return PurityEstimate(p, 1.0, e0, [1.0], [0], True, [[1.0]])

    kern = _Kernel(ch)
    runs = [
        ascend(lambda v: _power_value(kern, v, p), lambda v: _power_grad(kern, v, p), s, cfg)
        for s in _starts(dim, cfg, initial_states)
    ]
    values = [schatten_pnorm(ch.apply(projector(r.psi)), p) for r in runs]
    best = int(np.argmax(values))
    return PurityEstimate(
        p=p,
        value=values[best],
        maximizer=runs[best].psi,
        per_restart_values=values,
        iterations_used=[r.iterations for r in runs],
        converged=runs[best].converged,
        trajectories=[r.trajectory for r in runs],
    )


def estimate_s_min(
    ch: Channel,
    cfg: OptimizerConfig | None = None,
    initial_states: Sequence | None = None,
) -> EntropyEstimate:
    """Estimate ``S_min(ch) = inf_rho S(ch(rho))`` for a trace-preserving map."""
    cfg = cfg or OptimizerConfig()
    ch = _prepare(ch)
    if not ch.trace_preserving:
        raise DomainError("minimal output entropy requires a trace-preserving channel")
    kern = _Kernel(ch)
    runs = [
        ascend(lambda v: -_entropy_value(kern, v), lambda v: -_entropy_grad(kern, v), s, cfg)
        for s in _starts(ch.dim_in, cfg, initial_states)
    ]
    values = [von_neumann_entropy(ch.apply(projector(r.psi))) for r in runs]
    best = int(np.argmin(values))
    return EntropyEstimate(
        value=max(values[best], 0.0),
        minimizer=runs[best].psi,
        per_restart_values=values,
        iterations_used=[r.iterations for r in runs],
        converged=runs[best].converged,
        trajectories=[[-v for v in r.trajectory] for r in runs],
    )


def product_state_lower_bound(phi: Channel, psi: Channel, p: float, cfg: OptimizerConfig | None = None) -> ProductBound:
    """``nu_p(phi) nu_p(psi)``, attained by the product of the two maximizers."""
    cfg = cfg or OptimizerConfig()
    est_phi = estimate_nu_p(phi, p, cfg)
    est_psi = estimate_nu_p(psi, p, cfg)
    witness = np.kron(est_phi.maximizer, est_psi.maximizer)
    return ProductBound(est_phi.value * est_psi.value, witness, est_phi, est_psi)


def estimate_nu_p_product(phi: Channel, psi: Channel, p: float, cfg: OptimizerConfig | None = None):
    """``(nu_p(phi (x) psi), product bound)`` with the product witness injected as restart 0."""
    cfg = cfg or OptimizerConfig()
    bound = product_state_lower_bound(phi, psi, p, cfg)
    joint = estimate_nu_p(tensor(phi, psi), p, cfg, initial_states=[bound.witness])
    return joint, bound
