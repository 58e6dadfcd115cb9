"""Quantum channels, maximal output p-norms and the diagonal-channel product bound."""

from .channels import (
    ChoiMatrix,
    DiagonalChannel,
    KrausChannel,
    adjoint,
    apply,
    channel_from_choi,
    choi,
    dephasing_channel,
    depolarizing_channel,
    identity_channel,
    is_cp,
    is_trace_preserving,
    kraus_from_diagonal,
    random_channel,
    random_diagonal,
    random_state,
    tensor,
    werner_holevo,
)
from .exceptions import ConvergenceError, DimensionError, DomainError, NotPSDError, ValidationError
from .factorization import (
    build_factorization,
    decompose_state,
    lieb_thirring_check,
    verify_certificate,
)
from .linalg import BlockIndex, schatten_pnorm, von_neumann_entropy
from .purity import (
    OptimizerConfig,
    estimate_nu_p,
    estimate_s_min,
    product_state_lower_bound,
)

__version__ = "0.1.0"
