"""Minimax Huber M-estimation of regression in the proportional regime ``n/p -> m``."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConvergenceError,
    DomainError,
    HuberMinimaxError,
    NoSolution,
    SingularSystem,
    SlopeInfeasible,
)
from .scalar_huber import (  # noqa: E402
    ClassicalMinimax,
    ContaminationModel,
    a_bar,
    a_gauss,
    b_bar,
    b_gauss,
    classical_minimax,
    j_info,
    psi,
    psi_prime,
    regularized_psi,
    regularized_psi_prime,
    rho,
    v_bar,
)
from .state_evolution import (  # noqa: E402
    FixedLambda,
    FloatingKappa,
    SEConfig,
    SEFixedPoint,
    T_map,
    calibrate_kappa_from_lambda,
    calibrate_lambda_from_kappa,
    eff_slope_B,
    fixed_point,
    solve_r,
    variance_map_A,
)
from .lfse import (  # noqa: E402
    LFSEParams,
    MinimaxSolution,
    PhaseGrid,
    breakdown_epsilon,
    critical_curve,
    kappa_plus,
    kappa_underline,
    lambda_bar,
    lfse_fixed_point,
    lfse_T,
    minimax,
    phase_grid,
    solve_rbarbar,
    suboptimality_ratio,
)
from .amp import (  # noqa: E402
    AMPState,
    Dataset,
    MCSummary,
    amp_fit,
    gen_dataset,
    irls_fit,
    monte_carlo,
)
