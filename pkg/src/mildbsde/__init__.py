"""Mild-solution backward SDE solver on truncated Hilbert spaces."""

from .spectral import (
    AlphaNorm,
    DiagonalOperator,
    EmpiricalConstants,
    dirichlet_laplacian_eigenvalues,
    estimate_constants,
    h_alpha_norm,
    h_alpha_norm_batch,
    interpolation_inequality_check,
    interpolation_norm,
    operator_from_spec,
    semigroup_apply,
    semigroup_convolution,
    smoothing_bound_check,
    yosida_apply,
)
from .wiener import (
    Regression,
    RegressionBasis,
    TimeGrid,
    WienerEnsemble,
    conditional_expectation,
    load_ensemble,
    martingale_z_estimate,
    sample_ensemble,
    save_ensemble,
)
from .solver import (
    BoundedDriver,
    BsdeProblem,
    DissipativeDrift,
    SolutionPair,
    SolverConfig,
    SolverReport,
    apriori_h_bound,
    blowup_bound,
    exponential_shift,
    general_solve,
    global_solve,
    local_solve,
    picard_map,
    residual,
    select_local_radius_and_delta,
    unshift_solution,
    zero_drift,
)
from .gronwall import (
    GronwallInput,
    gronwall_bound_iterative,
    gronwall_constant,
    verify_on_process,
)
from .models import (
    ReactionDiffusionSpec,
    SpinSpec,
    build_preset,
    build_reaction_diffusion,
    build_spin_system,
    check_dissipativity,
    check_growth_and_lipschitz,
    validate_problem,
)

__version__ = "0.1.0"
