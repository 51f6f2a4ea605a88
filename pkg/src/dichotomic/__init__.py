"""Verification and simulation toolkit for two-state stochastic jump processes.

The package answers, operationally, whether a family of 2x2 transition
matrices defines a consistent stochastic process on the state space
{1, 2}: propagation consistency and the admissible initial distribution,
Chapman-Kolmogorov certification, the uniform-measure freeze theorem for
symmetric families, the symmetric interpolation of a probability
trajectory with its maximal Markov interval, path-measure feasibility on
finite grids, and Monte Carlo ensemble checks.
"""

from .core import (
    DEFAULT_TOL,
    IDENTITY,
    UNIFORM,
    ProbabilityVector,
    StochasticMatrix,
    TimeGrid,
    ToleranceConfig,
    Trajectory,
    TransitionFamily,
    constant_trajectory,
    family_from_matrices,
    identity_family,
    is_doubly_stochastic,
    is_symmetric,
    matrix_apply,
    matrix_compose,
)
from .chains import (
    AdmissibleInitialResult,
    CKReport,
    FreezeReport,
    IntervalReport,
    admissible_initial,
    ck_certify,
    ck_residual,
    interpolation_family,
    maximal_markov_interval,
    path_consistency_residual,
    propagate,
    symmetric_freeze_check,
    symmetric_interpolation,
)
from .errors import (
    CapacityError,
    DegenerateSourceError,
    DichotomicError,
    InconsistentSpecError,
    PositivityError,
    SymmetryError,
    UndefinedConditionalError,
    UndefinedEstimateError,
    ValidationError,
)
from .hierarchy import (
    FeasibilityResult,
    PairwiseSpec,
    PathMeasure,
    check_consistency,
    check_hierarchy,
    feasibility_solve,
    induced_spec,
    marginal,
    markov_closure_residual,
    markov_joint,
    pairwise_transition,
    spec_from_family,
)
from .montecarlo import (
    Ensemble,
    EnsembleConfig,
    SamplePath,
    empirical_marginals,
    empirical_transition,
    sample_paths,
    z_scores,
)
from .quantum import (
    QuantumTrajectoryConfig,
    TwoLevelState,
    born_marginals,
    evolve_state,
    gillespie_family,
    quantum_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleInitialResult",
    "CKReport",
    "CapacityError",
    "DEFAULT_TOL",
    "DegenerateSourceError",
    "DichotomicError",
    "Ensemble",
    "EnsembleConfig",
    "FeasibilityResult",
    "FreezeReport",
    "IDENTITY",
    "InconsistentSpecError",
    "IntervalReport",
    "PairwiseSpec",
    "PathMeasure",
    "PositivityError",
    "ProbabilityVector",
    "QuantumTrajectoryConfig",
    "SamplePath",
    "StochasticMatrix",
    "SymmetryError",
    "TimeGrid",
    "ToleranceConfig",
    "Trajectory",
    "TransitionFamily",
    "TwoLevelState",
    "UNIFORM",
    "UndefinedConditionalError",
    "UndefinedEstimateError",
    "ValidationError",
    "admissible_initial",
    "born_marginals",
    "check_consistency",
    "check_hierarchy",
    "ck_certify",
    "ck_residual",
    "constant_trajectory",
    "empirical_marginals",
    "empirical_transition",
    "evolve_state",
    "family_from_matrices",
    "feasibility_solve",
    "gillespie_family",
    "identity_family",
    "induced_spec",
    "interpolation_family",
    "is_doubly_stochastic",
    "is_symmetric",
    "marginal",
    "markov_closure_residual",
    "markov_joint",
    "matrix_apply",
    "matrix_compose",
    "maximal_markov_interval",
    "pairwise_transition",
    "path_consistency_residual",
    "propagate",
    "quantum_trajectory",
    "sample_paths",
    "spec_from_family",
    "symmetric_freeze_check",
    "symmetric_interpolation",
    "z_scores",
]
