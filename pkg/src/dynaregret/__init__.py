"""Online gradient descent in drifting environments: regret, queries, and bound checks."""

from .bounds import (
    BoundInputs,
    BoundReport,
    bound_J1,
    bound_J2,
    bound_J3,
    bound_J4,
    bound_Ro,
    build_report,
    check_contraction,
    check_descent_lemma,
    check_drift_recursion,
    check_proximal_equivalence,
    check_smooth_gap_lemma,
    rho,
)
from .core import Ball, Box, CurvatureProfile, QuadraticLoss, Unconstrained, condition_number, project
from .environments import (
    Bursty,
    ConstantDrift,
    DecayingDrift,
    EnvironmentInstance,
    EnvironmentSpec,
    Static,
    generate,
    make_illconditioned_matrix,
    verify_variation_bound,
)
from .learners import OGD, OMGD, LearnerState, StepSchedule, inner_loop_count, recommended_step_size, run
from .metrics import (
    Trace,
    dynamic_regret,
    path_length,
    realized_constants,
    regret_decomposition,
    regret_report,
    squared_path_length,
)

__version__ = "0.1.0"
