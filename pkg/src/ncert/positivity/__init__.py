from .gram import GramBlock, GramSystem, IdealTerm, SosCertificate, pair_key, cyclic_key, RESIDUAL_TOL
from .sos import SosResult, TraceZeroResult, sos_decompose, cyclic_sos_decompose, trace_zero_check, ODD_DEGREE
from .moments import (
    MomentMatrix,
    Minimizer,
    MinimizerResult,
    OptimizationResult,
    eigenvalue_optimize,
    trace_optimize,
    extract_minimizer,
    numerical_rank,
    OPTIMAL,
    UNBOUNDED_BELOW,
    OK,
    NOT_FLAT,
    RANK_AMBIGUOUS,
)
from .membership import (
    QmResult,
    IdealResult,
    qm_membership,
    left_ideal_membership,
    MEMBER,
    NOT_MEMBER_AT_DEGREE,
    DEGREE_TOO_SMALL,
)
from .convexity import (
    ConvexityResult,
    DerivativeReport,
    convexity_check,
    kth_derivative_positivity,
    find_counterexample,
    hessian_form,
)
