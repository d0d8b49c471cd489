from .linear import (
    LinearPencil,
    PencilMembership,
    eval_pencil,
    membership,
    direct_sum,
    direct_sum_all,
    ball_pencil,
    cube_pencil,
    CLOSURE_TOL,
)
from .structure import (
    EquivalenceResult,
    unitarily_equivalent,
    irreducible_blocks,
    minimal_defining_pencil,
    EQUIVALENT,
    NOT_EQUIVALENT,
    NO_WITNESS,
)
