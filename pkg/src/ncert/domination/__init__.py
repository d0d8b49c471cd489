from .choi import (
    ChoiSystem,
    DominationCertificate,
    DominationResult,
    SeparatingFunctional,
    check_domination,
    is_bounded,
    DOMINATED,
    SEPARATED,
    SEPARATED_NO_WITNESS,
    PRECONDITION_UNBOUNDED,
)
from .bounds import RadiusResult, SetsEqualResult, radius, matrix_cube, sets_equal
