from .ncbase import (
    NcertError,
    ContextMismatchError,
    ShapeMismatchError,
    PreconditionError,
    SolverError,
    ConsistencyError,
    ParseError,
    Parameters,
    Reporter,
    StreamReporter,
    FileReporter,
)
