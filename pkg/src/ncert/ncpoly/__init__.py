from .words import Kind, VariableContext, Word, EMPTY_WORD, word_basis, word_key, cyclic_canonical
from .polynomial import (
    NcPoly,
    MatrixNcPoly,
    BiPoly,
    add,
    scale,
    mul,
    involution,
    cyclic_reduce,
    cyclically_equivalent,
    directional_derivative,
    hessian,
    to_rational,
)
from .parser import parse
from .evaluation import MatrixTuple, evaluate, evaluate_bipoly, trace_value, random_tuple
