"""
Sums of hermitian squares, exact and modulo commutators.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..core import ConsistencyError, ContextMismatchError, Parameters, PreconditionError, SolverError
from ..ncpoly import NcPoly, Word, cyclic_reduce, random_tuple, trace_value, word_basis
from ..sdpcore import SdpStatus, SolverParameters, feasibility, polish
from .gram import (
    RESIDUAL_TOL,
    GramBlock,
    GramSystem,
    SosCertificate,
    coefficient_residual,
    cyclic_key,
    pair_key,
)

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-8
TRACE_SAMPLES = 200
ODD_DEGREE = 'odd degree'


@dataclass
class SosResult:
    """
    Parameters:
        feasible (bool): Whether a certificate was found at the natural degree.
        certificate (SosCertificate): The certificate when feasible.
        dual (dict[Word, float]): On infeasibility, a functional on the
            constraint keys that is nonnegative on the squares and -1 on p.
        reason (str): Why no SDP was needed, if so.
    """

    feasible: bool
    certificate: SosCertificate | None = None
    dual: dict[Word, float] | None = None
    reason: str | None = None

    @property
    def status(self) -> str:
        return 'sos' if self.feasible else 'infeasible'


@dataclass(frozen=True)
class TraceZeroResult:
    zero: bool
    max_trace: float | None = None

    def __bool__(self) -> bool:
        return self.zero


def require_symmetric(p: NcPoly, what: str = 'p') -> None:
    if not p.is_symmetric():
        raise PreconditionError(f'{what} must be symmetric.')


def require_context(p: NcPoly, q: NcPoly) -> None:
    if p.context != q.context:
        raise ContextMismatchError('polynomials come from different contexts.')


def solve_gram(system: GramSystem, parameters: Parameters = None) -> tuple[list[np.ndarray] | None, dict | None]:
    """
    Run the feasibility SDP of a Gram system.

    Returns:
        tuple: The polished block matrices when feasible, else None and the
        separating functional (None when the system had no variables).

    Raises:
        SolverError: If the solver gives no verdict.
    """

    system.prune()
    if not any(block.basis for block in system.blocks) and not system.ideal_terms:
        if system.target.is_zero():
            return [], None
        logger.info('no Gram variable reaches the target')
        return None, None

    problem = system.build()
    solution = feasibility(problem, SolverParameters(parameters))
    if solution.feasible:
        return polish(problem, solution.X), None
    if solution.status is SdpStatus.PRIMAL_INFEASIBLE:
        dual = system.functional(solution.ray) if solution.ray is not None else None
        return None, dual
    raise SolverError(f'Gram SDP ended with status {solution.status.value}.')


def _zero_certificate(p: NcPoly, cyclic: bool) -> SosResult:
    # the empty sum; the degree of the zero polynomial is -1
    return SosResult(True, SosCertificate.from_gram(p.context, [], np.zeros((0, 0)), cyclic=cyclic))


def chip_basis(p: NcPoly, basis: list[Word]) -> list[Word]:
    """
    Keep only the basis words that are right factors of words of p.

    Experimental; never used unless asked for.
    """

    suffixes = {w[i:] for w in p.coeffs for i in range(len(w) + 1)}
    return [u for u in basis if u in suffixes]


def decompose_on_basis(p: NcPoly, basis: list[Word], cyclic: bool, parameters: Parameters) -> SosResult:
    context = p.context
    key = cyclic_key(context) if cyclic else pair_key(context)
    system = GramSystem(p, key)
    system.add_block(GramBlock(basis))

    X, dual = solve_gram(system, parameters)
    if X is None:
        return SosResult(False, dual=dual)

    block = system.blocks[0]
    G = system.block_matrices(X)[0] if block.basis else np.zeros((0, 0))
    certificate = SosCertificate.from_gram(context, block.basis, G, cyclic=cyclic)
    certificate.residual = coefficient_residual(p, system.expansion(X), cyclic)
    if certificate.residual > RESIDUAL_TOL:
        raise SolverError(f'certificate residual {certificate.residual:.3g} exceeds {RESIDUAL_TOL}.')
    logger.info(f'{"cyclic " if cyclic else ""}SOS certificate with {len(certificate.factors)} squares')
    return SosResult(True, certificate)


def sos_decompose(p: NcPoly, parameters: Parameters = None, chip: bool = False) -> SosResult:
    """
    Write p as a sum of hermitian squares.

    Args:
        p (NcPoly): A symmetric polynomial.
        parameters (Parameters): Solver options.
        chip (bool): Restrict the Gram basis to right factors of words of p.

    Returns:
        SosResult: The certificate, or the separating functional.
    """

    require_symmetric(p)
    if p.is_zero():
        return _zero_certificate(p, cyclic=False)
    if p.degree % 2 == 1:
        return SosResult(False, reason=ODD_DEGREE)

    basis = word_basis(p.context, max(p.degree, 0) // 2)
    if chip:
        basis = chip_basis(p, basis)
    return decompose_on_basis(p, basis, False, parameters)


def cyclic_sos_decompose(p: NcPoly, parameters: Parameters = None) -> SosResult:
    """
    Write p as a sum of hermitian squares plus a sum of commutators.

    A certificate implies tr p(X) >= 0 for every tuple of matrices X.
    """

    require_symmetric(p)
    degree = cyclic_reduce(p).degree
    if degree < 0:
        return _zero_certificate(p, cyclic=True)
    if degree % 2 == 1:
        return SosResult(False, reason=ODD_DEGREE)
    return decompose_on_basis(p, word_basis(p.context, max(degree, 0) // 2), True, parameters)


def trace_zero_check(p: NcPoly, parameters: Parameters = None) -> TraceZeroResult:
    """
    Whether p is a sum of commutators, i.e. its trace vanishes on every tuple.

    A positive answer is confirmed on 200 random tuples of size at most 4.

    Raises:
        ConsistencyError: If a sampled trace of a sum of commutators is not zero.
    """

    if not cyclic_reduce(p).is_zero():
        return TraceZeroResult(False)

    seed = parameters.seed if parameters is not None else 0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(TRACE_SAMPLES):
        X = random_tuple(rng, p.context.g, trial % 4 + 1, symmetric=not p.context.free)
        worst = max(worst, abs(trace_value(p, X)))
    if worst > TRACE_TOL:
        raise ConsistencyError(f'sum of commutators with sampled trace {worst:.3g}.')
    return TraceZeroResult(True, worst)
