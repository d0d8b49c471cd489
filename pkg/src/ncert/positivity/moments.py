"""
Eigenvalue and trace minimization with their moment matrices.

The smallest eigenvalue f* of a symmetric f over all matrix tuples is the
largest lambda with f - lambda a sum of hermitian squares. In Gram form
this is: minimize G_{1,1} subject to the coefficient constraints of every
word but the empty one, and f* = f_1 - G_{1,1}. The dual slack of that SDP
is a Hankel matrix M_{u,v} = y(u* v), the moment matrix. When M is flat,
the GNS construction on its column space gives a minimizer (A, v).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..core import Parameters, PreconditionError, SolverError
from ..ncpoly import EMPTY_WORD, MatrixTuple, NcPoly, VariableContext, Word, evaluate, word_basis
from ..sdpcore import SdpStatus, SolverParameters, polish, solve
from .gram import RESIDUAL_TOL, GramBlock, GramSystem, SosCertificate, coefficient_residual, cyclic_key, pair_key
from .sos import require_symmetric

logger = logging.getLogger(__name__)

RANK_TOL = 1e-6
GAP_RATIO = 10.0
SYMMETRY_TOL = 1e-6

OPTIMAL = 'optimal'
UNBOUNDED_BELOW = 'unbounded_below'

OK = 'ok'
NOT_FLAT = 'not_flat'
RANK_AMBIGUOUS = 'rank_ambiguous'


def numerical_rank(M: np.ndarray) -> tuple[int, bool]:
    """
    Rank with singular values below 1e-6 * sigma_max treated as zero.

    Returns:
        tuple[int, bool]: The rank and whether the cut is ambiguous, i.e. the
        singular values on both sides of it differ by less than a factor 10.
    """

    if M.size == 0:
        return 0, False
    s = scipy.linalg.svdvals(M)
    if s[0] == 0:
        return 0, False
    r = int(np.sum(s > RANK_TOL * s[0]))
    if r == len(s) or s[r] == 0:
        return r, False
    return r, bool(s[r - 1] / s[r] < GAP_RATIO)


@dataclass
class MomentMatrix:
    """
    A truncated moment map and its Hankel matrix.

    Parameters:
        context (VariableContext): The algebra.
        order (int): Half the degree of the moment map.
        basis (list[Word]): Words indexing M, at most order long.
        M (np.ndarray): M[u, v] = y(u* v), normalized to y(1) = 1.
        tracial (bool): Whether y only depends on cyclic classes.
    """

    context: VariableContext
    order: int
    basis: list[Word]
    M: np.ndarray
    tracial: bool = False
    y: dict[Word, float] = field(default_factory=dict)
    rank_d: int = 0
    rank_lower: int = 0
    ambiguous: bool = False

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != (len(self.basis), len(self.basis)):
            raise ValueError('moment matrix does not match its basis.')
        M = (M + M.T) / 2
        if EMPTY_WORD in self.basis:
            i0 = self.basis.index(EMPTY_WORD)
            top = M[i0, i0]
            if top > 0:
                M = M / top
        self.M = M

        if not self.y:
            key = cyclic_key(self.context) if self.tracial else None
            for i, u in enumerate(self.basis):
                left = self.context.star(u)
                for j, v in enumerate(self.basis):
                    w = left + v
                    self.y.setdefault(key(w) if key else w, float(M[i, j]))

        self.rank_d, ambiguous_d = numerical_rank(M)
        lower = self.lower_indices()
        self.rank_lower, ambiguous_lower = numerical_rank(M[np.ix_(lower, lower)])
        self.ambiguous = ambiguous_d or ambiguous_lower

    def lower_indices(self) -> list[int]:
        return [i for i, w in enumerate(self.basis) if len(w) < self.order]

    @property
    def flat(self) -> bool:
        return self.order > 0 and self.rank_d == self.rank_lower


@dataclass
class Minimizer:
    """
    A matrix tuple A and unit vector v with <f(A) v, v> = value.
    """

    A: MatrixTuple
    v: np.ndarray
    value: float


@dataclass
class MinimizerResult:
    status: str
    minimizer: Minimizer | None = None


@dataclass
class OptimizationResult:
    """
    Parameters:
        status (str): 'optimal' or 'unbounded_below'.
        f_star (float): The bound; the smallest eigenvalue, or for trace
            minimization the smallest normalized trace certified.
        certificate (SosCertificate): Certifies f - f_star, cyclically for traces.
        moments (MomentMatrix): The dual optimal moment matrix.
    """

    status: str
    f_star: float | None = None
    certificate: SosCertificate | None = None
    moments: MomentMatrix | None = None

    @property
    def bounded(self) -> bool:
        return self.status == OPTIMAL


def _converged(solution, params: SolverParameters) -> bool:
    tol = float(params.tol)
    return solution.status is not SdpStatus.DUAL_INFEASIBLE and bool(solution.X) and max(
        solution.primal_residual, solution.dual_residual, solution.gap) <= tol


def _optimize(f: NcPoly, tracial: bool, parameters: Parameters) -> OptimizationResult:
    require_symmetric(f, 'f')
    context = f.context
    order = math.ceil(max(f.degree, 0) / 2)
    key = cyclic_key(context) if tracial else pair_key(context)

    system = GramSystem(f, key, free_keys={EMPTY_WORD})
    system.add_block(GramBlock(word_basis(context, order)))
    system.prune()
    problem = system.build(objective=EMPTY_WORD)
    params = SolverParameters(parameters)
    solution = solve(problem, params)

    if solution.status is SdpStatus.PRIMAL_INFEASIBLE:
        logger.info('no constant makes f - lambda a sum of squares: unbounded below')
        return OptimizationResult(UNBOUNDED_BELOW)
    if not solution.optimal and _converged(solution, params):
        logger.warning(f'optimization SDP ended with status {solution.status.value} at a converged '
                       f'iterate (||XZ|| = {solution.complementarity:.3g}); the certificate is checked below')
    elif not solution.optimal:
        raise SolverError(f'optimization SDP ended with status {solution.status.value}.')

    basis = system.blocks[0].basis
    G = polish(problem, solution.X)[0]
    i0 = basis.index(EMPTY_WORD)
    f_star = float(f.coefficient(EMPTY_WORD)) - float(G[i0, i0])

    shifted = f - NcPoly.constant(context, f_star)
    certificate = SosCertificate.from_gram(context, basis, G, cyclic=tracial)
    certificate.residual = coefficient_residual(shifted, system.expansion([G]), tracial)
    if certificate.residual > RESIDUAL_TOL:
        raise SolverError(f'certificate residual {certificate.residual:.3g} exceeds {RESIDUAL_TOL}.')

    moments = MomentMatrix(context, order, list(basis), solution.Z[0], tracial=tracial)
    logger.info(f'f* = {f_star:.10g}, moment ranks {moments.rank_d}/{moments.rank_lower}')
    return OptimizationResult(OPTIMAL, f_star, certificate, moments)


def eigenvalue_optimize(f: NcPoly, parameters: Parameters = None) -> OptimizationResult:
    """
    The smallest eigenvalue of f(X) over all tuples X of all sizes.

    Args:
        f (NcPoly): A symmetric polynomial.
        parameters (Parameters): Solver options.

    Returns:
        OptimizationResult: f_star with an SOS certificate for f - f_star and
        the moment matrix, or status 'unbounded_below'.

    Raises:
        SolverError: If the SDP gives no verdict.
    """

    return _optimize(f, False, parameters)


def trace_optimize(f: NcPoly, parameters: Parameters = None) -> OptimizationResult:
    """
    The tracial bound: the largest lambda with f - lambda a sum of hermitian
    squares and commutators, so tr f(X) >= lambda n on n x n tuples.

    The tracial moment matrix is reported with its ranks; no minimizer is
    built from it.
    """

    return _optimize(f, True, parameters)


def extract_minimizer(moments: MomentMatrix, f: NcPoly) -> MinimizerResult:
    """
    Build (A, v) from a flat moment matrix by the GNS construction.

    Factor M = R^T R with R of full row rank r. The columns of R indexed by
    words of length < d span R^r when M is flat; A_j maps the column of w
    to the column of x_j w, and v is the column of the empty word.

    Returns:
        MinimizerResult: 'ok' with the minimizer, 'not_flat', or
        'rank_ambiguous' when the rank decision is numerically unclear.

    Raises:
        PreconditionError: For tracial moment matrices.
    """

    if moments.tracial:
        raise PreconditionError('tracial moment matrices have no GNS extraction.')
    if moments.ambiguous:
        return MinimizerResult(RANK_AMBIGUOUS)
    if not moments.flat:
        return MinimizerResult(NOT_FLAT)

    context = moments.context
    basis = moments.basis
    index = {w: i for i, w in enumerate(basis)}
    lower = moments.lower_indices()

    values, vectors = scipy.linalg.eigh(moments.M)
    r = moments.rank_d
    R = (vectors[:, -r:] * np.sqrt(np.clip(values[-r:], 0, None))).T
    inverse = np.linalg.pinv(R[:, lower])

    mats = []
    for j in range(1, context.g + 1):
        code = context.letter(j)
        shifted = [index.get((code,) + basis[i]) for i in lower]
        if any(s is None for s in shifted):
            logger.info(f'shift by {context.variable_name(j)} leaves the moment basis')
            return MinimizerResult(NOT_FLAT)
        A = R[:, shifted] @ inverse
        if not context.free:
            asymmetry = float(np.max(np.abs(A - A.T)))
            if asymmetry > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(A)))):
                logger.info(f'GNS operator asymmetry {asymmetry:.3g}')
                return MinimizerResult(RANK_AMBIGUOUS)
            A = (A + A.T) / 2
        mats.append(A)

    v = R[:, index[EMPTY_WORD]]
    v = v / np.linalg.norm(v)
    point = MatrixTuple(mats, symmetric=not context.free)
    value = float(v @ evaluate(f, point) @ v)
    logger.info(f'minimizer of size {r} with value {value:.10g}')
    return MinimizerResult(OK, Minimizer(point, v, value))
