"""
Matrix convexity of symmetric polynomials.

A symmetric p is matrix convex iff its Hessian p''(x)[h] is a sum of
squares, and that only happens in degree two or less. The decision runs
both the degree argument and an SOS search over factors linear in h, and
refuses to answer when they disagree.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..core import ConsistencyError, Parameters
from ..ncpoly import MatrixTuple, NcPoly, Word, directional_derivative, evaluate, random_tuple, word_basis
from ..ncpoly.words import h_degree
from .sos import SosResult, decompose_on_basis, require_symmetric

logger = logging.getLogger(__name__)

SEARCH_TRIALS = 10_000
SEARCH_MAX_SIZE = 3
SEARCH_SCALE = 2.0
PSD_TOL = 1e-9


@dataclass
class ConvexityResult:
    """
    Parameters:
        convex (bool): The agreed verdict.
        reason (str): Why, in words.
        counterexample (tuple[MatrixTuple, MatrixTuple]): X, Y with
            p((X+Y)/2) not below (p(X) + p(Y))/2, when one was found.
        certificate (SosResult): The Hessian SOS search.
    """

    convex: bool
    reason: str
    counterexample: tuple[MatrixTuple, MatrixTuple] | None = None
    certificate: SosResult | None = None


@dataclass(frozen=True)
class DerivativeReport:
    k: int
    degree: int
    sos_feasible: bool
    consistent: bool
    reason: str


def _h_basis(p: NcPoly, h_letters: int, length: int) -> list[Word]:
    g = p.context.g
    return [w for w in word_basis(p.context.doubled(), length) if h_degree(w, g) == h_letters]


def _derivative_sos(p: NcPoly, k: int, parameters: Parameters) -> SosResult:
    """
    SOS search for p^(k)(x)[h] over factors homogeneous of degree k/2 in h.
    """

    derivative = directional_derivative(p, k).poly
    if derivative.is_zero():
        return SosResult(True, reason='zero derivative')
    if k % 2 == 1 or derivative.degree % 2 == 1:
        return SosResult(False, reason='odd degree')
    basis = _h_basis(p, k // 2, derivative.degree // 2)
    return decompose_on_basis(derivative, basis, False, parameters)


def hessian_form(p: NcPoly) -> np.ndarray:
    """
    The Gram matrix Q of the degree-two part over the letters: p_2 = sum Q_ab a* b.
    """

    context = p.context
    letters = context.alphabet()
    Q = np.zeros((len(letters), len(letters)))
    for i, a in enumerate(letters):
        for j, b in enumerate(letters):
            Q[i, j] = float(p.coefficient((context.star_letter(a), b)))
    return (Q + Q.T) / 2


def _degree_path(p: NcPoly) -> tuple[bool, str]:
    if p.degree > 2:
        return False, f'degree {p.degree} exceeds two'
    if p.degree < 2:
        return True, 'zero Hessian'
    if scipy.linalg.eigvalsh(hessian_form(p))[0] >= -PSD_TOL:
        return True, 'Hessian quadratic form is positive semidefinite'
    return False, 'Hessian quadratic form is indefinite'


def find_counterexample(p: NcPoly, parameters: Parameters = None) -> tuple[MatrixTuple, MatrixTuple] | None:
    """
    Sample pairs X, Y of size at most 3 until midpoint convexity fails.
    """

    seed = parameters.seed if parameters is not None else 0
    rng = np.random.default_rng(seed)
    context = p.context
    for trial in range(SEARCH_TRIALS):
        n = trial % SEARCH_MAX_SIZE + 1
        X = random_tuple(rng, context.g, n, symmetric=not context.free, scale=SEARCH_SCALE)
        Y = random_tuple(rng, context.g, n, symmetric=not context.free, scale=SEARCH_SCALE)
        gap = (evaluate(p, X) + evaluate(p, Y)) / 2 - evaluate(p, X.combine(Y, 0.5, 0.5))
        gap = (gap + gap.T) / 2
        if scipy.linalg.eigvalsh(gap)[0] < -PSD_TOL * max(1.0, float(np.max(np.abs(gap)))):
            logger.debug(f'counterexample found after {trial + 1} trials')
            return X, Y
    logger.info(f'no counterexample in {SEARCH_TRIALS} trials')
    return None


def convexity_check(p: NcPoly, parameters: Parameters = None, search: bool = True) -> ConvexityResult:
    """
    Decide matrix convexity of p.

    Args:
        p (NcPoly): A symmetric polynomial.
        parameters (Parameters): Solver options and the sampling seed.
        search (bool): Look for a counterexample pair when p is not convex.

    Raises:
        ConsistencyError: If the degree argument and the Hessian SOS search disagree.
    """

    require_symmetric(p)
    convex, reason = _degree_path(p)
    certificate = _derivative_sos(p, 2, parameters)
    if certificate.feasible != convex:
        raise ConsistencyError(
            f'convexity paths disagree: degree argument says {convex} ({reason}), '
            f'Hessian SOS search says {certificate.feasible}.')

    counterexample = find_counterexample(p, parameters) if search and not convex else None
    return ConvexityResult(convex, reason, counterexample, certificate)


def kth_derivative_positivity(p: NcPoly, k: int, parameters: Parameters = None) -> DerivativeReport:
    """
    Check that p^(k)(x)[h] is only a sum of squares when deg p <= k.

    Raises:
        ConsistencyError: If the k-th derivative of a polynomial of degree
            above k is found to be a sum of squares.
    """

    require_symmetric(p)
    if not isinstance(k, int) or k < 1:
        raise ValueError('derivative order must be a positive integer.')

    result = _derivative_sos(p, k, parameters)
    if result.feasible and p.degree > k:
        raise ConsistencyError(f'derivative of order {k} of a degree {p.degree} polynomial is a sum of squares.')

    if p.degree > k:
        reason = f'degree {p.degree} > {k}: not a sum of squares, as required'
    else:
        reason = f'degree {p.degree} <= {k}: no constraint on the outcome'
    return DerivativeReport(k, p.degree, result.feasible, True, reason)
