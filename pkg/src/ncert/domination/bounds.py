import logging
import math
from dataclasses import dataclass

from ..core import ConsistencyError, Parameters, PreconditionError, SolverError
from ..pencil import LinearPencil, ball_pencil, cube_pencil, minimal_defining_pencil, unitarily_equivalent
from ..sdpcore import SolverParameters
from .choi import PRECONDITION_UNBOUNDED, DominationResult, check_domination, is_bounded

logger = logging.getLogger(__name__)

LOWER = 1e-6
UPPER = 1e6
RELATIVE_WIDTH = 1e-3
TIGHT_TOL = 1e-10
_NUDGES = 5


@dataclass(frozen=True)
class RadiusResult:
    """
    Parameters:
        bounded (bool): Whether D_L(1) fits in the ball of radius 1e6.
        rho (float): Least radius r with sum X_j^2 <= r^2 I on D_L, within the bisection width.
        bracket (tuple[float, float]): Infeasible and feasible ends of the final bracket.
    """

    bounded: bool
    rho: float | None = None
    bracket: tuple[float, float] | None = None


@dataclass(frozen=True)
class SetsEqualResult:
    equal: bool
    forward: DominationResult
    backward: DominationResult
    minimal_equivalence: bool | None = None
    via: str = 'mutual domination'


def _tight(parameters: Parameters) -> SolverParameters:
    return SolverParameters(parameters, tol=TIGHT_TOL, slack_tol=TIGHT_TOL)


def _verdict(check, value: float, parameters: Parameters) -> bool | None:
    """
    check(value, parameters), or None when the solver gives no verdict.
    """

    try:
        return check(value, parameters)
    except SolverError as e:
        logger.warning(f'no verdict at {value:.9g}: {e}')
        return None


def _bisect(feasible, lo: float, hi: float, feasible_high: bool) -> tuple[float, float]:
    """
    Geometric bisection on a monotone predicate until hi/lo <= 1 + width.

    feasible_high says the predicate holds at hi (radius search) rather than
    at lo (cube search).
    """

    steps = 0
    while hi / lo > 1 + RELATIVE_WIDTH:
        mid = math.sqrt(lo * hi)
        ok = feasible(mid)
        if ok == feasible_high:
            hi = mid
        else:
            lo = mid
        steps += 1
    logger.debug(f'bisection finished after {steps} steps on [{lo:.9g}, {hi:.9g}]')
    return lo, hi


def radius(L: LinearPencil, parameters: Parameters = None) -> RadiusResult:
    """
    The radius of D_L: the least r with D_L inside the ball sum X_j^2 < r^2 I.

    Bisects on r over [1e-6, 1e6] to relative width 1e-3 and re-verifies the
    final bracket at solver tolerance 1e-10. A radius the tight solve cannot
    decide keeps the bound verified during bisection.

    Returns:
        RadiusResult: bounded is False when even r = 1e6 fails.
    """

    L.require_monic()

    def contained(r: float, params: Parameters) -> bool:
        return check_domination(L, ball_pencil(L.g, r), params, check_bounded=False).dominated

    if not is_bounded(L, parameters):
        logger.info('D_L(1) is unbounded')
        return RadiusResult(False)

    if _verdict(contained, LOWER, parameters):
        return RadiusResult(True, LOWER, (LOWER, LOWER))

    # no verdict counts as not contained, so hi only moves to verified radii
    lo, hi = _bisect(lambda r: bool(_verdict(contained, r, parameters)), LOWER, UPPER, feasible_high=True)

    tight = _tight(parameters)
    candidate = hi
    for _ in range(_NUDGES):
        ok = _verdict(contained, candidate, tight)
        if ok:
            hi = candidate
            break
        if ok is None:
            logger.warning(f'keeping radius {hi:.9g} verified at the default tolerance')
            break
        logger.warning(f'radius {candidate:.9g} failed re-verification, widening')
        candidate *= 1 + RELATIVE_WIDTH
    else:
        logger.warning(f'no widened radius re-verified; keeping {hi:.9g} verified at the default tolerance')
    if _verdict(contained, lo, tight):
        logger.warning(f'lower radius bracket {lo:.9g} verified feasible at tight tolerance')

    logger.info(f'radius {hi:.9g}')
    return RadiusResult(True, hi, (lo, hi))


def matrix_cube(L: LinearPencil, parameters: Parameters = None) -> float:
    """
    The largest half-width b with the matrix cube -bI < X_j < bI inside D_L.

    Returns:
        float: beta, certified feasible; beta * (1 + 2e-3) is certified infeasible.

    Raises:
        PreconditionError: If D_L(1) is unbounded or not even the smallest cube fits.
        ConsistencyError: If the tight solve still fits a cube 2e-3 wider than beta.
    """

    L.require_monic()
    if not is_bounded(L, parameters):
        raise PreconditionError('D_L(1) is unbounded.')

    def inside(b: float, params: Parameters) -> bool:
        return check_domination(cube_pencil(L.g, b), L, params, check_bounded=False).dominated

    if not _verdict(inside, LOWER, parameters):
        raise PreconditionError(f'no cube of half-width {LOWER} fits in D_L.')

    lo, hi = _bisect(lambda b: bool(_verdict(inside, b, parameters)), LOWER, UPPER, feasible_high=False)

    tight = _tight(parameters)
    candidate = lo
    for _ in range(_NUDGES):
        ok = _verdict(inside, candidate, tight)
        if ok:
            lo = candidate
            break
        if ok is None:
            logger.warning(f'keeping half-width {lo:.9g} verified at the default tolerance')
            break
        logger.warning(f'cube half-width {candidate:.9g} failed re-verification, shrinking')
        candidate /= 1 + RELATIVE_WIDTH
    else:
        logger.warning(f'no shrunk half-width re-verified; keeping {lo:.9g} verified at the default tolerance')
    if _verdict(inside, lo * (1 + 2 * RELATIVE_WIDTH), tight):
        raise ConsistencyError(f'cube of half-width {lo * (1 + 2 * RELATIVE_WIDTH):.9g} still fits.')

    logger.info(f'matrix cube half-width {lo:.9g}')
    return lo


def sets_equal(L1: LinearPencil, L2: LinearPencil, parameters: Parameters = None) -> SetsEqualResult:
    """
    Decide D_L1 = D_L2 by domination in both directions.

    When equal, the minimal defining pencils of both sides must be
    unitarily equivalent; anything else is a consistency failure.

    Raises:
        PreconditionError: If either domain is unbounded at level one.
        ConsistencyError: If equal sets have inequivalent minimal pencils.
    """

    forward = check_domination(L1, L2, parameters)
    backward = check_domination(L2, L1, parameters)
    if PRECONDITION_UNBOUNDED in (forward.status, backward.status):
        raise PreconditionError('both domains must be bounded at level one.')

    equal = forward.dominated and backward.dominated
    if not equal:
        return SetsEqualResult(False, forward, backward)

    minimal1 = minimal_defining_pencil(L1, parameters)
    minimal2 = minimal_defining_pencil(L2, parameters)
    equivalence = unitarily_equivalent(minimal1, minimal2, parameters)
    if not equivalence.equivalent:
        raise ConsistencyError('equal domains with inequivalent minimal pencils.')

    return SetsEqualResult(True, forward, backward, True)
