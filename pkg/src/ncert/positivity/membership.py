"""
Membership in quadratic modules and left ideals at a fixed degree.

Every verdict is relative to the degree budget: failing at degree d says
nothing about membership at a larger degree.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from ..core import Parameters, SolverError
from ..ncpoly import NcPoly, Word, word_basis, word_key
from .gram import PSD_TOL, RESIDUAL_TOL, GramBlock, GramSystem, IdealTerm, SosCertificate, coefficient_residual, pair_key
from .sos import require_context, require_symmetric, solve_gram

logger = logging.getLogger(__name__)

MEMBER = 'member'
NOT_MEMBER_AT_DEGREE = 'not_member_at_degree'
DEGREE_TOO_SMALL = 'degree_too_small'

IDEAL_CUTOFF = 1e-12


@dataclass
class QmResult:
    """
    Parameters:
        status (str): 'member', 'not_member_at_degree' or 'degree_too_small'.
        degree (int): The relaxation degree d.
        sigma (SosCertificate): The sum of squares part.
        localizing (list[SosCertificate]): One weighted block per generator q_i.
        ideal (list[tuple[IdealTerm, float]]): Coefficients of the ideal terms a r b.
        residual (float): Coefficient error of the whole identity.
        dual (dict[Word, float]): Separating functional on failure.
    """

    status: str
    degree: int
    sigma: SosCertificate | None = None
    localizing: list[SosCertificate] = field(default_factory=list)
    ideal: list[tuple[IdealTerm, float]] = field(default_factory=list)
    residual: float | None = None
    dual: dict[Word, float] | None = None

    @property
    def member(self) -> bool:
        return self.status == MEMBER

    def measure(self, p: NcPoly, ideal: list[NcPoly] | None = None) -> float:
        expansion: dict[Word, float] = defaultdict(float)
        for block in [self.sigma, *self.localizing]:
            for w, c in block.expansion().items():
                expansion[w] += c
        generators = list(ideal or [])
        for term, c in self.ideal:
            for w, v in term.poly(generators).coeffs.items():
                expansion[w] += c * float(v)
        self.residual = coefficient_residual(p, expansion)
        return self.residual

    def verify(self, p: NcPoly, ideal: list[NcPoly] | None = None, tol: float = RESIDUAL_TOL) -> bool:
        """
        Re-check the whole identity and every Gram block against p without solving.
        """

        if not self.member or self.sigma is None:
            return False
        blocks = [self.sigma, *self.localizing]
        return self.measure(p, ideal) <= tol and all(b.min_eigenvalue() >= -PSD_TOL for b in blocks)


@dataclass
class IdealResult:
    status: str
    degree: int
    cofactors: list[NcPoly] | None = None

    @property
    def member(self) -> bool:
        return self.status == MEMBER


def qm_membership(p: NcPoly, q: list[NcPoly], d: int, ideal: list[NcPoly] | None = None,
                  parameters: Parameters = None) -> QmResult:
    """
    Search p = sigma_0 + sum_i sum_j f_ij* q_i f_ij (+ sum c a r b) at degree d.

    sigma_0 has a Gram matrix over words of degree <= d and the block of q_i
    one over words of degree <= d - ceil(deg q_i / 2). Ideal generators r
    contribute free coefficients on every a r b of degree <= 2d.

    Args:
        p (NcPoly): The symmetric polynomial to certify.
        q (list[NcPoly]): Symmetric generators of the quadratic module.
        d (int): The relaxation degree.
        ideal (list[NcPoly]): Generators of a two-sided ideal, not necessarily symmetric.
        parameters (Parameters): Solver options.

    Returns:
        QmResult: The certificate, 'not_member_at_degree' with the dual
        functional, or 'degree_too_small' when p or a generator does not fit.
    """

    ideal = list(ideal or [])
    require_symmetric(p)
    for i, qi in enumerate(q, start=1):
        require_context(p, qi)
        require_symmetric(qi, f'q{i}')
    for r in ideal:
        require_context(p, r)
    if not isinstance(d, int) or d < 0:
        raise ValueError('degree must be a nonnegative integer.')

    sizes = [d - math.ceil(max(qi.degree, 0) / 2) for qi in q]
    if p.degree > 2 * d or any(s < 0 for s in sizes) or any(r.degree > 2 * d for r in ideal):
        logger.info(f'degree {d} is too small for the data')
        return QmResult(DEGREE_TOO_SMALL, d)

    context = p.context
    system = GramSystem(p, pair_key(context))
    system.add_block(GramBlock(word_basis(context, d)))
    for i, (qi, s) in enumerate(zip(q, sizes), start=1):
        system.add_block(GramBlock(word_basis(context, s), qi, label=f'q{i}', prune=False))
    for r in ideal:
        system.add_ideal(r, 2 * d)

    X, dual = solve_gram(system, parameters)
    if X is None:
        return QmResult(NOT_MEMBER_AT_DEGREE, d, dual=dual)

    residual = coefficient_residual(p, system.expansion(X))
    if residual > RESIDUAL_TOL:
        raise SolverError(f'quadratic module certificate residual {residual:.3g} exceeds {RESIDUAL_TOL}.')

    grams = system.block_matrices(X)
    blocks = [SosCertificate.from_gram(context, block.basis, G, weight=block.weight)
              for block, G in zip(system.blocks, grams)]
    terms = [(t, c) for t, c in zip(system.ideal_terms, system.ideal_coefficients(X)) if abs(c) > IDEAL_CUTOFF]
    logger.info(f'member of the quadratic module at degree {d}')
    return QmResult(MEMBER, d, blocks[0], blocks[1:], terms, residual)


def _rational(value) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


def left_ideal_membership(p: NcPoly, q: list[NcPoly], d: int) -> IdealResult:
    """
    Solve p = sum r_i q_i exactly with deg r_i <= d - deg q_i.

    The unknowns are the coefficients of r_i; matching coefficients of every
    word gives a rational linear system, row reduced with sympy. Sound and
    complete at degree d.

    Returns:
        IdealResult: 'member' with the cofactors r_i, 'not_member_at_degree',
        or 'degree_too_small' when d < deg p.
    """

    for qi in q:
        require_context(p, qi)
    if d < p.degree:
        return IdealResult(DEGREE_TOO_SMALL, d)

    context = p.context
    unknowns: list[tuple[int, Word]] = []
    columns: list[dict[Word, Fraction]] = []
    for i, qi in enumerate(q):
        if qi.is_zero() or qi.degree > d:
            continue
        for a in word_basis(context, d - qi.degree):
            unknowns.append((i, a))
            columns.append(dict((NcPoly.monomial(context, a) * qi).coeffs))

    words = set(p.coeffs)
    for col in columns:
        words.update(col)
    words = sorted(words, key=word_key)

    if not unknowns:
        if p.is_zero():
            return IdealResult(MEMBER, d, [NcPoly.zero(context) for _ in q])
        return IdealResult(NOT_MEMBER_AT_DEGREE, d)

    rows = [[_rational(col.get(w, 0)) for col in columns] + [_rational(p.coefficient(w))] for w in words]
    reduced, pivots = sympy.Matrix(rows).rref()
    n = len(unknowns)
    if n in pivots:
        logger.info(f'not in the left ideal at degree {d}')
        return IdealResult(NOT_MEMBER_AT_DEGREE, d)

    solution = [Fraction(0)] * n
    for row, col in enumerate(pivots):
        value = reduced[row, n]
        solution[col] = Fraction(int(value.p), int(value.q))

    cofactors = [dict() for _ in q]
    for (i, a), c in zip(unknowns, solution):
        if c:
            cofactors[i][a] = c
    return IdealResult(MEMBER, d, [NcPoly(context, c) for c in cofactors])

