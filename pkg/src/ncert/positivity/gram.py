"""
Gram-matrix SDPs for hermitian squares.

A system collects psd blocks, each contributing sum_{u,v} G_uv u* q v for
a weight q (1 for a plain Gram block), and free scalar ideal terms a*r*b.
Coefficient constraints are grouped by a key on words: the star pair
{w, w*} for plain identities, or the cyclic class of w merged with that of
w* when equality is only required modulo commutators. Both the certificate
and the target are symmetric, so one constraint per key suffices.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np
import scipy.linalg

from ..core import PreconditionError
from ..ncpoly import EMPTY_WORD, NcPoly, VariableContext, Word, cyclic_canonical, word_basis, word_key
from ..sdpcore import SdpBuilder, SdpProblem

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-7
PSD_TOL = 1e-9
FACTOR_CUTOFF = 1e-12

KeyFunction = Callable[[Word], Word]


def pair_key(context: VariableContext) -> KeyFunction:
    def key(word: Word) -> Word:
        return min(word, context.star(word))
    return key


def cyclic_key(context: VariableContext) -> KeyFunction:
    def key(word: Word) -> Word:
        return min(cyclic_canonical(word), cyclic_canonical(context.star(word)))
    return key


@dataclass
class GramBlock:
    """
    One psd block of a certificate.

    Parameters:
        basis (list[Word]): Words indexing rows and columns.
        weight (NcPoly): The localizing polynomial q, None for q = 1.
        label (str): Name used in reports.
        prune (bool): Whether zero-diagonal pruning may drop basis words.
    """

    basis: list[Word]
    weight: NcPoly | None = None
    label: str = 'sos'
    prune: bool = True

    def weight_terms(self) -> list[tuple[Word, float]]:
        if self.weight is None:
            return [(EMPTY_WORD, 1.0)]
        return [(w, float(c)) for w, c in self.weight.terms()]

    def contributions(self, context: VariableContext) -> Iterator[tuple[int, int, Word, float]]:
        """
        Yield (i, j, word, coefficient) for every word of u_i* q u_j.
        """

        terms = self.weight_terms()
        for i, u in enumerate(self.basis):
            left = context.star(u)
            for j, v in enumerate(self.basis):
                for w, c in terms:
                    yield i, j, left + w + v, c


@dataclass(frozen=True)
class IdealTerm:
    """
    A free multiple c * a r b of an ideal generator.
    """

    left: Word
    generator: int
    right: Word

    def poly(self, generators: list[NcPoly]) -> NcPoly:
        r = generators[self.generator]
        context = r.context
        return NcPoly.monomial(context, self.left) * r * NcPoly.monomial(context, self.right)


@dataclass
class SosCertificate:
    """
    A Gram matrix G over a word basis with its factors.

    Parameters:
        context (VariableContext): The algebra of the certified polynomial.
        basis (list[Word]): The Gram basis W.
        G (np.ndarray): The psd Gram matrix, p = W* G W.
        factors (list[NcPoly]): h_j with p = sum h_j* h_j.
        residual (float): Largest coefficient error of the reconstruction.
        cyclic (bool): Whether the identity holds modulo commutators only.
        weight (NcPoly): Localizing polynomial q when the block certifies sum h_j* q h_j.
    """

    context: VariableContext
    basis: list[Word]
    G: np.ndarray
    factors: list[NcPoly] = field(default_factory=list)
    residual: float = 0.0
    cyclic: bool = False
    weight: NcPoly | None = None

    @classmethod
    def from_gram(cls, context: VariableContext, basis: list[Word], G: np.ndarray, cyclic: bool = False,
                  weight: NcPoly | None = None) -> 'SosCertificate':
        G = (G + G.T) / 2 if G.size else np.zeros((0, 0))
        return cls(context, list(basis), G, gram_factors(context, basis, G), cyclic=cyclic, weight=weight)

    def min_eigenvalue(self) -> float:
        if not self.basis:
            return 0.0
        return float(scipy.linalg.eigvalsh(self.G)[0])

    def expansion(self) -> dict[Word, float]:
        return expand_gram(self.context, GramBlock(self.basis, self.weight), self.G)

    def measure(self, p: NcPoly) -> float:
        self.residual = coefficient_residual(p, self.expansion(), self.cyclic)
        return self.residual

    def verify(self, p: NcPoly, tol: float = RESIDUAL_TOL) -> bool:
        """
        Re-check the certificate against p without solving anything.
        """

        if p.context != self.context:
            return False
        return self.measure(p) <= tol and self.min_eigenvalue() >= -PSD_TOL


def gram_factors(context: VariableContext, basis: list[Word], G: np.ndarray) -> list[NcPoly]:
    """
    Read h_j = sqrt(lambda_j) u_j^T W off the eigendecomposition of G.

    Each factor is signed so that its largest coefficient is positive.
    """

    if not basis:
        return []

    values, vectors = scipy.linalg.eigh(G)
    top = float(values[-1])
    factors = []
    for lam, u in zip(values[::-1], vectors.T[::-1]):
        if lam <= 0 or lam < FACTOR_CUTOFF * top:
            break
        row = np.sqrt(lam) * u
        if row[np.argmax(np.abs(row))] < 0:
            row = -row
        factors.append(NcPoly(context, {w: float(c) for w, c in zip(basis, row) if c != 0}))
    return factors


def expand_gram(context: VariableContext, block: GramBlock, G: np.ndarray) -> dict[Word, float]:
    out: dict[Word, float] = defaultdict(float)
    for i, j, word, c in block.contributions(context):
        if G[i, j] != 0:
            out[word] += c * G[i, j]
    return out


def coefficient_residual(p: NcPoly, expansion: dict[Word, float], cyclic: bool = False) -> float:
    """
    Largest coefficient of p minus the expansion, per word or per cyclic class.
    """

    diff: dict[Word, float] = defaultdict(float)
    fold = cyclic_canonical if cyclic else (lambda w: w)
    for w, c in p.coeffs.items():
        diff[fold(w)] += float(c)
    for w, c in expansion.items():
        diff[fold(w)] -= c
    return max((abs(v) for v in diff.values()), default=0.0)


class GramSystem:
    """
    Collects blocks and ideal terms for one target polynomial and builds the SDP.

    Parameters:
        target (NcPoly): The polynomial to certify.
        key (KeyFunction): Constraint grouping, pair_key or cyclic_key.
        free_keys (set[Word]): Keys left without a constraint (the objective word).
    """

    def __init__(self, target: NcPoly, key: KeyFunction, free_keys: set[Word] | None = None) -> None:
        self.context = target.context
        self.target = target
        self.key = key
        self.free_keys = set(free_keys or ())
        self.blocks: list[GramBlock] = []
        self.generators: list[NcPoly] = []
        self.ideal_terms: list[IdealTerm] = []
        self.keys: list[Word] = []
        self.anti_keys: list[Word] = []
        self._layout: list[int | None] = []
        self._target_by_key: dict[Word, Fraction] = defaultdict(Fraction)
        for w, c in target.coeffs.items():
            self._target_by_key[key(w)] += c

    def add_block(self, block: GramBlock) -> int:
        self.blocks.append(block)
        return len(self.blocks) - 1

    def add_ideal(self, r: NcPoly, max_degree: int) -> int:
        """
        Add a free coefficient for every a r b with |a| + deg r + |b| <= max_degree.

        Returns:
            int: The number of terms added.
        """

        if r.context != self.context:
            raise PreconditionError('ideal generator from another context.')
        budget = max_degree - r.degree
        if r.is_zero() or budget < 0:
            return 0

        index = len(self.generators)
        self.generators.append(r)
        words = word_basis(self.context, budget)
        added = 0
        for a in words:
            for b in words:
                if len(a) + len(b) <= budget:
                    self.ideal_terms.append(IdealTerm(a, index, b))
                    added += 1
        return added

    def _ideal_expansions(self) -> list[dict[Word, float]]:
        return [{w: float(c) for w, c in t.poly(self.generators).coeffs.items()} for t in self.ideal_terms]

    def _contributors(self, ideal: list[dict[Word, float]]) -> dict[Word, set]:
        found: dict[Word, set] = defaultdict(set)
        for b, block in enumerate(self.blocks):
            for i, j, word, c in block.contributions(self.context):
                if c != 0:
                    found[self.key(word)].add((b, i, j))
        for t, expansion in enumerate(ideal):
            for word in expansion:
                found[self.key(word)].add(('ideal', t))
        return found

    def prune(self) -> int:
        """
        Drop basis words u whose square u*u can only come from G_uu and has a
        zero target; such rows of a psd G vanish. Repeats until stable.

        Returns:
            int: The number of words removed.
        """

        ideal = self._ideal_expansions()
        removed = 0
        while True:
            found = self._contributors(ideal)
            changed = False
            for b, block in enumerate(self.blocks):
                if not block.prune or block.weight is not None:
                    continue
                keep = []
                for i, u in enumerate(block.basis):
                    k = self.key(self.context.star(u) + u)
                    if k not in self.free_keys and self._target_by_key.get(k, 0) == 0 and found[k] == {(b, i, i)}:
                        changed = True
                        removed += 1
                        continue
                    keep.append(u)
                block.basis = keep
            if not changed:
                break
        if removed:
            logger.debug(f'pruned {removed} Gram basis words')
        return removed

    def build(self, objective: Word | None = None) -> SdpProblem:
        """
        The SDP whose feasible points are certificates.

        Args:
            objective (Word): Minimize the diagonal Gram entry of this word of
                the first block; its key must be free.

        Raises:
            PreconditionError: If no psd variable is left.
        """

        ideal = self._ideal_expansions()
        sizes = []
        self._layout = []
        for block in self.blocks:
            if block.basis:
                self._layout.append(len(sizes))
                sizes.append(len(block.basis))
            else:
                self._layout.append(None)
        scalar_start = len(sizes)
        sizes.extend([1] * (2 * len(self.ideal_terms)))
        if not sizes:
            raise PreconditionError('the Gram system has no variables.')

        rows: dict[Word, list] = defaultdict(list)
        for b, block in enumerate(self.blocks):
            blk = self._layout[b]
            if blk is None:
                continue
            for i, j, word, c in block.contributions(self.context):
                if c != 0:
                    rows[self.key(word)].append((blk, i, j, c))
        for t, expansion in enumerate(ideal):
            plus, minus = scalar_start + 2 * t, scalar_start + 2 * t + 1
            for word, c in expansion.items():
                rows[self.key(word)].append((plus, 0, 0, c))
                rows[self.key(word)].append((minus, 0, 0, -c))

        keys = set(rows) | {k for k, c in self._target_by_key.items() if c != 0}
        self.keys = sorted(keys - self.free_keys, key=word_key)

        builder = SdpBuilder(sizes)
        for k in self.keys:
            builder.add_constraint(rows.get(k, []), float(self._target_by_key.get(k, 0)))

        self.anti_keys = []
        if self.ideal_terms:
            # the ideal part need not be symmetric: match w against w* as well
            for k in self.keys:
                s = self.context.star(k)
                if s == k:
                    continue
                entries = []
                for t, expansion in enumerate(ideal):
                    c = expansion.get(k, 0.0) - expansion.get(s, 0.0)
                    if c != 0:
                        entries.append((scalar_start + 2 * t, 0, 0, c))
                        entries.append((scalar_start + 2 * t + 1, 0, 0, -c))
                if entries:
                    rhs = float(self.target.coefficient(k) - self.target.coefficient(s))
                    builder.add_constraint(entries, rhs)
                    self.anti_keys.append(k)

        if objective is not None:
            blk = self._layout[0]
            i = self.blocks[0].basis.index(objective)
            builder.add_objective([(blk, i, i, 1.0)])

        problem = builder.build()
        logger.debug(f'Gram SDP: blocks {problem.blocks}, {problem.m} constraints')
        return problem

    def block_matrices(self, X: list[np.ndarray]) -> list[np.ndarray]:
        out = []
        for b, block in enumerate(self.blocks):
            blk = self._layout[b] if b < len(self._layout) else None
            out.append(X[blk] if blk is not None else np.zeros((0, 0)))
        return out

    def ideal_coefficients(self, X: list[np.ndarray]) -> list[float]:
        start = sum(1 for blk in self._layout if blk is not None)
        return [float(X[start + 2 * t][0, 0] - X[start + 2 * t + 1][0, 0]) for t in range(len(self.ideal_terms))]

    def expansion(self, X: list[np.ndarray]) -> dict[Word, float]:
        out: dict[Word, float] = defaultdict(float)
        for block, G in zip(self.blocks, self.block_matrices(X)):
            if block.basis:
                for w, c in expand_gram(self.context, block, G).items():
                    out[w] += c
        for term, c in zip(self.ideal_terms, self.ideal_coefficients(X)):
            for w, v in term.poly(self.generators).coeffs.items():
                out[w] += c * float(v)
        return out

    def functional(self, y: np.ndarray) -> dict[Word, float]:
        """
        The separating functional L(w) = -y_key(w) read off an infeasibility ray.

        L is nonnegative on the squares of the system and L(target) = -1.
        """

        return {k: -float(v) for k, v in zip(self.keys, y[:len(self.keys)])}
