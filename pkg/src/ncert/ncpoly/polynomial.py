import itertools
import math
import numbers
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ..core import ContextMismatchError, ShapeMismatchError
from .words import EMPTY_WORD, VariableContext, Word, cyclic_canonical, h_degree, word_key

Scalar = int | Fraction | float | str


def to_rational(value) -> Fraction:
    """
    Convert a scalar to an exact rational.

    Floats convert to the exact value of their binary representation.
    """

    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError('booleans are not coefficients.')
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, numbers.Real):
        if not math.isfinite(float(value)):
            raise ValueError(f'coefficient {value} is not finite.')
        return Fraction(float(value))
    raise TypeError(f'cannot use {type(value).__name__} as a coefficient.')


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    if value.denominator <= 10**6:
        return f'{value.numerator}/{value.denominator}'
    return repr(float(value))


class NcPoly:
    """
    A polynomial in non-commuting variables with exact rational coefficients.

    Instances are immutable; arithmetic returns new polynomials.

    Parameters:
        context (VariableContext): The algebra the polynomial lives in.
        coeffs (Mapping[Word, Scalar]): Coefficient of each word; zeros are dropped.
    """

    __slots__ = ('_context', '_coeffs', '_hash')

    def __init__(self, context: VariableContext, coeffs: Mapping[Word, Scalar] | None = None) -> None:
        self._context = context
        self._hash = None
        store: dict[Word, Fraction] = {}
        for word, value in (coeffs or {}).items():
            word = tuple(context.admit(c) for c in word)
            value = to_rational(value)
            total = store.get(word, Fraction(0)) + value
            if total:
                store[word] = total
            else:
                store.pop(word, None)
        self._coeffs = store

    @classmethod
    def _raw(cls, context: VariableContext, store: dict[Word, Fraction]) -> 'NcPoly':
        # store is already admitted and free of zeros
        poly = cls.__new__(cls)
        poly._context = context
        poly._coeffs = store
        poly._hash = None
        return poly

    @classmethod
    def zero(cls, context: VariableContext) -> 'NcPoly':
        return cls._raw(context, {})

    @classmethod
    def constant(cls, context: VariableContext, value: Scalar) -> 'NcPoly':
        return cls(context, {EMPTY_WORD: value})

    @classmethod
    def variable(cls, context: VariableContext, j: int, starred: bool = False) -> 'NcPoly':
        return cls._raw(context, {(context.letter(j, starred),): Fraction(1)})

    @classmethod
    def monomial(cls, context: VariableContext, word: Word, value: Scalar = 1) -> 'NcPoly':
        return cls(context, {tuple(word): value})

    @property
    def context(self) -> VariableContext:
        return self._context

    @property
    def coeffs(self) -> Mapping[Word, Fraction]:
        return MappingProxyType(self._coeffs)

    @property
    def degree(self) -> int:
        """
        Largest word length, -1 for the zero polynomial.
        """

        return max((len(w) for w in self._coeffs), default=-1)

    def coefficient(self, word: Word) -> Fraction:
        return self._coeffs.get(tuple(word), Fraction(0))

    def terms(self) -> list[tuple[Word, Fraction]]:
        """
        The nonzero terms in graded lexicographic order.
        """

        return sorted(self._coeffs.items(), key=lambda item: word_key(item[0]))

    def support(self) -> list[Word]:
        return [w for w, _ in self.terms()]

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_symmetric(self) -> bool:
        star = self._context.star
        return all(self._coeffs.get(star(w)) == c for w, c in self._coeffs.items())

    def _check(self, other: 'NcPoly') -> None:
        if not isinstance(other, NcPoly):
            raise TypeError(f'expected NcPoly, got {type(other).__name__}.')
        if other._context != self._context:
            raise ContextMismatchError('polynomials belong to different contexts.')

    def _lift(self, other) -> 'NcPoly':
        if isinstance(other, NcPoly):
            self._check(other)
            return other
        return NcPoly.constant(self._context, other)

    def __add__(self, other) -> 'NcPoly':
        other = self._lift(other)
        store = dict(self._coeffs)
        for word, value in other._coeffs.items():
            total = store.get(word, Fraction(0)) + value
            if total:
                store[word] = total
            else:
                store.pop(word, None)
        return NcPoly._raw(self._context, store)

    __radd__ = __add__

    def __neg__(self) -> 'NcPoly':
        return NcPoly._raw(self._context, {w: -c for w, c in self._coeffs.items()})

    def __sub__(self, other) -> 'NcPoly':
        return self + (-self._lift(other))

    def __rsub__(self, other) -> 'NcPoly':
        return self._lift(other) - self

    def __mul__(self, other) -> 'NcPoly':
        if not isinstance(other, NcPoly):
            return self.scale(other)

        self._check(other)
        store: dict[Word, Fraction] = {}
        for w, a in self._coeffs.items():
            for v, b in other._coeffs.items():
                word = w + v
                total = store.get(word, Fraction(0)) + a * b
                if total:
                    store[word] = total
                else:
                    store.pop(word, None)
        return NcPoly._raw(self._context, store)

    def __rmul__(self, other) -> 'NcPoly':
        return self.scale(other)

    def __pow__(self, k: int) -> 'NcPoly':
        if not isinstance(k, int) or k < 0:
            raise ValueError('powers must be nonnegative integers.')

        result = NcPoly.constant(self._context, 1)
        for _ in range(k):
            result = result * self
        return result

    def scale(self, c: Scalar) -> 'NcPoly':
        c = to_rational(c)
        if not c:
            return NcPoly.zero(self._context)
        return NcPoly._raw(self._context, {w: c * v for w, v in self._coeffs.items()})

    def star(self) -> 'NcPoly':
        """
        The involution p* = sum p_w w*.
        """

        star = self._context.star
        return NcPoly._raw(self._context, {star(w): c for w, c in self._coeffs.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, NcPoly):
            return self._context == other._context and self._coeffs == other._coeffs
        if isinstance(other, (numbers.Number, str)):
            return self == NcPoly.constant(self._context, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._context, frozenset(self._coeffs.items())))
        return self._hash

    def __str__(self) -> str:
        if not self._coeffs:
            return '0'

        out = []
        for word, c in self.terms():
            sign = '-' if c < 0 else '+'
            magnitude = abs(c)
            if not word:
                body = format_rational(magnitude)
            elif magnitude == 1:
                body = self._context.format_word(word)
            else:
                body = f'{format_rational(magnitude)}*{self._context.format_word(word)}'
            if not out:
                out.append(body if sign == '+' else f'-{body}')
            else:
                out.append(f' {sign} {body}')
        return ''.join(out)

    def __repr__(self) -> str:
        return f'NcPoly({self})'


def add(p: NcPoly, q: NcPoly) -> NcPoly:
    return p + q


def scale(c: Scalar, p: NcPoly) -> NcPoly:
    return p.scale(c)


def mul(p, q):
    """
    Product of two polynomials; words concatenate, coefficients multiply.
    """

    return p * q


def involution(p):
    """
    The involution of a scalar or matrix-valued polynomial.
    """

    return p.star()


def cyclic_reduce(p: NcPoly) -> NcPoly:
    """
    Canonical representative modulo commutators.

    Coefficients are summed over each rotation class and placed on the
    least rotation, so p and q are cyclically equivalent iff
    cyclic_reduce(p - q) is zero.
    """

    store: dict[Word, Fraction] = {}
    for word, c in p.coeffs.items():
        key = cyclic_canonical(word)
        store[key] = store.get(key, Fraction(0)) + c
    return NcPoly(p.context, store)


def cyclically_equivalent(p: NcPoly, q: NcPoly) -> bool:
    return cyclic_reduce(p - q).is_zero()


class MatrixNcPoly:
    """
    A polynomial with real rectangular matrix coefficients, p = sum p_w w.

    Parameters:
        context (VariableContext): The algebra of the words.
        shape (tuple[int, int]): Shape shared by every coefficient.
        coeffs (Mapping[Word, array]): Coefficient matrix of each word.
    """

    def __init__(self, context: VariableContext, shape: tuple[int, int], coeffs: Mapping[Word, object] | None = None) -> None:
        self._context = context
        self._shape = (int(shape[0]), int(shape[1]))
        store: dict[Word, np.ndarray] = {}
        for word, value in (coeffs or {}).items():
            word = tuple(context.admit(c) for c in word)
            value = np.array(value, dtype=float)
            if value.shape != self._shape:
                raise ShapeMismatchError(f'coefficient of shape {value.shape}, expected {self._shape}.')
            total = store.get(word, np.zeros(self._shape)) + value
            if np.any(total):
                store[word] = total
            else:
                store.pop(word, None)
        self._coeffs = store

    @classmethod
    def from_scalar(cls, p: NcPoly) -> 'MatrixNcPoly':
        return cls(p.context, (1, 1), {w: [[float(c)]] for w, c in p.coeffs.items()})

    @property
    def context(self) -> VariableContext:
        return self._context

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def coeffs(self) -> Mapping[Word, np.ndarray]:
        return MappingProxyType(self._coeffs)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self._coeffs), default=-1)

    def terms(self) -> list[tuple[Word, np.ndarray]]:
        return sorted(self._coeffs.items(), key=lambda item: word_key(item[0]))

    def _check(self, other: 'MatrixNcPoly') -> None:
        if other._context != self._context:
            raise ContextMismatchError('polynomials belong to different contexts.')

    def __add__(self, other: 'MatrixNcPoly') -> 'MatrixNcPoly':
        self._check(other)
        if other._shape != self._shape:
            raise ShapeMismatchError(f'cannot add shapes {self._shape} and {other._shape}.')

        coeffs = dict(self._coeffs)
        for w, c in other._coeffs.items():
            coeffs[w] = coeffs.get(w, 0) + c
        return MatrixNcPoly(self._context, self._shape, coeffs)

    def __mul__(self, other) -> 'MatrixNcPoly':
        if not isinstance(other, MatrixNcPoly):
            return MatrixNcPoly(self._context, self._shape, {w: float(other) * c for w, c in self._coeffs.items()})

        self._check(other)
        if self._shape[1] != other._shape[0]:
            raise ShapeMismatchError(f'cannot multiply shapes {self._shape} and {other._shape}.')

        coeffs: dict[Word, np.ndarray] = {}
        for w, a in self._coeffs.items():
            for v, b in other._coeffs.items():
                coeffs[w + v] = coeffs.get(w + v, 0) + a @ b
        return MatrixNcPoly(self._context, (self._shape[0], other._shape[1]), coeffs)

    def star(self) -> 'MatrixNcPoly':
        star = self._context.star
        shape = (self._shape[1], self._shape[0])
        return MatrixNcPoly(self._context, shape, {star(w): c.T for w, c in self._coeffs.items()})

    def is_symmetric(self, tol: float = 0.0) -> bool:
        if self._shape[0] != self._shape[1]:
            return False

        star = self._context.star
        words = set(self._coeffs) | {star(w) for w in self._coeffs}
        zero = np.zeros(self._shape)
        for w in words:
            diff = self._coeffs.get(star(w), zero) - self._coeffs.get(w, zero).T
            if np.max(np.abs(diff), initial=0.0) > tol:
                return False
        return True

    def direct_sum(self, other: 'MatrixNcPoly') -> 'MatrixNcPoly':
        self._check(other)
        (a, b), (c, d) = self._shape, other._shape
        coeffs: dict[Word, np.ndarray] = {}
        for w in set(self._coeffs) | set(other._coeffs):
            block = np.zeros((a + c, b + d))
            if w in self._coeffs:
                block[:a, :b] = self._coeffs[w]
            if w in other._coeffs:
                block[a:, b:] = other._coeffs[w]
            coeffs[w] = block
        return MatrixNcPoly(self._context, (a + c, b + d), coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixNcPoly):
            return NotImplemented
        return (self._context == other._context and self._shape == other._shape
                and self._coeffs.keys() == other._coeffs.keys()
                and all(np.array_equal(c, other._coeffs[w]) for w, c in self._coeffs.items()))

    __hash__ = None

    def __repr__(self) -> str:
        words = ', '.join(self._context.format_word(w) for w, _ in self.terms())
        return f'MatrixNcPoly(shape={self._shape}, words=[{words}])'


class BiPoly:
    """
    A polynomial in (x, h) produced by differentiating in direction h.

    Parameters:
        poly (NcPoly): The polynomial over the doubled context.
        base (VariableContext): The context of x alone.
        order (int): Homogeneous degree in the h letters.
    """

    def __init__(self, poly: NcPoly, base: VariableContext, order: int) -> None:
        self.poly = poly
        self.base = base
        self.order = order

    @property
    def context(self) -> VariableContext:
        return self.poly.context

    def is_homogeneous(self) -> bool:
        return all(h_degree(w, self.base.g) == self.order for w in self.poly.coeffs)

    def is_symmetric(self) -> bool:
        return self.poly.is_symmetric()

    def __eq__(self, other) -> bool:
        if isinstance(other, BiPoly):
            return self.poly == other.poly and self.order == other.order
        if isinstance(other, NcPoly):
            return self.poly == other
        return NotImplemented

    __hash__ = None

    def __str__(self) -> str:
        return str(self.poly)

    def __repr__(self) -> str:
        return f'BiPoly(order={self.order}, {self.poly})'


def directional_derivative(p: NcPoly, k: int = 1) -> BiPoly:
    """
    The k-th directional derivative d^k/dt^k p(x + th) at t = 0.

    Expands p(x + th) exactly: every choice of k letter positions of a word
    is replaced by the matching h letter, and the t^k coefficient is scaled
    by k!.

    Args:
        p (NcPoly): The polynomial to differentiate.
        k (int): The order, at least 1.

    Returns:
        BiPoly: Homogeneous of degree k in h.
    """

    if not isinstance(k, int) or k < 1:
        raise ValueError('derivative order must be a positive integer.')

    base = p.context
    shift = 2 * base.g
    factor = math.factorial(k)
    store: dict[Word, Fraction] = {}
    for word, c in p.coeffs.items():
        for positions in itertools.combinations(range(len(word)), k):
            letters = list(word)
            for i in positions:
                letters[i] += shift
            key = tuple(letters)
            store[key] = store.get(key, Fraction(0)) + factor * c
    return BiPoly(NcPoly(base.doubled(), store), base, k)


def hessian(p: NcPoly) -> BiPoly:
    return directional_derivative(p, 2)
