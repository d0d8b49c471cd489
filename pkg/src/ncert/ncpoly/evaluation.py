from fractions import Fraction

import numpy as np
import scipy.linalg

from ..core import PreconditionError, ShapeMismatchError
from .polynomial import BiPoly, MatrixNcPoly, NcPoly, to_rational
from .words import VariableContext, Word

SYMMETRY_TOL = 1e-12


class MatrixTuple:
    """
    A g-tuple of real n x n matrices, the point a polynomial is evaluated at.

    In symmetric use every matrix must be symmetric up to an entry asymmetry
    of 1e-12 and is then symmetrized. Exact tuples hold Fractions in object
    arrays and must be exactly symmetric.

    Parameters:
        matrices (list): The g matrices.
        symmetric (bool): Whether the tuple is admitted for a symmetric context.
        exact (bool): Keep entries as exact rationals.
    """

    def __init__(self, matrices, symmetric: bool = True, exact: bool = False) -> None:
        if len(matrices) == 0:
            raise ShapeMismatchError('a matrix tuple needs at least one matrix.')

        admitted = []
        for i, m in enumerate(matrices):
            if exact:
                arr = np.array([[to_rational(v) for v in row] for row in np.asarray(m, dtype=object)], dtype=object)
            else:
                arr = np.array(m, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ShapeMismatchError(f'matrix {i + 1} is not square.')
            if symmetric:
                arr = _admit_symmetric(arr, exact, i)
            admitted.append(arr)

        n = admitted[0].shape[0]
        if any(a.shape != (n, n) for a in admitted):
            raise ShapeMismatchError('matrices of a tuple must share their size.')

        self._matrices = tuple(admitted)
        self.n = n
        self.symmetric = symmetric
        self.exact = exact

    @property
    def g(self) -> int:
        return len(self._matrices)

    @property
    def matrices(self) -> tuple[np.ndarray, ...]:
        return self._matrices

    def __getitem__(self, j: int) -> np.ndarray:
        return self._matrices[j]

    def __len__(self) -> int:
        return len(self._matrices)

    def direct_sum(self, other: 'MatrixTuple') -> 'MatrixTuple':
        if other.g != self.g:
            raise ShapeMismatchError('tuples differ in length.')

        if self.exact or other.exact:
            blocks = [_exact_block_diag(a, b) for a, b in zip(self._matrices, other.matrices)]
        else:
            blocks = [scipy.linalg.block_diag(a, b) for a, b in zip(self._matrices, other.matrices)]
        return MatrixTuple(blocks, self.symmetric and other.symmetric, self.exact and other.exact)

    def conjugate(self, U: np.ndarray) -> 'MatrixTuple':
        """
        The tuple (U^T X_j U).
        """

        U = np.asarray(U, dtype=float)
        return MatrixTuple([U.T @ np.asarray(m, dtype=float) @ U for m in self._matrices], self.symmetric)

    def combine(self, other: 'MatrixTuple', a, b) -> 'MatrixTuple':
        """
        The tuple a*X + b*Y, exact when both tuples are.
        """

        if self.exact and other.exact:
            a, b = to_rational(a), to_rational(b)
        else:
            a, b = float(a), float(b)
        mats = [a * np.asarray(x) + b * np.asarray(y) for x, y in zip(self._matrices, other.matrices)]
        return MatrixTuple(mats, self.symmetric and other.symmetric, self.exact and other.exact)


def _admit_symmetric(arr: np.ndarray, exact: bool, i: int) -> np.ndarray:
    if exact:
        if not all(arr[r, c] == arr[c, r] for r in range(arr.shape[0]) for c in range(r)):
            raise PreconditionError(f'matrix {i + 1} is not symmetric.')
        return arr

    asym = np.max(np.abs(arr - arr.T), initial=0.0)
    if asym > SYMMETRY_TOL:
        raise PreconditionError(f'matrix {i + 1} is not symmetric (asymmetry {asym:.3g}).')
    return (arr + arr.T) / 2


def _exact_block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    out = np.full((n + m, n + m), Fraction(0), dtype=object)
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def _identity(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.full((n, n), Fraction(0), dtype=object)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n)


class _WordEvaluator:
    """
    Evaluates words at a tuple, caching products of shared suffixes.
    """

    def __init__(self, context: VariableContext, X: MatrixTuple) -> None:
        if X.g != context.g:
            raise ShapeMismatchError(f'context has {context.g} variables, tuple has {X.g}.')
        if not context.free and not X.symmetric:
            # admitting the matrices again raises PreconditionError on any asymmetry
            X = MatrixTuple(X.matrices, symmetric=True, exact=X.exact)

        self._exact = X.exact
        self._letters = {}
        for code in context.alphabet():
            m = X[code // 2]
            self._letters[code] = m.T if code & 1 else m
        self._cache: dict[Word, np.ndarray] = {(): _identity(X.n, X.exact)}

    def __call__(self, word: Word) -> np.ndarray:
        cached = self._cache.get(word)
        if cached is not None:
            return cached

        value = self._letters[word[0]] @ self(word[1:])
        self._cache[word] = value
        return value

    def scalar(self, c: Fraction):
        return c if self._exact else float(c)


def evaluate(p: NcPoly | MatrixNcPoly, X: MatrixTuple) -> np.ndarray:
    """
    Evaluate a polynomial at a matrix tuple.

    Free-context stars evaluate to transposes, the empty word to I_n. A
    matrix-valued p evaluates to sum_w p_w (x) w(X).

    Args:
        p (NcPoly | MatrixNcPoly): The polynomial.
        X (MatrixTuple): The point.

    Returns:
        np.ndarray: A float matrix, or an object matrix of Fractions for exact tuples.

    Raises:
        ShapeMismatchError: If the tuple length differs from the context.
        PreconditionError: If the context is symmetric and a matrix of X is not.
    """

    if isinstance(p, BiPoly):
        p = p.poly

    words = _WordEvaluator(p.context, X)

    if isinstance(p, MatrixNcPoly):
        rows, cols = p.shape
        total = np.zeros((rows * X.n, cols * X.n))
        for word, c in p.coeffs.items():
            total = total + np.kron(c, np.asarray(words(word), dtype=float))
        return total

    if X.exact:
        total = np.full((X.n, X.n), Fraction(0), dtype=object)
    else:
        total = np.zeros((X.n, X.n))
    for word, c in p.coeffs.items():
        total = total + words.scalar(c) * words(word)
    return total


def evaluate_bipoly(q: BiPoly, X: MatrixTuple, H: MatrixTuple) -> np.ndarray:
    """
    Evaluate p^(k)(X)[H] at a base point X in direction H.
    """

    if X.g != q.base.g or H.g != q.base.g:
        raise ShapeMismatchError('point and direction must match the base context.')

    if X.exact and H.exact:
        joint = MatrixTuple([*X.matrices, *H.matrices], X.symmetric and H.symmetric, exact=True)
    else:
        joint = MatrixTuple([np.asarray(m, dtype=float) for m in (*X.matrices, *H.matrices)], X.symmetric and H.symmetric)
    return evaluate(q.poly, joint)


def trace_value(p: NcPoly, X: MatrixTuple) -> float:
    return float(np.trace(np.asarray(evaluate(p, X), dtype=float)))


def random_tuple(rng: np.random.Generator, g: int, n: int, symmetric: bool = True, scale: float = 1.0) -> MatrixTuple:
    """
    A random tuple with entries uniform in [-scale, scale], symmetrized when asked.
    """

    mats = []
    for _ in range(g):
        m = rng.uniform(-scale, scale, size=(n, n))
        mats.append((m + m.T) / 2 if symmetric else m)
    return MatrixTuple(mats, symmetric)
