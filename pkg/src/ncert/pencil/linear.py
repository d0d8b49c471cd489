import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..core import PreconditionError, ShapeMismatchError
from ..ncpoly import Kind, MatrixNcPoly, MatrixTuple, VariableContext

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
CLOSURE_TOL = 1e-9


def _admit(matrix, name: str) -> np.ndarray:
    arr = np.array(matrix)
    if arr.dtype.kind not in 'iuf':
        arr = arr.astype(float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatchError(f'{name} is not square.')

    if arr.dtype.kind in 'iu':
        if not np.array_equal(arr, arr.T):
            raise PreconditionError(f'{name} is not symmetric.')
        return arr

    asym = np.max(np.abs(arr - arr.T), initial=0.0)
    if asym > SYMMETRY_TOL:
        raise PreconditionError(f'{name} is not symmetric (asymmetry {asym:.3g}).')
    return (arr + arr.T) / 2


class LinearPencil:
    """
    An affine pencil L(x) = A0 + sum_j A_j x_j with symmetric coefficients.

    Integer coefficients are kept as integers and must be exactly symmetric;
    float coefficients may carry an asymmetry up to 1e-12 and are then
    symmetrized.

    Parameters:
        A0: The constant coefficient, or None for the identity.
        A (list): The coefficients A_1..A_g.
    """

    def __init__(self, A0, A) -> None:
        if len(A) == 0:
            raise ShapeMismatchError('a pencil needs at least one variable.')

        coeffs = [_admit(a, f'A{j}') for j, a in enumerate(A, start=1)]
        size = coeffs[0].shape[0]
        if A0 is None:
            A0 = np.eye(size, dtype=int)
        A0 = _admit(A0, 'A0')

        if any(a.shape != (size, size) for a in (A0, *coeffs)):
            raise ShapeMismatchError('pencil coefficients must share their size.')

        self._A0 = A0
        self._A = tuple(coeffs)
        for m in (self._A0, *self._A):
            m.setflags(write=False)

    @property
    def size(self) -> int:
        return self._A0.shape[0]

    @property
    def g(self) -> int:
        return len(self._A)

    @property
    def A0(self) -> np.ndarray:
        return self._A0

    @property
    def A(self) -> tuple[np.ndarray, ...]:
        return self._A

    @property
    def monic(self) -> bool:
        return bool(np.array_equal(self._A0, np.eye(self.size)))

    def require_monic(self) -> None:
        if not self.monic:
            raise PreconditionError('the pencil must be monic (A0 = I).')

    def conjugate(self, U: np.ndarray) -> 'LinearPencil':
        """
        The pencil U^T L U. Monic pencils stay monic under orthogonal U.
        """

        U = np.asarray(U, dtype=float)
        A = [U.T @ a @ U for a in self._A]
        A0 = U.T @ self._A0 @ U
        if self.monic and np.allclose(A0, np.eye(U.shape[1]), atol=1e-10):
            A0 = None
        return LinearPencil(A0, A)

    def scale_variables(self, c: float) -> 'LinearPencil':
        """
        The pencil of x -> c*x, whose domain is D_L / c.
        """

        return LinearPencil(self._A0, [c * a for a in self._A])

    def to_matrix_poly(self) -> MatrixNcPoly:
        """
        The pencil as a matrix-valued polynomial over g symmetric variables.
        """

        context = VariableContext(self.g, Kind.SYMMETRIC)
        coeffs = {(): self._A0}
        coeffs.update({(context.letter(j),): a for j, a in enumerate(self._A, start=1)})
        return MatrixNcPoly(context, (self.size, self.size), coeffs)

    @classmethod
    def from_matrix_poly(cls, p: MatrixNcPoly) -> 'LinearPencil':
        if p.degree > 1 or p.shape[0] != p.shape[1] or p.context.free:
            raise PreconditionError('only symmetric matrix polynomials of degree at most one are pencils.')

        zero = np.zeros(p.shape)
        A0 = p.coeffs.get((), zero)
        A = [p.coeffs.get((p.context.letter(j),), zero) for j in range(1, p.context.g + 1)]
        return cls(A0, A)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearPencil):
            return NotImplemented
        return (self.g == other.g and self.size == other.size
                and all(np.array_equal(a, b) for a, b in zip((self._A0, *self._A), (other._A0, *other._A))))

    __hash__ = None

    def __repr__(self) -> str:
        return f'LinearPencil(size={self.size}, g={self.g}, monic={self.monic})'


@dataclass(frozen=True)
class PencilMembership:
    """
    Where a tuple lies relative to D_L.

    Parameters:
        X (MatrixTuple): The tuple tested.
        min_eig (float): Smallest eigenvalue of L(X).
        inside (bool): L(X) is positive definite.
    """

    X: MatrixTuple
    min_eig: float
    inside: bool

    @property
    def in_closure(self) -> bool:
        return self.min_eig >= -CLOSURE_TOL


def eval_pencil(L: LinearPencil, X: MatrixTuple) -> np.ndarray:
    """
    Evaluate A0 (x) I_n + sum_j A_j (x) X_j.

    Raises:
        ShapeMismatchError: If the tuple has a different number of matrices.
    """

    if X.g != L.g:
        raise ShapeMismatchError(f'pencil has {L.g} variables, tuple has {X.g}.')

    n = X.n
    out = np.kron(L.A0.astype(float), np.eye(n))
    for a, x in zip(L.A, X.matrices):
        out += np.kron(a.astype(float), np.asarray(x, dtype=float))
    return (out + out.T) / 2


def membership(L: LinearPencil, X: MatrixTuple) -> PencilMembership:
    min_eig = float(scipy.linalg.eigvalsh(eval_pencil(L, X))[0])
    return PencilMembership(X, min_eig, min_eig > 0)


def direct_sum(L: LinearPencil, M: LinearPencil) -> LinearPencil:
    if L.g != M.g:
        raise ShapeMismatchError(f'cannot sum pencils in {L.g} and {M.g} variables.')

    return LinearPencil(scipy.linalg.block_diag(L.A0, M.A0),
                        [scipy.linalg.block_diag(a, b) for a, b in zip(L.A, M.A)])


def direct_sum_all(pencils: list[LinearPencil]) -> LinearPencil:
    out = pencils[0]
    for p in pencils[1:]:
        out = direct_sum(out, p)
    return out


def ball_pencil(g: int, rho: float) -> LinearPencil:
    """
    The monic arrow pencil whose domain is the operator ball sum X_j^2 < rho^2 I.

    The first row and column carry x_j / rho; the Schur complement of the
    identity corner gives I - sum X_j^2 / rho^2.
    """

    if not rho > 0:
        raise ValueError('the ball radius must be positive.')

    A = []
    for j in range(1, g + 1):
        a = np.zeros((g + 1, g + 1))
        a[0, j] = a[j, 0] = 1.0 / rho
        A.append(a)
    return LinearPencil(None, A)


def cube_pencil(g: int, beta: float) -> LinearPencil:
    """
    The diagonal pencil with blocks 1 + x_j/beta and 1 - x_j/beta, whose
    domain is the matrix cube -beta I < X_j < beta I.
    """

    if not beta > 0:
        raise ValueError('the cube half-width must be positive.')

    A = []
    for j in range(g):
        diagonal = np.zeros(2 * g)
        diagonal[2 * j] = 1.0 / beta
        diagonal[2 * j + 1] = -1.0 / beta
        A.append(np.diag(diagonal))
    return LinearPencil(None, A)
