import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..core import SolverError

logger = logging.getLogger(__name__)


class SdpStatus(str, Enum):
    OPTIMAL = 'optimal'
    PRIMAL_INFEASIBLE = 'primal_infeasible'
    DUAL_INFEASIBLE = 'dual_infeasible'
    MAX_ITER = 'max_iter'
    NUMERICAL_FAILURE = 'numerical_failure'


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """
    A block-diagonal SDP in standard form:

        minimize <C, X>  subject to  <A_i, X> = b_i,  X psd.

    Parameters:
        blocks (tuple[int, ...]): Block sizes.
        C (tuple[np.ndarray, ...]): Objective, one symmetric matrix per block.
        A (tuple[np.ndarray, ...]): Constraints, per block an array of shape (m, nb, nb).
        b (np.ndarray): Right-hand sides, shape (m,).
    """

    blocks: tuple[int, ...]
    C: tuple[np.ndarray, ...]
    A: tuple[np.ndarray, ...]
    b: np.ndarray

    @property
    def m(self) -> int:
        return int(self.b.shape[0])

    @property
    def dim(self) -> int:
        return int(sum(self.blocks))

    def apply(self, X: list[np.ndarray]) -> np.ndarray:
        """
        The vector (<A_i, X>)_i; X may be non-symmetric.
        """

        out = np.zeros(self.m)
        for Ab, Xb in zip(self.A, X):
            out += np.tensordot(Ab, Xb, axes=([1, 2], [0, 1]))
        return out

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        """
        The block matrix sum_i y_i A_i.
        """

        return [np.tensordot(y, Ab, axes=(0, 0)) for Ab in self.A]

    def objective(self, X: list[np.ndarray]) -> float:
        return float(sum(np.sum(Cb * Xb) for Cb, Xb in zip(self.C, X)))

    def restrict(self, rows: list[int]) -> 'SdpProblem':
        rows = list(rows)
        return SdpProblem(self.blocks, self.C, tuple(Ab[rows] for Ab in self.A), self.b[rows])


@dataclass(eq=False)
class SdpSolution:
    """
    Result of a solve. Residuals are relative: primal ||b - A(X)|| / (1 + ||b||),
    dual ||C - A^T y - Z|| / (1 + ||C||), gap |pobj - dobj| / (1 + |pobj| + |dobj|).
    complementarity is absolute: the Frobenius norm of the blockwise XZ.
    """

    status: SdpStatus
    X: list[np.ndarray] = field(default_factory=list)
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    Z: list[np.ndarray] = field(default_factory=list)
    primal_objective: float = float('nan')
    dual_objective: float = float('nan')
    primal_residual: float = float('nan')
    dual_residual: float = float('nan')
    gap: float = float('nan')
    complementarity: float = float('nan')
    iterations: int = 0
    ray: np.ndarray | list[np.ndarray] | None = None
    slack: float | None = None
    slack_tol: float = 1e-8

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    @property
    def feasible(self) -> bool:
        """
        For phase-I solves: optimal with a vanishing infeasibility slack.
        """

        return self.optimal and (self.slack is None or self.slack <= self.slack_tol)

    def summary(self) -> dict:
        return {
            'status': self.status.value,
            'primal_objective': self.primal_objective,
            'dual_objective': self.dual_objective,
            'primal_residual': self.primal_residual,
            'dual_residual': self.dual_residual,
            'gap': self.gap,
            'complementarity': self.complementarity,
            'iterations': self.iterations,
            'slack': self.slack,
        }


class SdpBuilder:
    """
    Assembles an SdpProblem from sparse entries.

    An entry (block, i, j, v) adds the term v * X_ij to a constraint or the
    objective; X is symmetric, so off-diagonal entries are split evenly
    between (i, j) and (j, i).

    Parameters:
        blocks (list[int]): Block sizes.
    """

    def __init__(self, blocks: list[int]) -> None:
        if any(int(nb) < 1 for nb in blocks):
            raise SolverError('block sizes must be positive.')

        self._blocks = tuple(int(nb) for nb in blocks)
        self._rows: list[list[tuple[int, int, int, float]]] = []
        self._rhs: list[float] = []
        self._objective: list[tuple[int, int, int, float]] = []

    @property
    def blocks(self) -> tuple[int, ...]:
        return self._blocks

    @property
    def m(self) -> int:
        return len(self._rhs)

    def add_constraint(self, entries, rhs: float) -> int:
        """
        Add the constraint sum v * X_ij = rhs.

        Args:
            entries: Iterable of (block, i, j, v).
            rhs (float): The right-hand side.

        Returns:
            int: Index of the constraint.
        """

        self._rows.append([(int(k), int(i), int(j), float(v)) for k, i, j, v in entries])
        self._rhs.append(float(rhs))
        return len(self._rhs) - 1

    def add_objective(self, entries) -> None:
        self._objective.extend((int(k), int(i), int(j), float(v)) for k, i, j, v in entries)

    def build(self) -> SdpProblem:
        m = len(self._rhs)
        A = [np.zeros((m, nb, nb)) for nb in self._blocks]
        C = [np.zeros((nb, nb)) for nb in self._blocks]

        for row, entries in enumerate(self._rows):
            for k, i, j, v in entries:
                _place(A[k][row], i, j, v)
        for k, i, j, v in self._objective:
            _place(C[k], i, j, v)

        return SdpProblem(self._blocks, tuple(C), tuple(A), np.array(self._rhs, dtype=float))


def _place(target: np.ndarray, i: int, j: int, v: float) -> None:
    if i == j:
        target[i, i] += v
    else:
        target[i, j] += v / 2
        target[j, i] += v / 2


def to_sdpa(problem: SdpProblem) -> str:
    """
    Export a problem in the sparse SDPA text format.

    Our primal is SDPA's dual: F_i = A_i, c_i = b_i and F_0 = -C, so that
    SDPA maximizes <F_0, Y> = -<C, Y>. Numbers carry 17 significant digits.

    Returns:
        str: The problem text.
    """

    lines = [
        f'{problem.m} = mDIM',
        f'{len(problem.blocks)} = nBLOCK',
        ' '.join(str(nb) for nb in problem.blocks),
        ' '.join(f'{v:.17g}' for v in problem.b) if problem.m else '',
    ]

    def emit(matno: int, mats) -> None:
        for k, M in enumerate(mats):
            rows, cols = np.nonzero(np.triu(M))
            for i, j in zip(rows, cols):
                lines.append(f'{matno} {k + 1} {i + 1} {j + 1} {M[i, j]:.17g}')

    emit(0, [-Cb for Cb in problem.C])
    for i in range(problem.m):
        emit(i + 1, [Ab[i] for Ab in problem.A])

    return '\n'.join(lines) + '\n'
