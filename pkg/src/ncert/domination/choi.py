"""
Domination of monic pencils through their Choi system.

D_L1 is contained in D_L2 when a unital completely positive map sends each
A_{1,l} to A_{2,l}. Such a map exists iff the Choi matrix C, made of
d2 x d2 blocks C_pq, satisfies

    C psd,   sum_p C_pp = I,   sum_pq (A_{1,l})_pq C_pq = A_{2,l},

and factoring C yields isometry blocks V_m with L2 = sum V_m^T L1 V_m.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..core import Parameters, PreconditionError, ShapeMismatchError, SolverError
from ..ncpoly import MatrixTuple
from ..pencil import LinearPencil, ball_pencil, eval_pencil
from ..sdpcore import SdpBuilder, SdpProblem, SdpStatus, SolverParameters, feasibility, polish

logger = logging.getLogger(__name__)

CERTIFICATE_TOL = 1e-8
RANK_CUTOFF = 1e-10
BOUNDEDNESS_RADIUS = 1e6

DOMINATED = 'dominated'
SEPARATED = 'separated'
SEPARATED_NO_WITNESS = 'separated, no finite witness extracted'
PRECONDITION_UNBOUNDED = 'precondition_unbounded'


@dataclass
class DominationCertificate:
    """
    Isometry blocks V_m (d1 x d2) with sum V_m^T V_m = I and
    sum V_m^T A_{1,l} V_m = A_{2,l}.
    """

    V: list[np.ndarray]
    residuals: dict = field(default_factory=dict)

    @property
    def mu(self) -> int:
        return len(self.V)

    def measure(self, L1: LinearPencil, L2: LinearPencil) -> dict:
        d2 = L2.size
        gram = sum(v.T @ v for v in self.V) if self.V else np.zeros((d2, d2))
        coefficients = []
        for a1, a2 in zip(L1.A, L2.A):
            image = sum(v.T @ a1 @ v for v in self.V) if self.V else np.zeros((d2, d2))
            coefficients.append(float(np.max(np.abs(image - a2))))
        return {
            'isometry': float(np.max(np.abs(gram - np.eye(d2)))),
            'coefficients': coefficients,
        }

    def verify(self, L1: LinearPencil, L2: LinearPencil, tol: float = CERTIFICATE_TOL) -> bool:
        self.residuals = self.measure(L1, L2)
        return max(self.residuals['isometry'], *self.residuals['coefficients']) <= tol

    def replay(self, L1: LinearPencil, X: MatrixTuple) -> np.ndarray:
        """
        sum (V_m (x) I)^T L1(X) (V_m (x) I), which equals L2(X).
        """

        value = eval_pencil(L1, X)
        I = np.eye(X.n)
        return sum(np.kron(v, I).T @ value @ np.kron(v, I) for v in self.V)


@dataclass
class SeparatingFunctional:
    """
    Symmetric d2 x d2 matrices with I (x) Y0 + sum A_{1,l} (x) Y_l negative
    semidefinite and tr Y0 + sum <Y_l, A_{2,l}> = 1.
    """

    Y0: np.ndarray
    Y: list[np.ndarray]


@dataclass
class DominationResult:
    status: str
    certificate: DominationCertificate | None = None
    dual: SeparatingFunctional | None = None
    witness: MatrixTuple | None = None

    @property
    def dominated(self) -> bool:
        return self.status == DOMINATED


class ChoiSystem:
    """
    The feasibility SDP of a pair of monic pencils.

    Parameters:
        L1 (LinearPencil): The pencil whose domain should be contained.
        L2 (LinearPencil): The pencil whose domain should contain it.
    """

    def __init__(self, L1: LinearPencil, L2: LinearPencil) -> None:
        L1.require_monic()
        L2.require_monic()
        if L1.g != L2.g:
            raise ShapeMismatchError(f'pencils have {L1.g} and {L2.g} variables.')

        self.L1 = L1
        self.L2 = L2
        self.d1 = L1.size
        self.d2 = L2.size
        self.rows: list[tuple[int, int, int]] = []
        self.problem = self._build()

    def _index(self, p: int, a: int) -> int:
        return p * self.d2 + a

    def _build(self) -> SdpProblem:
        d1, d2 = self.d1, self.d2
        builder = SdpBuilder([d1 * d2])

        for i in range(d2):
            for j in range(i, d2):
                entries = [(0, self._index(p, i), self._index(p, j), 1.0) for p in range(d1)]
                builder.add_constraint(entries, 1.0 if i == j else 0.0)
                self.rows.append((0, i, j))

        for ell, (a1, a2) in enumerate(zip(self.L1.A, self.L2.A), start=1):
            a1 = a1.astype(float)
            for i in range(d2):
                for j in range(i, d2):
                    entries = [(0, self._index(p, i), self._index(q, j), a1[p, q])
                               for p in range(d1) for q in range(d1) if a1[p, q] != 0]
                    builder.add_constraint(entries, float(a2[i, j]))
                    self.rows.append((ell, i, j))

        return builder.build()

    def certificate(self, C: np.ndarray) -> DominationCertificate:
        """
        Factor C = sum lambda_m u_m u_m^T and reshape each sqrt(lambda_m) u_m
        row-block-wise into V_m.
        """

        values, vectors = scipy.linalg.eigh((C + C.T) / 2)
        top = float(values[-1]) if values.size else 0.0
        V = []
        for lam, u in zip(values[::-1], vectors.T[::-1]):
            if lam < RANK_CUTOFF * top or lam <= 0:
                break
            V.append((np.sqrt(lam) * u).reshape(self.d1, self.d2))
        return DominationCertificate(V)

    def functional(self, y: np.ndarray) -> SeparatingFunctional:
        d2 = self.d2
        mats = [np.zeros((d2, d2)) for _ in range(self.L1.g + 1)]
        for value, (ell, i, j) in zip(y, self.rows):
            if i == j:
                mats[ell][i, i] = value
            else:
                mats[ell][i, j] = mats[ell][j, i] = value / 2
        return SeparatingFunctional(mats[0], mats[1:])

    def witness(self, dual: SeparatingFunctional) -> MatrixTuple | None:
        """
        A tuple in D_L1 outside the closure of D_L2, built from the functional.

        With W = -Y, shifting W0 by I/(4 d2) keeps I (x) W0 + sum A_{1,l} (x) W_l
        psd and the value tr W0 + sum <W_l, A_{2,l}> negative; conjugating by
        W0^{-1/2} gives X with L1(X) psd and L2(X) not psd, and a slight
        shrink moves X into the open domain of L1.
        """

        d2 = self.d2
        W0 = -dual.Y0 + np.eye(d2) / (4 * d2)
        W = [-y for y in dual.Y]

        values, vectors = scipy.linalg.eigh(W0)
        if values[0] <= 0:
            return None

        root = (vectors / np.sqrt(values)) @ vectors.T
        X = [root @ w @ root for w in W]
        X = [(x + x.T) / 2 for x in X]
        value = float(np.trace(W0) + sum(np.sum(w * a2) for w, a2 in zip(W, self.L2.A)))
        if value >= 0:
            return None

        eps = -value / (2 * (float(np.trace(W0)) - value))
        try:
            point = MatrixTuple([(1 - eps) * x for x in X])
        except PreconditionError:
            return None

        inside = float(scipy.linalg.eigvalsh(eval_pencil(self.L1, point))[0])
        outside = float(scipy.linalg.eigvalsh(eval_pencil(self.L2, point))[0])
        logger.debug(f'witness check: min eig L1 {inside:.3g}, min eig L2 {outside:.3g}')
        if inside > 0 and outside < 0:
            return point
        return None


def check_domination(L1: LinearPencil, L2: LinearPencil, parameters: Parameters = None,
                     check_bounded: bool = True) -> DominationResult:
    """
    Decide whether D_L1 is contained in D_L2.

    Args:
        L1 (LinearPencil): A monic pencil with bounded D_L1(1).
        L2 (LinearPencil): A monic pencil in as many variables.
        parameters (Parameters): Solver options.
        check_bounded (bool): Check boundedness of D_L1(1) first.

    Returns:
        DominationResult: 'dominated' with a verified certificate, a
        separated status with the dual functional (and a witness tuple when
        one could be built), or 'precondition_unbounded'.

    Raises:
        SolverError: If the SDP neither converges nor certifies infeasibility,
            or the extracted certificate fails its residual check.
    """

    system = ChoiSystem(L1, L2)

    if check_bounded and not is_bounded(L1, parameters):
        logger.info('D_L1(1) is unbounded, no verdict')
        return DominationResult(PRECONDITION_UNBOUNDED)

    solution = feasibility(system.problem, SolverParameters(parameters))

    if solution.feasible:
        C = polish(system.problem, solution.X)[0]
        certificate = system.certificate(C)
        if not certificate.verify(L1, L2):
            raise SolverError(f'domination certificate failed its residual check: {certificate.residuals}')
        logger.info(f'dominated with mu = {certificate.mu}')
        return DominationResult(DOMINATED, certificate=certificate)

    if solution.status is SdpStatus.PRIMAL_INFEASIBLE and solution.ray is not None:
        dual = system.functional(solution.ray)
        point = system.witness(dual)
        status = SEPARATED if point is not None else SEPARATED_NO_WITNESS
        logger.info(f'not dominated: {status}')
        return DominationResult(status, dual=dual, witness=point)

    raise SolverError(f'domination SDP ended with status {solution.status.value}.')


def is_bounded(L: LinearPencil, parameters: Parameters = None) -> bool:
    """
    Whether D_L(1) lies in the operator ball of radius 1e6.
    """

    return check_domination(L, ball_pencil(L.g, BOUNDEDNESS_RADIUS), parameters, check_bounded=False).dominated
