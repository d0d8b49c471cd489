"""
Primal-dual interior-point solver for block-diagonal SDPs.

The method is an infeasible-start path-following scheme with the HKM search
direction and Mehrotra's predictor-corrector. Primal and dual infeasibility
are detected through improving rays. A breakdown is reported as a status,
together with the best iterate seen, instead of an exception.
"""

import logging
import os
from typing import Callable

import numpy as np
import scipy.linalg

from ..core import Parameters, SolverError
from .problem import SdpProblem, SdpSolution, SdpStatus

logger = logging.getLogger(__name__)

MAX_DIM_ENV = 'NCERT_SDP_MAXDIM'
DEFAULT_MAX_DIM = 2000

_DEFAULTS = {
    'tol': 1e-8,
    'max_iter': 100,
    'step': 0.98,
    'slack_tol': 1e-8,
    'ray_tol': 1e-7,
}

_SYMMETRY_TOL = 1e-12
_RANK_TOL = 1e-9
_DIVERGENCE = 1e13

# absolute bound on ||XZ|| at an optimal iterate
COMPLEMENTARITY_TOL = 1e-7
_POLISH_FLOOR = 1e-14


def _env_max_dim() -> int:
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f'{MAX_DIM_ENV} must be an integer, got {raw!r}.')


class SolverParameters(Parameters):
    """
    Options of the SDP solver.

    Parameters:
        clone (Parameters): Parameters to clone; unset solver options take their defaults.
        tol (float): Relative primal, dual and gap tolerance. Default 1e-8.
        max_iter (int): Iteration limit. Default 100.
        step (float): Fraction of the distance to the cone boundary taken per step. Default 0.98.
        max_dim (int): Largest total block dimension accepted. Default 2000 or NCERT_SDP_MAXDIM.
        slack_tol (float): Largest phase-I slack counted as feasible. Default 1e-8.
        ray_tol (float): Residual allowed on infeasibility rays. Default 1e-7.
    """

    def __init__(self, clone: Parameters = None, **kwargs):
        present = set(clone.get_params()) if clone is not None else set()
        for key, value in _DEFAULTS.items():
            if key not in kwargs and key not in present:
                kwargs[key] = value
        if 'max_dim' not in kwargs and 'max_dim' not in present:
            kwargs['max_dim'] = _env_max_dim()

        super().__init__(clone, **kwargs)

        for key in ('tol', 'slack_tol', 'ray_tol'):
            if not float(getattr(self, key)) > 0:
                raise ValueError(f'{key} must be positive.')
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ValueError('max_iter must be a positive integer.')
        if not 0 < float(self.step) < 1:
            raise ValueError('step must lie in (0, 1).')
        if not isinstance(self.max_dim, int) or self.max_dim < 1:
            raise ValueError('max_dim must be a positive integer.')


def _inner(X: list[np.ndarray], Z: list[np.ndarray]) -> float:
    return float(sum(np.sum(a * b) for a, b in zip(X, Z)))


def _fro(X: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(np.sum(a * a) for a in X)))


def _sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2


def _merit(solution: SdpSolution) -> tuple:
    return (max(solution.primal_residual, solution.dual_residual, solution.gap),)


def _max_step(factors: list[np.ndarray], D: list[np.ndarray]) -> float:
    """
    Largest alpha with L L^T + alpha D still psd, over all blocks.
    """

    alpha = np.inf
    for L, Db in zip(factors, D):
        W = scipy.linalg.solve_triangular(L, Db, lower=True)
        W = scipy.linalg.solve_triangular(L, W.T, lower=True)
        lam = float(np.min(scipy.linalg.eigvalsh(_sym(W))))
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _validate(problem: SdpProblem, parameters: SolverParameters) -> None:
    if problem.dim > parameters.max_dim:
        raise SolverError(f'total block dimension {problem.dim} exceeds the limit of {parameters.max_dim}.')

    for k, (Cb, Ab) in enumerate(zip(problem.C, problem.A)):
        nb = problem.blocks[k]
        if Cb.shape != (nb, nb) or Ab.shape != (problem.m, nb, nb):
            raise SolverError(f'block {k + 1} has inconsistent shapes.')
        scale = 1.0 + max(np.max(np.abs(Cb), initial=0.0), np.max(np.abs(Ab), initial=0.0))
        asym = max(np.max(np.abs(Cb - Cb.T), initial=0.0),
                   np.max(np.abs(Ab - Ab.transpose(0, 2, 1)), initial=0.0))
        if asym > _SYMMETRY_TOL * scale:
            raise SolverError(f'block {k + 1} has non-symmetric data (asymmetry {asym:.3g}).')


def _presolve(problem: SdpProblem) -> tuple[list[int], np.ndarray | None]:
    """
    Find a maximal independent set of constraints.

    Returns:
        tuple: The kept row indices, and a primal infeasibility ray when a
        dependent row contradicts the rows it depends on.
    """

    m = problem.m
    if m == 0:
        return [], None

    rows = np.hstack([Ab.reshape(m, -1) for Ab in problem.A])
    _, R, piv = scipy.linalg.qr(rows.T, mode='economic', pivoting=True)
    diag = np.abs(np.diag(R))
    rank = 0 if diag.size == 0 or diag[0] == 0 else int(np.sum(diag > _RANK_TOL * diag[0]))
    keep = sorted(int(i) for i in piv[:rank])
    dropped = sorted(int(i) for i in piv[rank:])

    if not dropped:
        return keep, None

    logger.warning(f'dropping {len(dropped)} linearly dependent constraint(s)')

    basis = rows[keep]
    for i in dropped:
        if keep:
            coef = scipy.linalg.lstsq(basis.T, rows[i])[0]
            implied = float(coef @ problem.b[keep])
        else:
            coef = np.zeros(0)
            implied = 0.0
        mismatch = problem.b[i] - implied
        if abs(mismatch) > _RANK_TOL * (1.0 + abs(problem.b[i]) + abs(implied)):
            ray = np.zeros(m)
            ray[i] = 1.0
            ray[keep] = -coef
            return keep, ray / mismatch

    return keep, None


class _InteriorPoint:
    """
    One run of the path-following iteration on a presolved problem.

    verdict, when given, replaces the default stopping test: it sees every
    iterate and returns a status to stop with, or None to continue. key
    orders iterates; on breakdown or at the iteration limit the smallest
    one seen is returned with the failure status.
    """

    def __init__(self, problem: SdpProblem, parameters: SolverParameters,
                 verdict: Callable[[SdpSolution], SdpStatus | None] = None,
                 key: Callable[[SdpSolution], tuple] = None) -> None:
        self.problem = problem
        self.params = parameters
        self.verdict = verdict
        self.key = key or _merit
        self.n = problem.dim
        self.normb = float(np.linalg.norm(problem.b))
        self.normC = _fro(list(problem.C))
        self.Aflat = [Ab.reshape(problem.m, -1) for Ab in problem.A]

    def _start(self):
        p = self.problem
        normA = np.sqrt(sum(np.sum(Ab * Ab, axis=(1, 2)) for Ab in p.A)) if p.m else np.zeros(0)
        root = np.sqrt(self.n)
        xi = max(10.0, root, root * float(np.max((1 + np.abs(p.b)) / (1 + normA), initial=0.0)))
        eta = max(10.0, root, self.normC, float(np.max(normA, initial=0.0)))
        X = [xi * np.eye(nb) for nb in p.blocks]
        Z = [eta * np.eye(nb) for nb in p.blocks]
        return X, np.zeros(p.m), Z

    def _schur(self, X, Zinv) -> np.ndarray:
        m = self.problem.m
        M = np.zeros((m, m))
        for Ab, Af, Xb, Zi in zip(self.problem.A, self.Aflat, X, Zinv):
            G = Xb[None, :, :] @ Ab @ Zi[None, :, :]
            M += Af @ G.reshape(m, -1).T
        return _sym(M)

    def _factor(self, M: np.ndarray):
        if M.shape[0] == 0:
            return None
        try:
            return ('cho', scipy.linalg.cho_factor(M, lower=True))
        except np.linalg.LinAlgError:
            bump = 1e-12 * max(1.0, float(np.max(np.diag(M))))
            try:
                return ('cho', scipy.linalg.cho_factor(M + bump * np.eye(M.shape[0]), lower=True))
            except np.linalg.LinAlgError:
                return ('lstsq', M)

    @staticmethod
    def _solve(factor, rhs: np.ndarray) -> np.ndarray:
        if factor is None:
            return np.zeros(0)
        kind, data = factor
        if kind == 'cho':
            return scipy.linalg.cho_solve(data, rhs)
        return scipy.linalg.lstsq(data, rhs)[0]

    def _direction(self, factor, X, Zinv, rp, Rd, Rc):
        p = self.problem
        K = [Rcb @ Zi for Rcb, Zi in zip(Rc, Zinv)]
        T = [Xb @ Rdb @ Zi for Xb, Rdb, Zi in zip(X, Rd, Zinv)]
        rhs = rp - p.apply(K) + p.apply(T)
        dy = self._solve(factor, rhs)
        Atdy = p.adjoint(dy)
        dZ = [Rdb - a for Rdb, a in zip(Rd, Atdy)]
        dX = [_sym(Kb - Xb @ dZb @ Zi) for Kb, Xb, dZb, Zi in zip(K, X, dZ, Zinv)]
        return dX, dy, dZ

    def _rays(self, X, y, pobj, dobj):
        p = self.problem
        tol = self.params.ray_tol

        if p.m and dobj > tol * self.normb * float(np.linalg.norm(y)):
            yhat = y / dobj
            lam = max(float(np.max(scipy.linalg.eigvalsh(_sym(a)))) for a in p.adjoint(yhat))
            if lam <= tol:
                return SdpStatus.PRIMAL_INFEASIBLE, yhat

        if pobj < -tol * self.normC * _fro(X):
            Xhat = [Xb / -pobj for Xb in X]
            if float(np.linalg.norm(p.apply(Xhat))) <= tol:
                return SdpStatus.DUAL_INFEASIBLE, Xhat

        return None

    def run(self) -> SdpSolution:
        p = self.problem
        params = self.params
        tol = float(params.tol)
        step = float(params.step)
        n = self.n

        X, y, Z = self._start()
        solution = SdpSolution(SdpStatus.MAX_ITER)
        best = None

        for it in range(params.max_iter + 1):
            Aty = p.adjoint(y)
            rp = p.b - p.apply(X)
            Rd = [_sym(Cb - a - Zb) for Cb, a, Zb in zip(p.C, Aty, Z)]
            pobj = p.objective(X)
            dobj = float(p.b @ y)
            xz = _inner(X, Z)
            scale = 1.0 + abs(pobj) + abs(dobj)

            solution = SdpSolution(
                SdpStatus.MAX_ITER, X=X, y=y, Z=Z,
                primal_objective=pobj, dual_objective=dobj,
                primal_residual=float(np.linalg.norm(rp)) / (1.0 + self.normb),
                dual_residual=_fro(Rd) / (1.0 + self.normC),
                gap=abs(pobj - dobj) / scale,
                complementarity=_fro([Xb @ Zb for Xb, Zb in zip(X, Z)]),
                iterations=it,
            )
            logger.debug(f'iter {it}: pobj {pobj:.9g} dobj {dobj:.9g} '
                         f'rp {solution.primal_residual:.2e} rd {solution.dual_residual:.2e} mu {xz / n:.2e}')

            if np.isfinite(pobj + dobj) and (best is None or self.key(solution) < self.key(best)):
                best = solution

            if self.verdict is not None:
                status = self.verdict(solution)
                if status is not None:
                    solution.status = status
                    return solution
            elif (solution.primal_residual <= tol and solution.dual_residual <= tol
                    and solution.gap <= tol and xz / scale <= tol
                    and solution.complementarity <= COMPLEMENTARITY_TOL):
                solution.status = SdpStatus.OPTIMAL
                return solution

            ray = self._rays(X, y, pobj, dobj)
            if ray is not None:
                solution.status, solution.ray = ray
                return solution

            if it == params.max_iter:
                break

            if not np.isfinite(pobj + dobj) or max(_fro(X), float(np.max(np.abs(y), initial=0.0))) > _DIVERGENCE:
                return self._fallback(best or solution, SdpStatus.NUMERICAL_FAILURE)

            try:
                LX = [scipy.linalg.cholesky(Xb, lower=True) for Xb in X]
                LZ = [scipy.linalg.cholesky(Zb, lower=True) for Zb in Z]
                Zinv = [scipy.linalg.cho_solve((L, True), np.eye(L.shape[0])) for L in LZ]

                factor = self._factor(self._schur(X, Zinv))
                mu = xz / n

                # predictor
                Rc = [-(Xb @ Zb) for Xb, Zb in zip(X, Z)]
                dXa, _, dZa = self._direction(factor, X, Zinv, rp, Rd, Rc)
                ap = min(1.0, _max_step(LX, dXa))
                ad = min(1.0, _max_step(LZ, dZa))
                mu_aff = _inner([Xb + ap * d for Xb, d in zip(X, dXa)], [Zb + ad * d for Zb, d in zip(Z, dZa)]) / n
                sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

                # corrector
                Rc = [sigma * mu * np.eye(Xb.shape[0]) - Xb @ Zb - a @ b
                      for Xb, Zb, a, b in zip(X, Z, dXa, dZa)]
                dX, dy, dZ = self._direction(factor, X, Zinv, rp, Rd, Rc)
                ap = min(1.0, step * _max_step(LX, dX))
                ad = min(1.0, step * _max_step(LZ, dZ))
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.debug(f'iteration {it} broke down: {e}')
                return self._fallback(best or solution, SdpStatus.NUMERICAL_FAILURE)

            if ap < 1e-12 and ad < 1e-12:
                logger.debug(f'iteration {it} stalled')
                return self._fallback(best or solution, SdpStatus.NUMERICAL_FAILURE)

            X = [_sym(Xb + ap * d) for Xb, d in zip(X, dX)]
            y = y + ad * dy
            Z = [_sym(Zb + ad * d) for Zb, d in zip(Z, dZ)]

        return self._fallback(best or solution, SdpStatus.MAX_ITER)

    def _fallback(self, best: SdpSolution, status: SdpStatus) -> SdpSolution:
        best.status = status
        logger.debug(f'returning iterate {best.iterations} with status {status.value}')
        return best


def solve(problem: SdpProblem, parameters: Parameters = None) -> SdpSolution:
    """
    Solve min <C, X> s.t. <A_i, X> = b_i, X psd.

    Linearly dependent constraints are dropped (with a warning) before the
    iteration; a dependent row that contradicts the others makes the problem
    primal infeasible. The returned y is indexed like the original rows.

    Args:
        problem (SdpProblem): The problem.
        parameters (Parameters): Solver options, see SolverParameters.

    Returns:
        SdpSolution: The status, the final (or best) iterate and any infeasibility ray.

    Raises:
        SolverError: If the problem exceeds the dimension limit or has non-symmetric data.
    """

    params = SolverParameters(parameters)
    _validate(problem, params)
    return _solve(problem, params)


def _solve(problem: SdpProblem, params: SolverParameters, verdict=None, key=None) -> SdpSolution:
    logger.info(f'solving SDP with {problem.m} constraints, blocks {list(problem.blocks)}')

    keep, ray = _presolve(problem)
    if ray is not None:
        logger.info('constraints are inconsistent')
        return SdpSolution(SdpStatus.PRIMAL_INFEASIBLE, y=np.zeros(problem.m), ray=ray)

    reduced = problem if len(keep) == problem.m else problem.restrict(keep)
    solution = _InteriorPoint(reduced, params, verdict, key).run()

    if len(keep) != problem.m:
        solution.y = _expand(solution.y, keep, problem.m)
        if isinstance(solution.ray, np.ndarray):
            solution.ray = _expand(solution.ray, keep, problem.m)

    logger.info(f'SDP finished with status {solution.status.value} after {solution.iterations} iterations')
    return solution


def _expand(v: np.ndarray, keep: list[int], m: int) -> np.ndarray:
    out = np.zeros(m)
    out[keep] = v
    return out


def polish(problem: SdpProblem, X: list[np.ndarray], rounds: int = 20) -> list[np.ndarray]:
    """
    Clean an approximate solution by alternating projections.

    Each round moves X to the nearest point of the affine set A(X) = b
    (least-norm correction) and then clips negative eigenvalues blockwise.
    Stops early once the affine residual is at rounding level.
    """

    m = problem.m
    if m == 0:
        return [Xb.copy() for Xb in X]

    rows = np.hstack([Ab.reshape(m, -1) for Ab in problem.A])
    normal = rows @ rows.T
    floor = _POLISH_FLOOR * (1.0 + float(np.linalg.norm(problem.b)))
    X = [Xb.copy() for Xb in X]
    for _ in range(rounds):
        r = problem.b - problem.apply(X)
        if float(np.linalg.norm(r)) <= floor:
            break
        step = scipy.linalg.lstsq(normal, r)[0]
        X = [Xb + a for Xb, a in zip(X, problem.adjoint(step))]
        clipped = []
        for Xb in X:
            values, vectors = scipy.linalg.eigh(_sym(Xb))
            clipped.append((vectors * np.clip(values, 0, None)) @ vectors.T)
        X = clipped
    return X


def feasibility(problem: SdpProblem, parameters: Parameters = None) -> SdpSolution:
    """
    Decide whether {X psd : <A_i, X> = b_i} is nonempty.

    Runs the phase-I problem min t s.t. <A_i, X> + r_i t = b_i, X psd,
    t >= 0, with r = b - A(I), for which (I, 1) is feasible. The problem
    is feasible iff the optimal t is at most slack_tol; otherwise the
    phase-I dual y, scaled to b^T y = 1, separates b from A(psd cone).

    Phase I runs at the caller's tol. It stops as soon as t is well below
    slack_tol with a small primal residual, or once the dual bound b^T y
    exceeds slack_tol at a converged iterate. If the iteration breaks down
    first, the verdict is taken from the iterate with the smallest slack.

    Returns:
        SdpSolution: Status OPTIMAL with slack <= slack_tol when feasible,
        PRIMAL_INFEASIBLE with the separating ray when not, and the failure
        status otherwise. X excludes the slack block.
    """

    params = SolverParameters(parameters)
    _validate(problem, params)
    tol = float(params.tol)
    slack_tol = float(params.slack_tol)

    m = problem.m
    residual = problem.b - problem.apply([np.eye(nb) for nb in problem.blocks])
    phase = SdpProblem(
        blocks=(*problem.blocks, 1),
        C=(*(np.zeros_like(Cb) for Cb in problem.C), np.ones((1, 1))),
        A=(*problem.A, residual.reshape(m, 1, 1)),
        b=problem.b,
    )

    def slack_of(s: SdpSolution) -> float:
        return float(s.X[-1][0, 0])

    def separated(s: SdpSolution) -> bool:
        return s.dual_objective > slack_tol and s.dual_residual <= tol

    def verdict(s: SdpSolution) -> SdpStatus | None:
        if slack_of(s) <= slack_tol / 100 and s.primal_residual <= tol / 10:
            return SdpStatus.OPTIMAL
        if separated(s) and s.gap <= tol:
            return SdpStatus.OPTIMAL
        return None

    def key(s: SdpSolution) -> tuple:
        return (slack_of(s) if s.primal_residual <= tol else np.inf, _merit(s))

    inner = SolverParameters(params, max_dim=params.max_dim + 1)
    result = _solve(phase, inner, verdict, key)

    solution = SdpSolution(
        result.status,
        X=result.X[:-1] if result.X else [],
        y=result.y,
        Z=result.Z[:-1] if result.Z else [],
        primal_objective=result.primal_objective,
        dual_objective=result.dual_objective,
        primal_residual=result.primal_residual,
        dual_residual=result.dual_residual,
        gap=result.gap,
        complementarity=result.complementarity,
        iterations=result.iterations,
        ray=result.ray,
        slack=slack_of(result) if result.X else None,
        slack_tol=slack_tol,
    )

    if result.status is SdpStatus.PRIMAL_INFEASIBLE:
        return solution

    if solution.slack is not None and solution.slack <= slack_tol and result.primal_residual <= tol:
        if not result.optimal:
            logger.info(f'phase I ended with {result.status.value}; best iterate has slack {solution.slack:.3g}')
        solution.status = SdpStatus.OPTIMAL
        return solution

    if solution.slack is not None and separated(result):
        ray = result.y / result.dual_objective
        worst = max(float(np.max(scipy.linalg.eigvalsh(_sym(a)))) for a in problem.adjoint(ray))
        if worst > params.ray_tol:
            logger.warning(f'separating functional has residual {worst:.3g}')
        solution.status = SdpStatus.PRIMAL_INFEASIBLE
        solution.ray = ray
        return solution

    return solution
