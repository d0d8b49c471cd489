import os
import unittest
from unittest import mock

import numpy as np

import ncert.sdpcore as sdp
from ncert.sdpcore import sdpsolver
from ncert.core import Parameters, SolverError


def single_block(n, rows, C=None):
    builder = sdp.SdpBuilder([n])
    for entries, rhs in rows:
        builder.add_constraint([(0, i, j, v) for i, j, v in entries], rhs)
    if C is not None:
        builder.add_objective([(0, i, j, v) for i, j, v in C])
    return builder.build()


class TestSolverParameters(unittest.TestCase):
    def test_defaults(self):
        p = sdp.SolverParameters()
        self.assertEqual(p.tol, 1e-8)
        self.assertEqual(p.max_iter, 100)
        self.assertEqual(p.step, 0.98)
        self.assertEqual(p.seed, 0)

    def test_clone_keeps_values(self):
        base = Parameters(tol=1e-6, seed=3)
        p = sdp.SolverParameters(base)
        self.assertEqual(p.tol, 1e-6)
        self.assertEqual(p.seed, 3)
        self.assertEqual(sdp.SolverParameters(p, max_iter=5).max_iter, 5)

    def test_invalid(self):
        for kwargs in [{'tol': 0}, {'max_iter': 0}, {'step': 1.0}, {'max_dim': 0}]:
            try:
                sdp.SolverParameters(**kwargs)
                self.fail(f'Expected ValueError for {kwargs}')
            except ValueError:
                pass

    def test_environment_cap(self):
        with mock.patch.dict(os.environ, {sdp.MAX_DIM_ENV: '7'}):
            self.assertEqual(sdp.SolverParameters().max_dim, 7)
        with mock.patch.dict(os.environ, {sdp.MAX_DIM_ENV: 'lots'}):
            try:
                sdp.SolverParameters()
                self.fail('Expected ValueError')
            except ValueError:
                pass


class TestBuilder(unittest.TestCase):
    def test_off_diagonal_split(self):
        problem = single_block(2, [([(0, 1, 1.0)], 1.0)])
        np.testing.assert_array_equal(problem.A[0][0], [[0.0, 0.5], [0.5, 0.0]])
        self.assertEqual(problem.apply([np.array([[1.0, 3.0], [3.0, 1.0]])])[0], 3.0)

    def test_bad_block(self):
        try:
            sdp.SdpBuilder([2, 0])
            self.fail('Expected SolverError')
        except SolverError:
            pass

    def test_sdpa_export(self):
        problem = single_block(2, [([(0, 0, 1.0)], 1.0)], C=[(0, 0, 1.0), (1, 1, 1.0)])
        lines = sdp.to_sdpa(problem).splitlines()
        self.assertEqual(lines[0], '1 = mDIM')
        self.assertEqual(lines[1], '1 = nBLOCK')
        self.assertEqual(lines[2], '2')
        self.assertEqual(lines[3], '1')
        self.assertIn('0 1 1 1 -1', lines)
        self.assertIn('0 1 2 2 -1', lines)
        self.assertIn('1 1 1 1 1', lines)


class TestSolve(unittest.TestCase):
    def test_trace_minimization(self):
        problem = single_block(2, [([(0, 0, 1.0)], 1.0)], C=[(0, 0, 1.0), (1, 1, 1.0)])
        solution = sdp.solve(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.OPTIMAL)
        self.assertAlmostEqual(solution.primal_objective, 1.0, delta=1e-7)
        np.testing.assert_allclose(solution.X[0], np.diag([1.0, 0.0]), atol=1e-6)
        self.assertLessEqual(solution.primal_residual, 1e-8)
        self.assertLessEqual(solution.dual_residual, 1e-8)
        self.assertLessEqual(solution.gap, 1e-8)

    def test_duality_and_complementarity(self):
        rng = np.random.default_rng(0)
        n, m = 4, 5
        builder = sdp.SdpBuilder([n, 2])
        G = rng.standard_normal((n, n))
        X0 = G @ G.T + np.eye(n)
        for _ in range(m):
            S = rng.standard_normal((n, n))
            S = (S + S.T) / 2
            entries = [(0, i, j, S[i, j] * (1 if i == j else 2)) for i in range(n) for j in range(i, n)]
            entries.append((1, 0, 0, 1.0))
            builder.add_constraint(entries, float(np.sum(S * X0)) + 1.0)
        builder.add_objective([(0, i, i, 1.0) for i in range(n)] + [(1, 0, 0, 1.0), (1, 1, 1, 1.0)])
        problem = builder.build()

        solution = sdp.solve(problem, Parameters(tol=1e-10))
        self.assertEqual(solution.status, sdp.SdpStatus.OPTIMAL)
        self.assertLessEqual(solution.complementarity, sdp.COMPLEMENTARITY_TOL)
        self.assertGreaterEqual(solution.primal_objective, solution.dual_objective - 1e-7)
        for Xb, Zb in zip(solution.X, solution.Z):
            self.assertLessEqual(np.linalg.norm(Xb @ Zb), 1e-7)
            self.assertGreaterEqual(np.linalg.eigvalsh(Xb)[0], -1e-9)

        again = sdp.solve(problem, Parameters(tol=1e-10))
        self.assertEqual(again.status, solution.status)
        self.assertAlmostEqual(again.primal_objective, solution.primal_objective, delta=1e-12)

    def test_breakdown_returns_best_iterate(self):
        problem = single_block(2, [([(0, 0, 1.0), (1, 1, 1.0)], 1.0)], C=[(0, 0, 1.0), (1, 1, 2.0)])
        real = sdpsolver._InteriorPoint._schur
        calls = []

        def failing(self, X, Zinv):
            calls.append(1)
            if len(calls) > 3:
                raise np.linalg.LinAlgError('forced')
            return real(self, X, Zinv)

        with mock.patch.object(sdpsolver._InteriorPoint, '_schur', failing):
            solution = sdp.solve(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.NUMERICAL_FAILURE)
        self.assertLessEqual(solution.iterations, 3)
        self.assertTrue(all(np.all(np.isfinite(Xb)) for Xb in solution.X))

    def test_iteration_limit(self):
        problem = single_block(2, [([(0, 0, 1.0), (1, 1, 1.0)], 1.0)], C=[(0, 0, 1.0), (1, 1, 2.0)])
        solution = sdp.solve(problem, Parameters(max_iter=2))
        self.assertEqual(solution.status, sdp.SdpStatus.MAX_ITER)
        self.assertLessEqual(solution.iterations, 2)
        self.assertEqual(len(solution.X), 1)

    def test_primal_infeasible(self):
        problem = single_block(2, [([(0, 0, 1.0), (1, 1, 1.0)], -1.0)])
        solution = sdp.solve(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.PRIMAL_INFEASIBLE)
        ray = solution.ray
        self.assertAlmostEqual(float(problem.b @ ray), 1.0, delta=1e-9)
        self.assertLessEqual(np.max(np.linalg.eigvalsh(problem.adjoint(ray)[0])), 1e-7)

    def test_dual_infeasible(self):
        problem = single_block(2, [([(0, 1, 1.0)], 0.0)], C=[(0, 0, -1.0)])
        solution = sdp.solve(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.DUAL_INFEASIBLE)
        self.assertAlmostEqual(problem.objective(solution.ray), -1.0, delta=1e-9)

    def test_dependent_rows(self):
        row = [(0, 0, 1.0), (1, 1, 1.0)]
        problem = single_block(2, [(row, 2.0), ([(0, 0, 2.0), (1, 1, 2.0)], 4.0)], C=[(0, 0, 1.0)])
        with self.assertLogs('ncert.sdpcore.sdpsolver', level='WARNING'):
            solution = sdp.solve(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.OPTIMAL)
        self.assertEqual(solution.y.shape, (2,))
        self.assertAlmostEqual(solution.primal_objective, 0.0, delta=1e-7)

        inconsistent = single_block(2, [(row, 2.0), (row, 3.0)])
        with self.assertLogs('ncert.sdpcore.sdpsolver', level='WARNING'):
            solution = sdp.solve(inconsistent)
        self.assertEqual(solution.status, sdp.SdpStatus.PRIMAL_INFEASIBLE)
        self.assertAlmostEqual(float(inconsistent.b @ solution.ray), 1.0, delta=1e-9)

    def test_dimension_cap(self):
        problem = single_block(4, [([(0, 0, 1.0)], 1.0)])
        try:
            sdp.solve(problem, Parameters(max_dim=3))
            self.fail('Expected SolverError')
        except SolverError:
            pass

    def test_non_symmetric(self):
        problem = sdp.SdpProblem((2,), (np.array([[0.0, 1.0], [0.0, 0.0]]),), (np.zeros((1, 2, 2)),), np.zeros(1))
        try:
            sdp.solve(problem)
            self.fail('Expected SolverError')
        except SolverError:
            pass


class TestFeasibility(unittest.TestCase):
    def test_unit_trace(self):
        problem = single_block(2, [([(0, 0, 1.0), (1, 1, 1.0)], 1.0)])
        solution = sdp.feasibility(problem)
        self.assertTrue(solution.feasible)
        self.assertLessEqual(solution.slack, 1e-8)
        self.assertAlmostEqual(float(np.trace(solution.X[0])), 1.0, delta=1e-7)

    def test_negative_entry(self):
        problem = single_block(2, [([(0, 0, 1.0)], -1.0)])
        solution = sdp.feasibility(problem)
        self.assertFalse(solution.feasible)
        self.assertEqual(solution.status, sdp.SdpStatus.PRIMAL_INFEASIBLE)
        self.assertAlmostEqual(float(problem.b @ solution.ray), 1.0, delta=1e-9)
        self.assertLessEqual(np.max(np.linalg.eigvalsh(problem.adjoint(solution.ray)[0])), 1e-7)

    def test_negative_trace(self):
        problem = single_block(3, [([(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)], -1.0)])
        solution = sdp.feasibility(problem)
        self.assertEqual(solution.status, sdp.SdpStatus.PRIMAL_INFEASIBLE)

    def test_boundary_face(self):
        # X11 = 0 forces the only solutions onto a rank one face
        problem = single_block(2, [([(0, 0, 1.0)], 1.0), ([(1, 1, 1.0)], 0.0)])
        for slack_tol in (1e-8, 1e-10):
            solution = sdp.feasibility(problem, Parameters(slack_tol=slack_tol))
            self.assertTrue(solution.feasible)
            self.assertLessEqual(solution.slack, slack_tol)
            self.assertAlmostEqual(float(solution.X[0][0, 0]), 1.0, delta=1e-7)

    def test_runs_at_caller_tolerance(self):
        problem = single_block(2, [([(0, 0, 1.0), (1, 1, 1.0)], 1.0)])
        seen = []
        real = sdpsolver._solve

        def spy(phase, params, *args):
            seen.append(float(params.tol))
            return real(phase, params, *args)

        with mock.patch.object(sdpsolver, '_solve', spy):
            self.assertTrue(sdp.feasibility(problem, Parameters(tol=1e-7)).feasible)
        self.assertEqual(seen, [1e-7])

    def test_gram_system(self):
        # Gram matrices of 1 + 1.2x^2 + x^4 over the basis (1, x, x^2)
        basis = [0, 1, 2]
        builder = sdp.SdpBuilder([3])
        target = {0: 1.0, 1: 0.0, 2: 1.2, 3: 0.0, 4: 1.0}
        for degree, coeff in target.items():
            entries = [(0, i, j, 1.0) for i in basis for j in basis if i + j == degree]
            builder.add_constraint(entries, coeff)
        solution = sdp.feasibility(builder.build())
        self.assertTrue(solution.feasible)
        self.assertLessEqual(solution.slack, 1e-9)
        self.assertGreaterEqual(np.linalg.eigvalsh(solution.X[0])[0], -1e-9)


if __name__ == '__main__':
    unittest.main()
