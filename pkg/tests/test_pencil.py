import unittest

import numpy as np

import ncert.pencil as pen
from ncert.core import PreconditionError, ShapeMismatchError
from ncert.ncpoly import MatrixTuple, random_tuple


def disk_pencil():
    # [[1, x1, x2], [x1, 1, 0], [x2, 0, 1]]
    A1 = [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    A2 = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
    return pen.LinearPencil(None, [A1, A2])


def spin_pencil():
    # [[1 + x1, x2], [x2, 1 - x1]]
    return pen.LinearPencil(None, [[[1, 0], [0, -1]], [[0, 1], [1, 0]]])


def random_orthogonal(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_pencil(rng, g, d):
    A = []
    for _ in range(g):
        m = rng.standard_normal((d, d))
        A.append((m + m.T) / 2)
    return pen.LinearPencil(None, A)


class TestLinearPencil(unittest.TestCase):
    def test_monic_default(self):
        L = disk_pencil()
        self.assertTrue(L.monic)
        self.assertEqual(L.size, 3)
        self.assertEqual(L.g, 2)

    def test_not_monic(self):
        L = pen.LinearPencil(2 * np.eye(2), [np.eye(2)])
        self.assertFalse(L.monic)
        try:
            L.require_monic()
            self.fail('Expected PreconditionError')
        except PreconditionError:
            pass

    def test_rejects_asymmetric(self):
        try:
            pen.LinearPencil(None, [[[0, 1], [0, 0]]])
            self.fail('Expected PreconditionError')
        except PreconditionError:
            pass

        L = pen.LinearPencil(None, [[[0.0, 1.0], [1.0 + 1e-13, 0.0]]])
        np.testing.assert_array_equal(L.A[0], L.A[0].T)

    def test_shapes(self):
        for A0, A in [(None, []), (None, [[[1, 0, 0]]]), (np.eye(3), [np.eye(2)]), (None, [np.eye(2), np.eye(3)])]:
            try:
                pen.LinearPencil(A0, A)
                self.fail(f'Expected ShapeMismatchError for {A}')
            except ShapeMismatchError:
                pass

    def test_matrix_poly(self):
        L = spin_pencil()
        p = L.to_matrix_poly()
        self.assertEqual(p.degree, 1)
        self.assertEqual(pen.LinearPencil.from_matrix_poly(p), L)


class TestEvalPencil(unittest.TestCase):
    def test_origin(self):
        X = MatrixTuple([[[0]], [[0]]])
        np.testing.assert_array_equal(pen.eval_pencil(disk_pencil(), X), np.eye(3))

    def test_scalar_point(self):
        X = MatrixTuple([[[0.3]], [[-0.4]]])
        np.testing.assert_allclose(pen.eval_pencil(spin_pencil(), X), [[1.3, -0.4], [-0.4, 0.7]])

    def test_separating_point(self):
        X = MatrixTuple([np.diag([0.5, 0.0]), [[0, 0.75], [0.75, 0]]])
        value = pen.eval_pencil(disk_pencil(), X)
        self.assertEqual(value.shape, (6, 6))
        self.assertTrue(pen.membership(disk_pencil(), X).inside)
        self.assertFalse(pen.membership(spin_pencil(), X).inside)

    def test_variable_count(self):
        try:
            pen.eval_pencil(disk_pencil(), MatrixTuple([[[0]]]))
            self.fail('Expected ShapeMismatchError')
        except ShapeMismatchError:
            pass

    def test_closure(self):
        X = MatrixTuple([[[1.0]], [[0.0]]])
        result = pen.membership(spin_pencil(), X)
        self.assertFalse(result.inside)
        self.assertTrue(result.in_closure)

    def test_direct_sum_of_points(self):
        rng = np.random.default_rng(1)
        L = disk_pencil()
        for _ in range(20):
            X = random_tuple(rng, 2, 2)
            Y = random_tuple(rng, 2, 3)
            joint = np.linalg.eigvalsh(pen.eval_pencil(L, X.direct_sum(Y)))
            parts = np.sort(np.concatenate([np.linalg.eigvalsh(pen.eval_pencil(L, X)),
                                            np.linalg.eigvalsh(pen.eval_pencil(L, Y))]))
            np.testing.assert_allclose(joint, parts, atol=1e-9)

    def test_unitary_conjugation(self):
        rng = np.random.default_rng(2)
        L = spin_pencil()
        for _ in range(20):
            X = random_tuple(rng, 2, 3)
            U = random_orthogonal(rng, 3)
            before = np.linalg.eigvalsh(pen.eval_pencil(L, X))
            after = np.linalg.eigvalsh(pen.eval_pencil(L, X.conjugate(U)))
            np.testing.assert_allclose(before, after, atol=1e-9)


class TestConstructions(unittest.TestCase):
    def test_ball_is_disk(self):
        self.assertEqual(pen.ball_pencil(2, 1), disk_pencil())

    def test_nonpositive_size(self):
        for make in [pen.ball_pencil, pen.cube_pencil]:
            try:
                make(2, 0)
                self.fail('Expected ValueError')
            except ValueError:
                pass

    def test_cube_eigenvalues(self):
        rng = np.random.default_rng(3)
        X = random_tuple(rng, 1, 3)
        values = np.linalg.eigvalsh(pen.eval_pencil(pen.cube_pencil(1, 1), X))
        expected = np.sort(np.concatenate([1 + np.linalg.eigvalsh(X[0]), 1 - np.linalg.eigvalsh(X[0])]))
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_cube_membership(self):
        cube = pen.cube_pencil(1, 2)
        self.assertTrue(pen.membership(cube, MatrixTuple([np.diag([1.9, -1.9])])).inside)
        self.assertFalse(pen.membership(cube, MatrixTuple([np.diag([2.1, 0.0])])).inside)

    def test_origin_inside(self):
        for L in [pen.ball_pencil(3, 0.1), pen.cube_pencil(3, 0.1)]:
            self.assertTrue(pen.membership(L, MatrixTuple([[[0]]] * 3)).inside)

    def test_direct_sum_doubles_spectrum(self):
        rng = np.random.default_rng(4)
        L = spin_pencil()
        X = random_tuple(rng, 2, 2)
        single = np.linalg.eigvalsh(pen.eval_pencil(L, X))
        double = np.linalg.eigvalsh(pen.eval_pencil(pen.direct_sum(L, L), X))
        np.testing.assert_allclose(double, np.sort(np.repeat(single, 2)), atol=1e-12)

    def test_direct_sum_intersects(self):
        rng = np.random.default_rng(5)
        L, M = disk_pencil(), pen.cube_pencil(2, 0.8)
        both = pen.direct_sum(L, M)
        for trial in range(500):
            X = random_tuple(rng, 2, trial % 3 + 1, scale=0.6)
            self.assertEqual(pen.membership(both, X).inside,
                             pen.membership(L, X).inside and pen.membership(M, X).inside)

    def test_direct_sum_variable_count(self):
        try:
            pen.direct_sum(disk_pencil(), pen.cube_pencil(3, 1))
            self.fail('Expected ShapeMismatchError')
        except ShapeMismatchError:
            pass


class TestUnitaryEquivalence(unittest.TestCase):
    def test_conjugated(self):
        rng = np.random.default_rng(6)
        L = random_pencil(rng, 2, 4)
        M = L.conjugate(random_orthogonal(rng, 4))
        result = pen.unitarily_equivalent(L, M)
        self.assertTrue(result)
        self.assertEqual(result.status, pen.EQUIVALENT)
        self.assertLessEqual(result.residual, 1e-6)
        for a, b in zip(L.A, M.A):
            np.testing.assert_allclose(result.U.T @ a @ result.U, b, atol=1e-6)

    def test_sizes_differ(self):
        result = pen.unitarily_equivalent(disk_pencil(), spin_pencil())
        self.assertFalse(result)
        self.assertEqual(result.status, pen.NOT_EQUIVALENT)

    def test_permutation(self):
        L = pen.LinearPencil(None, [np.diag([1, 2])])
        M = pen.LinearPencil(None, [np.diag([2, 1])])
        result = pen.unitarily_equivalent(L, M)
        self.assertTrue(result)
        np.testing.assert_allclose(np.abs(result.U), [[0, 1], [1, 0]], atol=1e-9)

    def test_permuted_direct_sum(self):
        rng = np.random.default_rng(8)
        L, M = random_pencil(rng, 2, 3), random_pencil(rng, 2, 2)
        result = pen.unitarily_equivalent(pen.direct_sum(L, M), pen.direct_sum(M, L))
        self.assertEqual(result.status, pen.EQUIVALENT)
        np.testing.assert_allclose(result.U.T @ result.U, np.eye(5), atol=1e-9)
        for a, b in zip(pen.direct_sum(L, M).A, pen.direct_sum(M, L).A):
            np.testing.assert_allclose(result.U.T @ a @ result.U, b, atol=1e-6)

    def test_different_spectra(self):
        L = pen.LinearPencil(None, [np.diag([1, 2])])
        M = pen.LinearPencil(None, [np.diag([1, 3])])
        self.assertFalse(pen.unitarily_equivalent(L, M))

    def test_equivalence_relation(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            L = random_pencil(rng, 2, 3)
            M = L.conjugate(random_orthogonal(rng, 3))
            N = M.conjugate(random_orthogonal(rng, 3))
            other = random_pencil(rng, 2, 3)
            self.assertTrue(pen.unitarily_equivalent(L, L))
            self.assertTrue(pen.unitarily_equivalent(M, L))
            self.assertTrue(pen.unitarily_equivalent(L, N))
            self.assertFalse(pen.unitarily_equivalent(L, other))

    def test_requires_monic(self):
        try:
            pen.unitarily_equivalent(pen.LinearPencil(np.zeros((2, 2)), [np.eye(2)]), spin_pencil())
            self.fail('Expected PreconditionError')
        except PreconditionError:
            pass


class TestMinimalPencil(unittest.TestCase):
    def test_irreducible_blocks(self):
        L = pen.direct_sum(disk_pencil(), spin_pencil())
        blocks = pen.irreducible_blocks(L)
        self.assertEqual(sorted(b.size for _, b in blocks), [2, 3])
        Q = np.hstack([Q for Q, _ in blocks])
        np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-9)

    def test_duplicate(self):
        L = disk_pencil()
        minimal = pen.minimal_defining_pencil(pen.direct_sum(L, L))
        self.assertEqual(minimal.size, 3)
        self.assertTrue(pen.unitarily_equivalent(minimal, L))

    def test_inactive_block(self):
        L = disk_pencil()
        minimal = pen.minimal_defining_pencil(pen.direct_sum(L, pen.ball_pencil(2, 2)))
        self.assertEqual(minimal.size, 3)
        self.assertTrue(pen.unitarily_equivalent(minimal, L))

    def test_idempotent(self):
        minimal = pen.minimal_defining_pencil(spin_pencil())
        self.assertEqual(minimal.size, 2)
        self.assertEqual(pen.minimal_defining_pencil(minimal).size, 2)

    def test_unbounded(self):
        L = pen.LinearPencil(None, [np.diag([1, 0]), np.diag([0, 1])])
        try:
            pen.minimal_defining_pencil(L)
            self.fail('Expected PreconditionError')
        except PreconditionError:
            pass


if __name__ == '__main__':
    unittest.main()
