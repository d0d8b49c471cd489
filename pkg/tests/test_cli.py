import io
import json
import os
import shutil
import tempfile
import unittest
from unittest import mock

from ncert.cli.main import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, main
from ncert.core import ConsistencyError, SolverError

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


def data(name):
    return os.path.join(DATA, name)


def run(*argv):
    stream = io.StringIO()
    with mock.patch('sys.stderr', new_callable=io.StringIO):
        code = main(list(argv), stream)
    text = stream.getvalue()
    return code, json.loads(text) if text else None


class TestCliBasics(unittest.TestCase):
    def test_unknown_verb(self):
        code, document = run('integrate', '--poly', 'x')
        self.assertEqual(code, EXIT_INPUT)
        self.assertIsNone(document)

    def test_missing_flag(self):
        code, _ = run('sos')
        self.assertEqual(code, EXIT_INPUT)

    def test_document_fields(self):
        code, document = run('derivative', '--poly', 'x^2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['verb'], 'derivative')
        self.assertEqual(document['status'], 'ok')
        self.assertIn('timing_ms', document)
        self.assertEqual(document['result']['derivative'], 'x*h + h*x')
        self.assertTrue(document['result']['homogeneous'])

    def test_parse_error(self):
        code, _ = run('sos', '--poly', 'x^ + 1')
        self.assertEqual(code, EXIT_INPUT)

    def test_precondition(self):
        code, _ = run('sos', '--poly', 'x*y', '--vars', '2')
        self.assertEqual(code, EXIT_INPUT)

    def test_too_many_variables(self):
        code, _ = run('sos', '--poly', 'x3^2', '--vars', '2')
        self.assertEqual(code, EXIT_INPUT)

    def test_missing_file(self):
        code, _ = run('radius', '--L', data('missing.json'))
        self.assertEqual(code, EXIT_INPUT)

    def test_broken_json(self):
        code, _ = run('eval', '--poly', 'x1', '--X', data('broken.json'))
        self.assertEqual(code, EXIT_INPUT)

    def test_output_folder_missing(self):
        code, _ = run('derivative', '--poly', 'x^2', '--output', os.path.join(DATA, 'missing', 'out.json'))
        self.assertEqual(code, EXIT_INPUT)

    def test_solver_failure(self):
        with mock.patch('ncert.cli.main.check_domination', side_effect=SolverError('no verdict')):
            code, document = run('dominate', '--L1', data('spin.json'), '--L2', data('disk.json'))
        self.assertEqual(code, EXIT_SOLVER)
        self.assertIsNone(document)

    def test_consistency_failure(self):
        with mock.patch('ncert.cli.main.convexity_check', side_effect=ConsistencyError('paths disagree')):
            code, _ = run('convex', '--poly', 'x^2')
        self.assertEqual(code, EXIT_SOLVER)

    def test_verbose(self):
        code, _ = run('cyceq', '--poly', 'x*y', '--other', 'y*x', '--verbose')
        self.assertEqual(code, EXIT_OK)


class TestEval(unittest.TestCase):
    def test_float_tuple(self):
        code, document = run('eval', '--poly', 'x1^2 + x2', '--X', data('tuple.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['result']['value'], [[1.0, 1.0], [1.0, 4.0]])
        self.assertEqual(document['result']['trace'], 5.0)

    def test_exact_tuple(self):
        code, document = run('eval', '--poly', 'x1^2 - x2^2', '--X', data('exact_tuple.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['result']['value'], [['-5/16', '0'], ['0', '-9/16']])
        self.assertEqual(document['result']['trace'], '-7/8')

    def test_matrix_poly(self):
        code, document = run('eval', '--matrix-poly', data('matrix_poly.json'), '--X', data('tuple.json'))
        self.assertEqual(code, EXIT_OK)
        value = document['result']['value']
        self.assertEqual(len(value), 4)
        self.assertEqual(value[0][0], 2.0)

    def test_mismatched_sizes(self):
        code, document = run('eval', '--poly', 'x1^2', '--X', data('bad_tuple.json'))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIsNone(document)

    def test_needs_a_polynomial(self):
        code, _ = run('eval', '--X', data('tuple.json'))
        self.assertEqual(code, EXIT_INPUT)


class TestPolynomialVerbs(unittest.TestCase):
    def setUp(self) -> None:
        self.folder = tempfile.mkdtemp()

    def tearDown(self) -> None:
        shutil.rmtree(self.folder)

    def test_cyceq(self):
        code, document = run('cyceq', '--poly', 'x*y*y', '--other', 'y*x*y')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['equivalent'])
        self.assertEqual(document['result']['difference'], '0')

    def test_sos_and_verify(self):
        out = os.path.join(self.folder, 'sos.json')
        code, document = run('sos', '--poly', 'x^2 - 2*x + 1', '--output', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'sos')
        self.assertLessEqual(document['residuals']['coefficients'], 1e-7)
        with open(out) as f:
            self.assertEqual(json.load(f)['certificate'], document['certificate'])

        code, verdict = run('sos', '--poly', 'x^2 - 2*x + 1', '--verify', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(verdict['status'], 'verified')

        code, verdict = run('sos', '--poly', 'x^2 + 1', '--verify', out)
        self.assertEqual(verdict['status'], 'rejected')

    def test_tampered_gram(self):
        out = os.path.join(self.folder, 'sos.json')
        run('sos', '--poly', 'x^2 - 2*x + 1', '--output', out)
        with open(out) as f:
            document = json.load(f)
        document['certificate']['gram'] = [[-v for v in row] for row in document['certificate']['gram']]
        with open(out, 'w') as f:
            json.dump(document, f)
        code, verdict = run('sos', '--poly', 'x^2 - 2*x + 1', '--verify', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(verdict['status'], 'rejected')

    def test_verify_needs_certificate(self):
        code, _ = run('sos', '--poly', 'x^2', '--verify', data('tuple.json'))
        self.assertEqual(code, EXIT_INPUT)

    def test_sos_infeasible(self):
        code, document = run('sos', '--poly', 'x^2 - 1')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'infeasible')
        self.assertFalse(document['result']['sos'])
        self.assertIn('dual', document['result'])
        self.assertNotIn('certificate', document)

    def test_eigopt_and_verify(self):
        out = os.path.join(self.folder, 'eigopt.json')
        code, document = run('eigopt', '--poly', 'x^4 - 2*x^2', '--output', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'optimal')
        self.assertAlmostEqual(document['result']['f_star'], -1.0, delta=1e-6)
        self.assertIn('moments', document['result'])

        code, verdict = run('eigopt', '--poly', 'x^4 - 2*x^2', '--verify', out)
        self.assertEqual(verdict['status'], 'verified')

    def test_eigopt_unbounded(self):
        code, document = run('eigopt', '--poly=-x^2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'unbounded_below')
        self.assertFalse(document['result']['bounded'])

    def test_minimizer(self):
        code, document = run('minimizer', '--poly', 'x^4 - 2*x^2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'ok')
        self.assertAlmostEqual(document['result']['minimizer']['value'], -1.0, delta=1e-5)

    def test_traceopt(self):
        code, document = run('traceopt', '--poly', 'x^2 + 1')
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(document['result']['f_star'], 1.0, delta=1e-6)
        self.assertTrue(document['result']['moments']['tracial'])

    def test_qm_and_verify(self):
        out = os.path.join(self.folder, 'qm.json')
        args = ['qm', '--poly', '1 - x^2', '--q', '1 - x^2', '--degree', '1']
        code, document = run(*args, '--output', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'member')
        self.assertEqual(len(document['certificate']['localizing']), 1)

        code, verdict = run(*args, '--verify', out)
        self.assertEqual(verdict['status'], 'verified')

    def test_qm_degree_too_small(self):
        code, document = run('qm', '--poly', 'x^4', '--q', '1 - x^2', '--degree', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'degree_too_small')

    def test_ideal(self):
        code, document = run('ideal', '--poly', 'x^2 + y*x', '--q', 'x', '--degree', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['member'])
        self.assertEqual(document['result']['cofactors'], ['x1 + x2'])

    def test_cyc_sos_and_verify(self):
        out = os.path.join(self.folder, 'cyc.json')
        p = "x'^2*x^2 - x^2*x'^2 + x*x' + 1"
        code, document = run('cyc-sos', '--poly', p, '--free', '--output', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'sos')
        self.assertTrue(document['certificate']['cyclic'])

        code, verdict = run('cyc-sos', '--poly', p, '--free', '--verify', out)
        self.assertEqual(verdict['status'], 'verified')

    def test_trace_zero(self):
        code, document = run('trace-zero', '--poly', 'x*y - y*x')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['zero'])

    def test_convex_quartic(self):
        code, document = run('convex', '--poly', 'x^4', '--vars', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(document['result']['convex'])
        self.assertIsNotNone(document['result']['counterexample'])

    def test_convex_quadratic(self):
        code, document = run('convex', '--poly', 'x^2 + x*y + y*x + 2*y^2', '--no-search')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['convex'])
        self.assertIn('certificate', document)


class TestPencilVerbs(unittest.TestCase):
    def setUp(self) -> None:
        self.folder = tempfile.mkdtemp()

    def tearDown(self) -> None:
        shutil.rmtree(self.folder)

    def test_dominate_and_verify(self):
        out = os.path.join(self.folder, 'dominate.json')
        pencils = ['--L1', data('spin.json'), '--L2', data('disk.json')]
        code, document = run('dominate', *pencils, '--output', out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['status'], 'dominated')
        self.assertTrue(document['result']['dominated'])
        self.assertLessEqual(document['residuals']['isometry'], 1e-8)
        self.assertEqual(len(document['certificate']['V']), document['certificate']['mu'])

        code, verdict = run('dominate', *pencils, '--verify', out)
        self.assertEqual(verdict['status'], 'verified')

        with open(out) as f:
            tampered = json.load(f)
        tampered['certificate']['V'] = [[[0, 0, 0], [0, 0, 0]]]
        with open(out, 'w') as f:
            json.dump(tampered, f)
        code, verdict = run('dominate', *pencils, '--verify', out)
        self.assertEqual(verdict['status'], 'rejected')

    def test_not_dominated(self):
        code, document = run('dominate', '--L1', data('disk.json'), '--L2', data('spin.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(document['result']['dominated'])
        self.assertIn('dual', document['result'])

    def test_equal(self):
        code, document = run('equal', '--L1', data('disk.json'), '--L2', data('spin.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(document['result']['equal'])
        self.assertEqual(document['result']['backward'], 'dominated')

    def test_radius(self):
        code, document = run('radius', '--L', data('disk.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['bounded'])
        self.assertAlmostEqual(document['result']['rho'], 1.0, delta=2e-3)

    def test_cube(self):
        code, document = run('cube', '--L', data('disk.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(document['result']['beta'], 0.70710678, delta=2e-3)

    def test_minpencil(self):
        code, document = run('minpencil', '--L', data('spin.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(document['result']['size'], 2)
        self.assertEqual(document['result']['pencil']['A0'], 'I')

    def test_uniteq(self):
        code, document = run('uniteq', '--L1', data('disk.json'), '--L2', data('disk.json'))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(document['result']['equivalent'])
        self.assertEqual(len(document['result']['U']), 3)

        code, document = run('uniteq', '--L1', data('disk.json'), '--L2', data('spin.json'))
        self.assertEqual(document['status'], 'not_equivalent')


if __name__ == '__main__':
    unittest.main()
