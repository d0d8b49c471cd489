"""
The ncert command line.

Every verb reads its inputs from flags and JSON files, runs one operation,
and prints a JSON document with the fields status, result, certificate,
residuals and timing_ms. Verdicts live in the document; the exit code only
says whether the computation ran: 0 on success, 2 on bad input, 3 when the
solver or an internal cross-check failed.
"""

import argparse
import logging
import re
import sys
import time

import numpy as np

from ..core import (
    ConsistencyError,
    ContextMismatchError,
    FileReporter,
    Parameters,
    ParseError,
    PreconditionError,
    ShapeMismatchError,
    SolverError,
    StreamReporter,
)
from ..domination import check_domination, matrix_cube, radius, sets_equal
from ..ncpoly import Kind, NcPoly, VariableContext, cyclic_reduce, cyclically_equivalent, directional_derivative, evaluate, parse
from ..pencil import minimal_defining_pencil, unitarily_equivalent
from ..positivity import (
    convexity_check,
    cyclic_sos_decompose,
    eigenvalue_optimize,
    extract_minimizer,
    left_ideal_membership,
    qm_membership,
    sos_decompose,
    trace_optimize,
    trace_zero_check,
)
from . import jsonio

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

INPUT_ERRORS = (ParseError, ContextMismatchError, ShapeMismatchError, PreconditionError,
                ValueError, KeyError, TypeError, FileNotFoundError)
SOLVER_ERRORS = (SolverError, ConsistencyError)

VERIFIED = 'verified'
REJECTED = 'rejected'


def _infer_vars(texts: list[str]) -> int:
    g = 1
    for text in texts:
        g = max([g] + [int(j) for j in re.findall(r'\bx(\d+)\b', text)])
        if re.search(r'\bz\b', text):
            g = max(g, 3)
        elif re.search(r'\by\b', text):
            g = max(g, 2)
    return g


class Job:
    """
    One invocation: the parsed flags with helpers to read their inputs.

    Parameters:
        args (argparse.Namespace): The parsed command line.
    """

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        kwargs = {'seed': args.seed}
        if args.tol is not None:
            kwargs['tol'] = args.tol
        self.parameters = Parameters(**kwargs)
        self._context = None

    def expressions(self) -> list[str]:
        texts = []
        for name in ('poly', 'other'):
            if getattr(self.args, name, None):
                texts.append(getattr(self.args, name))
        for name in ('q', 'ideal'):
            texts.extend(getattr(self.args, name, None) or [])
        return texts

    def context(self, g: int | None = None) -> VariableContext:
        if self._context is None:
            g = self.args.vars or g or _infer_vars(self.expressions())
            self._context = VariableContext(g, Kind.FREE if self.args.free else Kind.SYMMETRIC)
        return self._context

    def poly(self, text: str | None = None) -> NcPoly:
        text = self.args.poly if text is None else text
        if text is None:
            raise ValueError('--poly is required.')
        return parse(text, self.context())

    def polys(self, texts: list[str] | None) -> list[NcPoly]:
        return [self.poly(t) for t in texts or []]

    def pencil(self, name: str):
        path = getattr(self.args, name)
        return jsonio.read_pencil(jsonio.load(path))

    def previous(self) -> dict | None:
        """
        The document named by --verify, if any.
        """

        if self.args.verify is None:
            return None
        document = jsonio.load(self.args.verify)
        if not isinstance(document, dict) or document.get('certificate') is None:
            raise ParseError(f'{self.args.verify} holds no certificate')
        return document


def _verdict(ok: bool, residuals: dict) -> dict:
    return {'status': VERIFIED if ok else REJECTED, 'result': {'verified': ok}, 'residuals': residuals}


def _sos_residuals(certificate) -> dict:
    return {'coefficients': certificate.residual, 'min_eig': certificate.min_eigenvalue()}


def _eval(job: Job) -> dict:
    args = job.args
    X = jsonio.read_tuple(jsonio.load(args.X), symmetric=not args.free)
    context = job.context(X.g)
    if args.matrix_poly:
        p = jsonio.read_matrix_poly(jsonio.load(args.matrix_poly), context)
    else:
        p = job.poly()
    value = evaluate(p, X)
    trace = np.trace(value)
    return {
        'status': 'ok',
        'result': {
            'value': jsonio.write_matrix(value),
            'trace': str(trace) if X.exact else float(trace),
        },
    }


def _derivative(job: Job) -> dict:
    q = directional_derivative(job.poly(), job.args.order)
    return {'status': 'ok', 'result': {'order': q.order, 'derivative': str(q), 'homogeneous': q.is_homogeneous()}}


def _cyceq(job: Job) -> dict:
    p, q = job.poly(), job.poly(job.args.other)
    return {
        'status': 'ok',
        'result': {
            'equivalent': cyclically_equivalent(p, q),
            'difference': str(cyclic_reduce(p - q)),
        },
    }


def _sos_like(job: Job, cyclic: bool) -> dict:
    p = job.poly()
    previous = job.previous()
    if previous is not None:
        certificate = jsonio.read_sos_certificate(previous['certificate'], p.context)
        ok = certificate.verify(p)
        return _verdict(ok, _sos_residuals(certificate))

    if cyclic:
        result = cyclic_sos_decompose(p, job.parameters)
    else:
        result = sos_decompose(p, job.parameters, chip=job.args.chip)
    document = {'status': result.status, 'result': {'sos': result.feasible, 'reason': result.reason}}
    if result.feasible:
        document['certificate'] = jsonio.write_sos_certificate(result.certificate)
        document['residuals'] = _sos_residuals(result.certificate)
    elif result.dual is not None:
        document['result']['dual'] = jsonio.write_functional(result.dual, p.context)
    return document


def _sos(job: Job) -> dict:
    return _sos_like(job, cyclic=False)


def _cyc_sos(job: Job) -> dict:
    return _sos_like(job, cyclic=True)


def _optimum(result) -> dict:
    out = {'bounded': result.bounded, 'f_star': result.f_star}
    if result.moments is not None:
        out['moments'] = jsonio.write_moments(result.moments)
    return out


def _optimize(job: Job, tracial: bool) -> dict:
    p = job.poly()
    previous = job.previous()
    if previous is not None:
        f_star = float(previous['result']['f_star'])
        certificate = jsonio.read_sos_certificate(previous['certificate'], p.context)
        ok = certificate.verify(p - NcPoly.constant(p.context, f_star))
        return _verdict(ok, _sos_residuals(certificate))

    result = trace_optimize(p, job.parameters) if tracial else eigenvalue_optimize(p, job.parameters)
    document = {'status': result.status, 'result': _optimum(result)}
    if result.certificate is not None:
        document['certificate'] = jsonio.write_sos_certificate(result.certificate)
        document['residuals'] = _sos_residuals(result.certificate)
    return document


def _eigopt(job: Job) -> dict:
    return _optimize(job, tracial=False)


def _traceopt(job: Job) -> dict:
    return _optimize(job, tracial=True)


def _minimizer(job: Job) -> dict:
    p = job.poly()
    result = eigenvalue_optimize(p, job.parameters)
    if not result.bounded:
        return {'status': result.status, 'result': {'f_star': None, 'minimizer': None}}

    extraction = extract_minimizer(result.moments, p)
    out = {'f_star': result.f_star, 'minimizer': None}
    if extraction.minimizer is not None:
        m = extraction.minimizer
        out['minimizer'] = {'A': jsonio.write_tuple(m.A), 'v': m.v.tolist(), 'value': m.value}
    return {'status': extraction.status, 'result': out}


def _qm(job: Job) -> dict:
    args = job.args
    p = job.poly()
    q = job.polys(args.q)
    ideal = job.polys(args.ideal)
    previous = job.previous()
    if previous is not None:
        result = jsonio.read_qm_certificate(previous['certificate'], p.context, args.degree)
        ok = result.verify(p, ideal)
        return _verdict(ok, {'coefficients': result.residual})

    result = qm_membership(p, q, args.degree, ideal, job.parameters)
    document = {'status': result.status, 'result': {'member': result.member, 'degree': result.degree}}
    if result.member:
        document['certificate'] = jsonio.write_qm_certificate(result)
        document['residuals'] = {'coefficients': result.residual}
    elif result.dual is not None:
        document['result']['dual'] = jsonio.write_functional(result.dual, p.context)
    return document


def _ideal(job: Job) -> dict:
    p = job.poly()
    result = left_ideal_membership(p, job.polys(job.args.q), job.args.degree)
    cofactors = [str(r) for r in result.cofactors] if result.cofactors is not None else None
    return {'status': result.status, 'result': {'member': result.member, 'degree': result.degree, 'cofactors': cofactors}}


def _trace_zero(job: Job) -> dict:
    result = trace_zero_check(job.poly(), job.parameters)
    return {'status': 'ok', 'result': {'zero': result.zero, 'max_trace': result.max_trace}}


def _convex(job: Job) -> dict:
    result = convexity_check(job.poly(), job.parameters, search=job.args.search)
    out = {'convex': result.convex, 'reason': result.reason, 'counterexample': None}
    if result.counterexample is not None:
        X, Y = result.counterexample
        out['counterexample'] = {'X': jsonio.write_tuple(X), 'Y': jsonio.write_tuple(Y)}
    document = {'status': 'ok', 'result': out}
    hessian = result.certificate.certificate if result.certificate is not None else None
    if hessian is not None:
        document['certificate'] = jsonio.write_sos_certificate(hessian)
        document['residuals'] = _sos_residuals(hessian)
    return document


def _dominate(job: Job) -> dict:
    L1, L2 = job.pencil('L1'), job.pencil('L2')
    previous = job.previous()
    if previous is not None:
        certificate = jsonio.read_domination_certificate(previous['certificate'])
        ok = certificate.verify(L1, L2)
        return _verdict(ok, certificate.residuals)

    result = check_domination(L1, L2, job.parameters)
    document = {'status': result.status, 'result': {'dominated': result.dominated}}
    if result.certificate is not None:
        document['certificate'] = jsonio.write_domination_certificate(result.certificate)
        document['residuals'] = result.certificate.residuals
    if result.dual is not None:
        document['result']['dual'] = jsonio.write_separating_functional(result.dual)
    if result.witness is not None:
        document['result']['witness'] = jsonio.write_tuple(result.witness)
    return document


def _equal(job: Job) -> dict:
    result = sets_equal(job.pencil('L1'), job.pencil('L2'), job.parameters)
    return {
        'status': 'ok',
        'result': {
            'equal': result.equal,
            'via': result.via,
            'minimal_equivalence': result.minimal_equivalence,
            'forward': result.forward.status,
            'backward': result.backward.status,
        },
    }


def _radius(job: Job) -> dict:
    result = radius(job.pencil('L'), job.parameters)
    bracket = list(result.bracket) if result.bracket is not None else None
    return {'status': 'ok', 'result': {'bounded': result.bounded, 'rho': result.rho, 'bracket': bracket}}


def _cube(job: Job) -> dict:
    return {'status': 'ok', 'result': {'beta': matrix_cube(job.pencil('L'), job.parameters)}}


def _minpencil(job: Job) -> dict:
    L = job.pencil('L')
    minimal = minimal_defining_pencil(L, job.parameters)
    return {'status': 'ok', 'result': {'size': minimal.size, 'original_size': L.size, 'pencil': jsonio.write_pencil(minimal)}}


def _uniteq(job: Job) -> dict:
    result = unitarily_equivalent(job.pencil('L1'), job.pencil('L2'), job.parameters)
    return {
        'status': result.status,
        'result': {
            'equivalent': result.equivalent,
            'U': jsonio.write_matrix(result.U) if result.U is not None else None,
            'residual': result.residual,
        },
    }


def _poly_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument('--poly', required=required, help='polynomial expression, e.g. "x1^2 - x1*x2"')


def _pencil_flags(parser: argparse.ArgumentParser, names: list[str]) -> None:
    for name in names:
        parser.add_argument(f'--{name}', required=True, metavar='FILE', help=f'pencil JSON for {name}')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--vars', type=int, default=None, help='number of variables (inferred from the expressions)')
    common.add_argument('--free', action='store_true', help='use free variables x and x\' instead of symmetric ones')
    common.add_argument('--seed', type=int, default=0, help='seed for every sampling step (default 0)')
    common.add_argument('--tol', type=float, default=None, help='solver tolerance (default 1e-8)')
    common.add_argument('--output', default=None, metavar='FILE', help='also write the JSON document to FILE')
    common.add_argument('--verbose', action='store_true', help='log to stderr at DEBUG level')

    parser = argparse.ArgumentParser(prog='ncert', description='Certificates for free semialgebraic geometry.')
    verbs = parser.add_subparsers(dest='verb', required=True, metavar='VERB')

    def verb(name: str, handler, text: str, verifiable: bool = False) -> argparse.ArgumentParser:
        sub = verbs.add_parser(name, parents=[common], help=text, description=text)
        sub.set_defaults(handler=handler, verify=None)
        if verifiable:
            sub.add_argument('--verify', default=None, metavar='FILE',
                             help='re-check the certificate of a previous run without solving')
        return sub

    sub = verb('eval', _eval, 'evaluate a polynomial at a matrix tuple')
    _poly_flags(sub, required=False)
    sub.add_argument('--matrix-poly', default=None, metavar='FILE', help='matrix polynomial JSON')
    sub.add_argument('--X', required=True, metavar='FILE', help='matrix tuple JSON')

    sub = verb('derivative', _derivative, 'directional derivative p^(k)(x)[h]')
    _poly_flags(sub)
    sub.add_argument('--order', type=int, default=1)

    sub = verb('cyceq', _cyceq, 'cyclic equivalence of two polynomials')
    _poly_flags(sub)
    sub.add_argument('--other', required=True, help='the second expression')

    sub = verb('sos', _sos, 'sum of hermitian squares decomposition', verifiable=True)
    _poly_flags(sub)
    sub.add_argument('--chip', action='store_true', help='restrict the Gram basis to right factors of p')

    _poly_flags(verb('eigopt', _eigopt, 'smallest eigenvalue of p over all matrix tuples', verifiable=True))
    _poly_flags(verb('minimizer', _minimizer, 'eigenvalue minimizer by flat extraction'))
    _poly_flags(verb('traceopt', _traceopt, 'tracial lower bound of p', verifiable=True))

    sub = verb('qm', _qm, 'quadratic module membership at a degree', verifiable=True)
    _poly_flags(sub)
    sub.add_argument('--q', action='append', default=[], help='a generator (repeatable)')
    sub.add_argument('--ideal', action='append', default=[], help='an ideal generator (repeatable)')
    sub.add_argument('--degree', type=int, required=True)

    sub = verb('ideal', _ideal, 'left ideal membership at a degree')
    _poly_flags(sub)
    sub.add_argument('--q', action='append', default=[], help='a generator (repeatable)')
    sub.add_argument('--degree', type=int, required=True)

    _poly_flags(verb('cyc-sos', _cyc_sos, 'sum of squares modulo commutators', verifiable=True))
    _poly_flags(verb('trace-zero', _trace_zero, 'whether p is a sum of commutators'))

    sub = verb('convex', _convex, 'matrix convexity')
    _poly_flags(sub)
    sub.add_argument('--no-search', dest='search', action='store_false', help='skip the counterexample search')

    _pencil_flags(verb('dominate', _dominate, 'whether D_L1 is contained in D_L2', verifiable=True), ['L1', 'L2'])
    _pencil_flags(verb('equal', _equal, 'whether D_L1 equals D_L2'), ['L1', 'L2'])
    _pencil_flags(verb('radius', _radius, 'radius of D_L'), ['L'])
    _pencil_flags(verb('cube', _cube, 'largest matrix cube inside D_L'), ['L'])
    _pencil_flags(verb('minpencil', _minpencil, 'minimal defining pencil'), ['L'])
    _pencil_flags(verb('uniteq', _uniteq, 'unitary equivalence of monic pencils'), ['L1', 'L2'])
    return parser


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger('ncert')
    root.handlers = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


def main(argv: list[str] | None = None, stream=None) -> int:
    """
    Run one verb.

    Args:
        argv (list[str]): The arguments, sys.argv[1:] when None.
        stream: Where the JSON document goes, stdout when None.

    Returns:
        int: The exit code.
    """

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else EXIT_INPUT

    _configure_logging(args.verbose)
    start = time.perf_counter()
    try:
        reporters = [StreamReporter(stream)]
        if args.output is not None:
            reporters.append(FileReporter(args.output))
        document = {'verb': args.verb, **args.handler(Job(args))}
    except SOLVER_ERRORS as err:
        sys.stderr.write(f'ncert: {type(err).__name__}: {err}\n')
        return EXIT_SOLVER
    except INPUT_ERRORS as err:
        sys.stderr.write(f'ncert: {type(err).__name__}: {err}\n')
        return EXIT_INPUT

    document['timing_ms'] = round(1000 * (time.perf_counter() - start), 3)
    logger.debug('%s finished in %.1f ms', args.verb, document['timing_ms'])
    try:
        text = jsonio.dumps(document)
    except (ValueError, TypeError) as err:
        # a non-finite number reached the document
        sys.stderr.write(f'ncert: {type(err).__name__}: {err}\n')
        return EXIT_SOLVER
    for reporter in reporters:
        with reporter as r:
            r.write(text)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
