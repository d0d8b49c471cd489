"""
JSON codecs for the command-line documents.

Matrices are row-major nested lists whose entries are numbers or rational
strings such as "3/4". Words are written as expressions, "1" for the empty
word.
"""

import json
from fractions import Fraction

import numpy as np

from ..core import ParseError, ShapeMismatchError
from ..domination import DominationCertificate, SeparatingFunctional
from ..ncpoly import MatrixNcPoly, MatrixTuple, VariableContext, Word, parse, to_rational
from ..pencil import LinearPencil
from ..positivity import IdealTerm, MomentMatrix, QmResult, SosCertificate, MEMBER


def load(path: str) -> dict:
    """
    Read a JSON document.

    Raises:
        FileNotFoundError: If the file does not exist.
        ParseError: If the file is not valid JSON.
    """

    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as err:
            raise ParseError(f'{path}: {err.msg}', err.pos) from err


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Fraction):
        return str(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2, allow_nan=False, default=_plain)


def _field(data: dict, name: str, what: str):
    if not isinstance(data, dict) or name not in data:
        raise ParseError(f'{what} needs a "{name}" field')
    return data[name]


def _entries(rows, name: str) -> list[list[Fraction]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError(f'{name} must be a list of rows')
    try:
        return [[to_rational(v) for v in row] for row in rows]
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise ParseError(f'{name}: {err}') from err


def read_matrix(rows, name: str = 'matrix') -> np.ndarray:
    """
    A matrix of integers when every entry is integral, of floats otherwise.
    """

    entries = _entries(rows, name)
    if len({len(r) for r in entries}) > 1:
        raise ShapeMismatchError(f'{name} has rows of different lengths')
    if all(v.denominator == 1 for row in entries for v in row):
        return np.array([[int(v) for v in row] for row in entries], dtype=int)
    return np.array([[float(v) for v in row] for row in entries], dtype=float)


def _has_strings(rows) -> bool:
    if isinstance(rows, list):
        return any(_has_strings(r) for r in rows)
    return isinstance(rows, str)


def write_matrix(M: np.ndarray) -> list:
    M = np.asarray(M)
    if M.dtype == object:
        return [[str(v) for v in row] for row in M]
    if M.dtype.kind in 'iu':
        return M.tolist()
    return np.asarray(M, dtype=float).tolist()


def read_tuple(data: dict, symmetric: bool = True) -> MatrixTuple:
    """
    Read {"n": n, "X": [...]}. Rational string entries make the tuple exact.
    """

    matrices = _field(data, 'X', 'a matrix tuple')
    if not isinstance(matrices, list) or not matrices:
        raise ParseError('"X" must be a nonempty list of matrices')

    exact = _has_strings(matrices)
    if exact:
        X = MatrixTuple([_entries(m, f'X{j}') for j, m in enumerate(matrices, start=1)], symmetric, exact=True)
    else:
        X = MatrixTuple([read_matrix(m, f'X{j}') for j, m in enumerate(matrices, start=1)], symmetric)
    if 'n' in data and data['n'] != X.n:
        raise ShapeMismatchError(f'tuple declares n = {data["n"]} but holds {X.n} x {X.n} matrices')
    return X


def write_tuple(X: MatrixTuple) -> dict:
    return {'n': X.n, 'X': [write_matrix(x) for x in X.matrices]}


def read_pencil(data: dict) -> LinearPencil:
    """
    Read {"g": g, "size": d, "A0": [[...]] | "I", "A": [...]}; A0 defaults to I.
    """

    A = _field(data, 'A', 'a pencil')
    if not isinstance(A, list):
        raise ParseError('"A" must be a list of matrices')

    A0 = data.get('A0', 'I')
    if A0 == 'I':
        A0 = None
    elif isinstance(A0, str):
        raise ParseError(f'unknown A0 shorthand {A0!r}')
    else:
        A0 = read_matrix(A0, 'A0')

    L = LinearPencil(A0, [read_matrix(a, f'A{j}') for j, a in enumerate(A, start=1)])
    if data.get('g', L.g) != L.g:
        raise ShapeMismatchError(f'pencil declares g = {data["g"]} but has {L.g} coefficients')
    if data.get('size', L.size) != L.size:
        raise ShapeMismatchError(f'pencil declares size {data["size"]} but its matrices are {L.size} x {L.size}')
    return L


def write_pencil(L: LinearPencil) -> dict:
    return {
        'g': L.g,
        'size': L.size,
        'A0': 'I' if L.monic else write_matrix(L.A0),
        'A': [write_matrix(a) for a in L.A],
    }


def read_word(text: str, context: VariableContext) -> Word:
    p = parse(text, context)
    if len(p.coeffs) != 1 or next(iter(p.coeffs.values())) != 1:
        raise ParseError(f'{text!r} is not a single word')
    return next(iter(p.coeffs))


def read_matrix_poly(data: dict, context: VariableContext) -> MatrixNcPoly:
    """
    Read {"shape": [d, e], "terms": [{"word": "x1*x2", "coeff": [[...]]}, ...]}.
    """

    shape = _field(data, 'shape', 'a matrix polynomial')
    terms = _field(data, 'terms', 'a matrix polynomial')
    if not (isinstance(shape, list) and len(shape) == 2):
        raise ParseError('"shape" must be a pair [rows, columns]')

    coeffs = {}
    for term in terms:
        word = read_word(_field(term, 'word', 'a term'), context)
        value = read_matrix(_field(term, 'coeff', 'a term'), 'coeff').astype(float)
        coeffs[word] = coeffs.get(word, 0) + value
    return MatrixNcPoly(context, tuple(shape), coeffs)


def write_functional(dual: dict, context: VariableContext) -> dict:
    return {context.format_word(w): float(v) for w, v in dual.items()}


def write_sos_certificate(certificate: SosCertificate) -> dict:
    context = certificate.context
    out = {
        'basis': [context.format_word(w) for w in certificate.basis],
        'gram': write_matrix(certificate.G),
        'factors': [str(f) for f in certificate.factors],
        'cyclic': certificate.cyclic,
    }
    if certificate.weight is not None:
        out['weight'] = str(certificate.weight)
    return out


def read_sos_certificate(data: dict, context: VariableContext) -> SosCertificate:
    basis = [read_word(w, context) for w in _field(data, 'basis', 'a certificate')]
    G = np.array(_field(data, 'gram', 'a certificate'), dtype=float).reshape(len(basis), len(basis))
    weight = parse(data['weight'], context) if 'weight' in data else None
    return SosCertificate.from_gram(context, basis, G, cyclic=bool(data.get('cyclic', False)), weight=weight)


def write_qm_certificate(result: QmResult) -> dict:
    context = result.sigma.context
    return {
        'sigma': write_sos_certificate(result.sigma),
        'localizing': [write_sos_certificate(b) for b in result.localizing],
        'ideal': [{'left': context.format_word(t.left), 'generator': t.generator,
                   'right': context.format_word(t.right), 'coeff': float(c)} for t, c in result.ideal],
    }


def read_qm_certificate(data: dict, context: VariableContext, degree: int) -> QmResult:
    sigma = read_sos_certificate(_field(data, 'sigma', 'a quadratic module certificate'), context)
    localizing = [read_sos_certificate(b, context) for b in data.get('localizing', [])]
    ideal = [(IdealTerm(read_word(t['left'], context), int(t['generator']), read_word(t['right'], context)),
              float(t['coeff'])) for t in data.get('ideal', [])]
    return QmResult(MEMBER, degree, sigma, localizing, ideal)


def write_domination_certificate(certificate: DominationCertificate) -> dict:
    return {
        'mu': certificate.mu,
        'V': [write_matrix(v) for v in certificate.V],
        'residuals': certificate.residuals,
    }


def read_domination_certificate(data: dict) -> DominationCertificate:
    V = _field(data, 'V', 'a domination certificate')
    return DominationCertificate([np.array(_entries(v, 'V'), dtype=float) for v in V])


def write_separating_functional(dual: SeparatingFunctional) -> dict:
    return {'Y0': write_matrix(dual.Y0), 'Y': [write_matrix(y) for y in dual.Y]}


def write_moments(moments: MomentMatrix) -> dict:
    context = moments.context
    return {
        'order': moments.order,
        'tracial': moments.tracial,
        'basis': [context.format_word(w) for w in moments.basis],
        'M': write_matrix(moments.M),
        'rank': moments.rank_d,
        'rank_lower': moments.rank_lower,
        'flat': moments.flat,
        'ambiguous': moments.ambiguous,
    }
