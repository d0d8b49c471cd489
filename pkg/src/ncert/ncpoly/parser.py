"""
Recursive-descent parser for polynomial expressions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := '-' factor | '+' factor | primary postfix*
    postfix := "'" | '^' INTEGER
    primary := NUMBER | NAME | '(' expr ')'

NUMBER accepts decimals and rationals such as 3/4. NAME is x1..xg, the
context's own names, or x, y, z when g <= 3.
"""

import re
from fractions import Fraction

from ..core import ParseError
from .polynomial import NcPoly
from .words import VariableContext

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()']))"
)

_ALIASES = ('x', 'y', 'z')

# bounds on what a single power may expand to
MAX_DEGREE = 64
MAX_TERMS = 100_000


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == '':
            break
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f'unexpected character {text[offset]!r}', offset)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


def _variable_table(context: VariableContext) -> dict[str, int]:
    table = {f'x{j}': j for j in range(1, context.g + 1)}
    if context.names is not None:
        table.update({name: j for j, name in enumerate(context.names, start=1)})
    elif context.g <= 3:
        table.update({name: j for j, name in enumerate(_ALIASES[:context.g], start=1)})
    return table


class _Parser:
    def __init__(self, text: str, context: VariableContext) -> None:
        self._tokens = _tokenize(text)
        self._index = 0
        self._context = context
        self._variables = _variable_table(context)

    def _peek(self) -> tuple[str, str, int]:
        return self._tokens[self._index]

    def _take(self) -> tuple[str, str, int]:
        token = self._tokens[self._index]
        self._index += 1
        return token

    def _expect(self, value: str) -> None:
        kind, text, pos = self._take()
        if text != value or kind != 'op':
            found = text or 'end of input'
            raise ParseError(f'expected {value!r}, found {found!r}', pos)

    def parse(self) -> NcPoly:
        result = self._expr()
        kind, text, pos = self._peek()
        if kind != 'end':
            raise ParseError(f'unexpected {text!r}', pos)
        return result

    def _expr(self) -> NcPoly:
        result = self._term()
        while True:
            kind, text, _ = self._peek()
            if kind == 'op' and text in '+-':
                self._take()
                rhs = self._term()
                result = result + rhs if text == '+' else result - rhs
            else:
                return result

    def _term(self) -> NcPoly:
        result = self._factor()
        while True:
            kind, text, _ = self._peek()
            if kind == 'op' and text == '*':
                self._take()
                result = result * self._factor()
            else:
                return result

    def _factor(self) -> NcPoly:
        kind, text, _ = self._peek()
        if kind == 'op' and text in '+-':
            self._take()
            inner = self._factor()
            return -inner if text == '-' else inner

        result = self._primary()
        while True:
            kind, text, pos = self._peek()
            if kind == 'op' and text == "'":
                self._take()
                result = result.star()
            elif kind == 'op' and text == '^':
                self._take()
                kind, exponent, pos = self._take()
                digits = exponent.lstrip('0') if kind == 'number' and exponent.isdigit() else ''
                if not digits:
                    raise ParseError('exponent must be a positive integer literal', pos)
                if len(digits) > 6 or max(result.degree, 1) * int(digits) > MAX_DEGREE:
                    raise ParseError(f'power of degree above {MAX_DEGREE}', pos)
                k = int(digits)
                if len(result.coeffs) > 1 and len(result.coeffs) ** k > MAX_TERMS:
                    raise ParseError(f'power would expand to more than {MAX_TERMS} terms', pos)
                result = result ** k
            else:
                return result

    def _primary(self) -> NcPoly:
        kind, text, pos = self._take()
        if kind == 'number':
            try:
                return NcPoly.constant(self._context, Fraction(text))
            except (ValueError, ZeroDivisionError) as e:
                raise ParseError(f'bad number {text!r}', pos) from e

        if kind == 'name':
            return NcPoly.variable(self._context, self._resolve(text, pos))

        if kind == 'op' and text == '(':
            inner = self._expr()
            self._expect(')')
            return inner

        raise ParseError(f'unexpected {text or "end of input"!r}', pos)

    def _resolve(self, name: str, pos: int) -> int:
        if name in self._variables:
            return self._variables[name]

        match = re.fullmatch(r'x(\d+)', name)
        if match is not None:
            raise ParseError(f'variable {name} exceeds the {self._context.g} variables of the context', pos)

        raise ParseError(f'unknown variable {name!r}', pos)


def parse(text: str, context: VariableContext) -> NcPoly:
    """
    Parse an expression into a polynomial of the given context.

    Args:
        text (str): The expression, e.g. "4 - x1 - (2*x1^2 + x1*x2)".
        context (VariableContext): The context the variables belong to.

    Returns:
        NcPoly: The coefficient map of the expression.

    Raises:
        ParseError: On a syntax error or an out-of-range variable.
    """

    if not isinstance(text, str):
        raise ParseError('expression must be a string')

    return _Parser(text, context).parse()
