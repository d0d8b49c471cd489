"""
Variable contexts and words of the free *-algebra.

A letter is stored as the integer code ``2*(j-1) + starred`` for the
variable ``x_j``; a word is a tuple of letter codes. Symmetric contexts only
ever contain even codes. Integer order on codes gives the letter order
x1 < x1* < x2 < ..., and ``word_key`` extends it to graded lexicographic
order on words.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum

Word = tuple[int, ...]

EMPTY_WORD: Word = ()


class Kind(Enum):
    SYMMETRIC = 'symmetric'
    FREE = 'free'


@dataclass(frozen=True)
class VariableContext:
    """
    The ambient algebra of a polynomial.

    Parameters:
        g (int): Number of variables.
        kind (Kind): SYMMETRIC means x_j* = x_j, FREE means x_j and x_j* are distinct letters.
        names (tuple[str, ...]): Display names of the variables, x1..xg when omitted.
    """

    g: int
    kind: Kind = Kind.SYMMETRIC
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.g, int) or self.g < 1:
            raise ValueError('a context needs at least one variable.')

        if not isinstance(self.kind, Kind):
            object.__setattr__(self, 'kind', Kind(self.kind))

        if self.names is not None and len(self.names) != self.g:
            raise ValueError(f'expected {self.g} variable names, got {len(self.names)}.')

    @property
    def free(self) -> bool:
        return self.kind is Kind.FREE

    def alphabet(self) -> list[int]:
        """
        The letter codes of the context in increasing order.
        """

        if self.free:
            return list(range(2 * self.g))
        return list(range(0, 2 * self.g, 2))

    def letter(self, j: int, starred: bool = False) -> int:
        """
        The code of x_j (1-based), starred or not. Stars collapse in symmetric contexts.
        """

        if not 1 <= j <= self.g:
            raise ValueError(f'variable index {j} outside 1..{self.g}.')

        return 2 * (j - 1) + (1 if starred and self.free else 0)

    def admit(self, code: int) -> int:
        """
        Check a letter code against the context and collapse stars when symmetric.
        """

        if not 0 <= code < 2 * self.g:
            raise ValueError(f'letter code {code} outside the context alphabet.')

        return code if self.free else code & ~1

    def star_letter(self, code: int) -> int:
        return code ^ 1 if self.free else code

    def star(self, word: Word) -> Word:
        """
        The involution of a word: reverse the letters and flip each star.
        """

        return tuple(self.star_letter(c) for c in reversed(word))

    def variable_name(self, j: int) -> str:
        if self.names is not None:
            return self.names[j - 1]
        return f'x{j}'

    def letter_name(self, code: int) -> str:
        name = self.variable_name(code // 2 + 1)
        return name + "'" if code & 1 else name

    def format_word(self, word: Word) -> str:
        """
        Render a word with powers for repeated letters, e.g. x1^2*x2'.
        """

        if not word:
            return '1'

        parts = []
        for code, run in itertools.groupby(word):
            count = len(list(run))
            name = self.letter_name(code)
            parts.append(name if count == 1 else f'{name}^{count}')
        return '*'.join(parts)

    def doubled(self) -> 'VariableContext':
        """
        The context (x1..xg, h1..hg) carrying directional derivatives.
        """

        if self.g == 1 and self.names is None:
            names = ('x', 'h')
        else:
            base = tuple(self.variable_name(j) for j in range(1, self.g + 1))
            names = base + tuple(f'h{j}' for j in range(1, self.g + 1))
        return VariableContext(2 * self.g, self.kind, names)


def word_key(word: Word) -> tuple:
    """
    Sort key for graded lexicographic order.
    """

    return (len(word), word)


def word_basis(context: VariableContext, d: int) -> list[Word]:
    """
    All words of degree at most d in graded lexicographic order.

    Args:
        context (VariableContext): The context to enumerate.
        d (int): The maximal degree.

    Returns:
        list[Word]: sum_{j<=d} G^j words, G = g (symmetric) or 2g (free).
    """

    if d < 0:
        raise ValueError('degree must be nonnegative.')

    alphabet = context.alphabet()
    basis = []
    for length in range(d + 1):
        basis.extend(itertools.product(alphabet, repeat=length))
    return basis


def rotations(word: Word) -> list[Word]:
    return [word[i:] + word[:i] for i in range(max(len(word), 1))]


def cyclic_canonical(word: Word) -> Word:
    """
    The lexicographically least rotation of a word.
    """

    return min(rotations(word))


def h_degree(word: Word, g: int) -> int:
    """
    Number of direction letters in a word of a doubled context over g base variables.
    """

    return sum(1 for c in word if c >= 2 * g)
