"""
Structure of monic pencils: unitary equivalence, splitting into irreducible
common blocks, and minimal defining subpencils.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..core import ConsistencyError, Parameters, PreconditionError, ShapeMismatchError
from .linear import LinearPencil, direct_sum_all

logger = logging.getLogger(__name__)

SEED = 0x5EED
TRACE_TOL = 1e-8
WITNESS_TOL = 1e-6
_SPAN_TOL = 1e-9
_EIG_GAP = 1e-6

EQUIVALENT = 'equivalent'
NOT_EQUIVALENT = 'not_equivalent'
NO_WITNESS = 'equivalent by traces, witness construction failed'


@dataclass(frozen=True)
class EquivalenceResult:
    """
    Parameters:
        equivalent (bool): Whether U^T L U = M for some orthogonal U.
        status (str): 'equivalent', 'not_equivalent', or the witness failure status.
        U (np.ndarray): The witness, when one was constructed.
        residual (float): max_j ||U^T A_j U - B_j||, when U exists.
    """

    equivalent: bool
    status: str
    U: np.ndarray | None = None
    residual: float | None = None

    def __bool__(self) -> bool:
        return self.equivalent


def _traces_agree(A: tuple[np.ndarray, ...], B: tuple[np.ndarray, ...]) -> bool:
    """
    Compare tr w(A) and tr w(B) over every word w.

    Words are explored breadth first, keeping only those whose joint value
    (w(A), w(B)) is independent of the values seen so far. The kept values
    span the joint algebra, and trace is linear, so checking them covers
    all words; the search saturates within the 2d^2 length bound.
    """

    d = A[0].shape[0]
    basis: list[np.ndarray] = []

    def admit(P: np.ndarray, Q: np.ndarray) -> bool:
        v = np.concatenate([P.ravel(), Q.ravel()])
        r = v.copy()
        for q in basis:
            r -= (q @ r) * q
        if np.linalg.norm(r) <= _SPAN_TOL * max(1.0, np.linalg.norm(v)):
            return False
        basis.append(r / np.linalg.norm(r))
        return True

    I = np.eye(d)
    admit(I, I)
    frontier = [(I, I)]
    length = 0
    while frontier and length < 2 * d * d:
        length += 1
        grown = []
        for P, Q in frontier:
            for a, b in zip(A, B):
                P2, Q2 = a @ P, b @ Q
                scale = max(np.max(np.abs(P2), initial=0.0), np.max(np.abs(Q2), initial=0.0))
                if scale == 0:
                    continue
                P2, Q2 = P2 / scale, Q2 / scale
                if not admit(P2, Q2):
                    continue
                tp, tq = np.trace(P2), np.trace(Q2)
                if abs(tp - tq) > TRACE_TOL * max(1.0, abs(tp), abs(tq)):
                    logger.debug(f'trace mismatch at word length {length}: {tp:.12g} vs {tq:.12g}')
                    return False
                grown.append((P2, Q2))
        frontier = grown
    return True


def _intertwiners(A: tuple[np.ndarray, ...], B: tuple[np.ndarray, ...]) -> np.ndarray:
    """
    Basis of {T : A_j T = T B_j for all j}, as columns of vec(T) (column-major).
    """

    d, e = A[0].shape[0], B[0].shape[0]
    blocks = [np.kron(np.eye(e), a) - np.kron(b.T, np.eye(d)) for a, b in zip(A, B)]
    return scipy.linalg.null_space(np.vstack(blocks), rcond=_SPAN_TOL)


def _random_element(basis: np.ndarray, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    c = rng.standard_normal(basis.shape[1])
    return (basis @ c).reshape(shape, order='F')


def unitarily_equivalent(L: LinearPencil, M: LinearPencil, parameters: Parameters = None) -> EquivalenceResult:
    """
    Decide whether M = U^T L U for an orthogonal U, and construct U.

    The decision compares traces of all words in the coefficients. The
    witness is the orthogonal polar factor of a random intertwiner
    T (A_j T = T B_j); for symmetric coefficients T^T T commutes with every
    B_j, so the polar factor intertwines as well.

    Args:
        L (LinearPencil): A monic pencil.
        M (LinearPencil): A monic pencil in as many variables.
        parameters (Parameters): Uses seed offsets; the base seed is fixed.

    Returns:
        EquivalenceResult: The verdict with its witness.

    Raises:
        PreconditionError: If a pencil is not monic.
        ShapeMismatchError: If the variable counts differ.
    """

    L.require_monic()
    M.require_monic()
    if L.g != M.g:
        raise ShapeMismatchError(f'pencils have {L.g} and {M.g} variables.')

    if L.size != M.size:
        return EquivalenceResult(False, NOT_EQUIVALENT)

    A = tuple(a.astype(float) for a in L.A)
    B = tuple(b.astype(float) for b in M.A)
    if not _traces_agree(A, B):
        return EquivalenceResult(False, NOT_EQUIVALENT)

    seed = SEED + (parameters.seed if parameters is not None else 0)
    rng = np.random.default_rng(seed)
    basis = _intertwiners(A, B)
    if basis.shape[1] == 0:
        logger.warning('traces agree but no intertwiner was found')
        return EquivalenceResult(True, NO_WITNESS)

    d = L.size
    T = _random_element(basis, (d, d), rng)
    U, _ = scipy.linalg.polar(T)
    residual = max(float(np.max(np.abs(U.T @ a @ U - b))) for a, b in zip(A, B))
    if residual > WITNESS_TOL or not np.allclose(U.T @ U, np.eye(d), atol=WITNESS_TOL):
        logger.warning(f'witness residual {residual:.3g} exceeds {WITNESS_TOL}')
        return EquivalenceResult(True, NO_WITNESS, residual=residual)

    return EquivalenceResult(True, EQUIVALENT, U, residual)


def irreducible_blocks(L: LinearPencil, parameters: Parameters = None) -> list[tuple[np.ndarray, LinearPencil]]:
    """
    Split a monic pencil into irreducible common blocks.

    The eigenspaces of a random symmetric element of the commutant of
    {A_j} are common invariant subspaces; each gives a block Q^T L Q.

    Returns:
        list[tuple[np.ndarray, LinearPencil]]: Pairs (Q, Q^T L Q) with
        orthonormal Q; the columns of all Q together form an orthogonal matrix.
    """

    L.require_monic()
    A = tuple(a.astype(float) for a in L.A)
    d = L.size

    seed = SEED + (parameters.seed if parameters is not None else 0)
    rng = np.random.default_rng(seed)
    S = _random_element(_intertwiners(A, A), (d, d), rng)
    S = (S + S.T) / 2

    values, vectors = scipy.linalg.eigh(S)
    spread = max(1.0, float(values[-1] - values[0]))
    groups = [[0]]
    for i in range(1, d):
        if values[i] - values[i - 1] > _EIG_GAP * spread:
            groups.append([])
        groups[-1].append(i)

    blocks = []
    for group in groups:
        Q = vectors[:, group]
        blocks.append((Q, LinearPencil(None, [Q.T @ a @ Q for a in A])))
    logger.debug(f'pencil of size {d} splits into blocks {[len(g) for g in groups]}')
    return blocks


def _fingerprint(P: LinearPencil) -> tuple:
    traces = []
    for a in P.A:
        traces.append(round(float(np.trace(a @ a)), 8))
        traces.append(round(float(np.trace(a @ a @ a)), 8))
    return (P.size, tuple(traces))


def minimal_defining_pencil(L: LinearPencil, parameters: Parameters = None) -> LinearPencil:
    """
    A smallest defining subpencil reachable by block operations.

    The pencil is split into irreducible blocks, blocks unitarily equivalent
    to a kept one are dropped, and then each block is dropped in turn when
    the remaining blocks already dominate it. The result is checked against
    L by mutual domination.

    Raises:
        PreconditionError: If L is not monic or D_L(1) is unbounded.
        ConsistencyError: If the result does not define D_L.
    """

    from ..domination import check_domination, is_bounded

    L.require_monic()
    if not is_bounded(L, parameters):
        raise PreconditionError('D_L(1) is unbounded; minimal pencils need a bounded domain.')

    blocks = sorted((b for _, b in irreducible_blocks(L, parameters)), key=_fingerprint)

    distinct: list[LinearPencil] = []
    for block in blocks:
        if any(kept.size == block.size and unitarily_equivalent(kept, block, parameters).equivalent
               for kept in distinct):
            logger.debug(f'dropping a duplicate block of size {block.size}')
            continue
        distinct.append(block)

    kept = list(distinct)
    for block in sorted(distinct, key=_fingerprint, reverse=True):
        rest = [b for b in kept if b is not block]
        if not rest:
            continue
        verdict = check_domination(direct_sum_all(rest), block, parameters)
        if verdict.dominated:
            logger.debug(f'dropping a redundant block of size {block.size}')
            kept = rest

    result = direct_sum_all(kept)
    if result.size != L.size:
        forward = check_domination(L, result, parameters, check_bounded=False)
        backward = check_domination(result, L, parameters, check_bounded=False)
        if not (forward.dominated and backward.dominated):
            raise ConsistencyError('the reduced pencil does not define the same domain.')

    logger.info(f'minimal defining pencil has size {result.size} (from {L.size})')
    return result
