"""Decoding answer bitstrings back to 3SAT assignments, and the two repair procedures.

A set bit ``x_i = 1`` witnesses literal ``l_i``: a positive literal sets its
variable True, a negated one sets it False. Unset bits imply nothing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .cnf import CnfFormula, PartialAssignment, satisfied_by_partial
from .encoder import Bitstring, QuboMatrix, as_bits
from .errors import ConfigurationError, ContractError, InputError

MAX_BLOCK_SIZE = 20


class Classification(str, enum.Enum):
    CORRECT = "correct"
    FIXABLE = "fixable"
    INCORRECT = "incorrect"


@dataclass(frozen=True)
class DecodedAnswer:
    partial: PartialAssignment
    conflicted: bool
    witnessed_clauses: frozenset[int]
    classification: Classification

    @property
    def key(self) -> str:
        return partial_key(self.partial)


@dataclass(frozen=True)
class PostprocessConfig:
    block_size: int = 12
    max_passes: int = 10
    logical_fixpoint: bool = False

    def __post_init__(self):
        if not 1 <= self.block_size <= MAX_BLOCK_SIZE:
            raise ConfigurationError(f"block_size must be in [1, {MAX_BLOCK_SIZE}], got {self.block_size}")
        if self.max_passes < 1:
            raise ConfigurationError("max_passes must be >= 1")


def partial_key(partial: Sequence[Optional[bool]]) -> str:
    """Canonical text of a partial assignment: ``1``/``0`` per variable, ``-`` when unassigned."""
    return "".join("-" if v is None else ("1" if v else "0") for v in partial)


def _checked_bits(x, formula: CnfFormula) -> Bitstring:
    bits = as_bits(x)
    if len(bits) != 3 * formula.num_clauses:
        raise InputError(f"bitstring has length {len(bits)}, expected 3m = {3 * formula.num_clauses}")
    return bits


def _witnesses(bits: Bitstring, formula: CnfFormula):
    n = formula.num_variables
    seen_true = [False] * n
    seen_false = [False] * n
    witnessed = set()
    for i, lit in enumerate(formula.literals):
        if bits[i]:
            witnessed.add(i // 3)
            if lit.negated:
                seen_false[lit.variable] = True
            else:
                seen_true[lit.variable] = True
    partial = []
    conflicted = False
    for t, f in zip(seen_true, seen_false):
        if t and f:
            conflicted = True
            partial.append(None)
        elif t or f:
            partial.append(t)
        else:
            partial.append(None)
    return tuple(partial), conflicted, frozenset(witnessed)


def _is_correct(bits: Bitstring, formula: CnfFormula) -> bool:
    partial, conflicted, _ = _witnesses(bits, formula)
    return not conflicted and satisfied_by_partial(formula, partial)


def decode(x: Sequence[int] | str, formula: CnfFormula) -> DecodedAnswer:
    """Partial assignment witnessed by ``x`` plus its classification.

    Variables witnessed both True and False are left unassigned in ``partial``
    and flag the answer as conflicted.
    """
    bits = _checked_bits(x, formula)
    partial, conflicted, witnessed = _witnesses(bits, formula)
    return DecodedAnswer(partial, conflicted, witnessed, classify(bits, formula))


def classify(x: Sequence[int] | str, formula: CnfFormula) -> Classification:
    bits = _checked_bits(x, formula)
    if _is_correct(bits, formula):
        return Classification.CORRECT
    if _is_correct(logical_postprocess(bits, formula), formula):
        return Classification.FIXABLE
    return Classification.INCORRECT


def logical_postprocess(x: Sequence[int] | str, formula: CnfFormula, until_fixpoint: bool = False) -> Bitstring:
    """Give every unwitnessed clause a witness where one can be added without contradiction.

    Clauses are visited in ascending order. For a clause with no set bit, the
    first literal whose implied value does not contradict a currently set bit
    (including bits set earlier in the same pass) is switched on. Bits are never
    switched off. ``until_fixpoint`` repeats passes until nothing changes; since
    contradictions only accumulate, a second pass never adds bits, so both modes
    return the same result.
    """
    bits = list(_checked_bits(x, formula))
    literals = formula.literals
    n = formula.num_variables
    has_true = [False] * n
    has_false = [False] * n
    for i, lit in enumerate(literals):
        if bits[i]:
            (has_false if lit.negated else has_true)[lit.variable] = True
    while True:
        changed = False
        for k in range(formula.num_clauses):
            positions = range(3 * k, 3 * k + 3)
            if any(bits[i] for i in positions):
                continue
            for i in positions:
                lit = literals[i]
                blocked = has_true[lit.variable] if lit.negated else has_false[lit.variable]
                if not blocked:
                    bits[i] = 1
                    (has_false if lit.negated else has_true)[lit.variable] = True
                    changed = True
                    break
        if not (until_fixpoint and changed):
            return tuple(bits)


@lru_cache(maxsize=32)
def _half_table(size: int) -> np.ndarray:
    """All ``2**size`` assignments of ``size`` bits; row ``k`` has bit ``t`` = ``(k >> t) & 1``."""
    codes = np.arange(1 << size, dtype=np.int64)
    table = ((codes[:, None] >> np.arange(size)) & 1).astype(np.float64)
    table.flags.writeable = False
    return table


def _block_energies(linear: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Energies of every assignment of a small sub-QUBO, indexed by its integer code.

    ``quad`` is strictly upper triangular. The block is split into a low and a
    high half so the largest intermediate is ``2**(b/2) x 2**(b/2)``; entry
    ``[hi, lo]`` of the result is the energy of code ``(hi << n_lo) | lo``.
    """
    size = linear.shape[0]
    n_lo = size // 2
    t_lo, t_hi = _half_table(n_lo), _half_table(size - n_lo)
    lo, hi = slice(0, n_lo), slice(n_lo, size)
    e_lo = t_lo @ linear[lo] + np.einsum("ij,ij->i", t_lo @ quad[lo, lo], t_lo)
    e_hi = t_hi @ linear[hi] + np.einsum("ij,ij->i", t_hi @ quad[hi, hi], t_hi)
    cross = (t_hi @ quad[lo, hi].T) @ t_lo.T
    return (e_hi[:, None] + e_lo[None, :] + cross).ravel()


def subproblem_postprocess(q: QuboMatrix, x: Sequence[int] | str, config: PostprocessConfig = PostprocessConfig()) -> Bitstring:
    """Clamped exhaustive block descent.

    Indices are split into contiguous blocks of ``config.block_size``. Each
    block is re-minimised exactly with every other bit held fixed, and the
    block optimum is adopted only if it strictly lowers the energy (lowest
    code wins ties). Passes repeat until no block improves or
    ``config.max_passes`` is reached.
    """
    bits = as_bits(x)
    dim = q.dimension
    if len(bits) != dim:
        raise InputError(f"bitstring has length {len(bits)}, QUBO dimension is {dim}")
    state = np.array(bits, dtype=np.float64)
    diagonal = np.asarray(q.diagonal)
    couplings = q.couplings
    upper = np.triu(q.upper, k=1)
    blocks = [np.arange(s, min(s + config.block_size, dim)) for s in range(0, dim, config.block_size)]
    for _ in range(config.max_passes):
        improved = False
        for idx in blocks:
            inside = state[idx]
            linear = diagonal[idx] + couplings[idx] @ state - couplings[np.ix_(idx, idx)] @ inside
            energies = _block_energies(linear, upper[np.ix_(idx, idx)])
            current = int(np.dot(inside.astype(np.int64), 1 << np.arange(len(idx))))
            best = int(np.argmin(energies))
            if energies[best] < energies[current]:
                state[idx] = (best >> np.arange(len(idx))) & 1
                improved = True
        if not improved:
            break
    return tuple(int(b) for b in state)


def complete_witnesses(x: Sequence[int] | str, formula: CnfFormula) -> Bitstring:
    """Add a witness to every unwitnessed clause of a Correct answer.

    The lowest-index literal made true by the decoded assignment is switched on;
    one exists because the decoded assignment satisfies every clause.
    """
    bits = list(_checked_bits(x, formula))
    partial, conflicted, witnessed = _witnesses(tuple(bits), formula)
    if conflicted or not satisfied_by_partial(formula, partial):
        raise ContractError("complete_witnesses requires an answer classified Correct")
    literals = formula.literals
    for k in range(formula.num_clauses):
        if k in witnessed:
            continue
        for i in range(3 * k, 3 * k + 3):
            value = partial[literals[i].variable]
            if value is not None and literals[i].value_under(value):
                bits[i] = 1
                break
    return tuple(bits)
