"""3SAT -> conflict graph (weighted MIS) -> QUBO, energies and QUBO text I/O.

Each literal occurrence gets one binary variable. Position ``i`` of a bitstring
belongs to clause ``i // 3``. Setting a bit reads as "this literal witnesses its
clause"; conflicting witnesses are penalised through graph edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .cnf import CnfFormula, Literal
from .errors import ConfigurationError, FormatError, InputError

Bitstring = tuple[int, ...]


def as_bits(x: Sequence[int] | str) -> Bitstring:
    """Normalise a 0/1 sequence or a string such as ``"100001"`` into a tuple of ints."""
    if isinstance(x, str):
        if set(x) - {"0", "1"}:
            raise InputError(f"bitstring {x!r} contains characters other than 0/1")
        return tuple(int(c) for c in x)
    bits = tuple(int(b) for b in x)
    if any(b not in (0, 1) for b in bits):
        raise InputError("bitstring entries must be 0 or 1")
    return bits


def bits_to_str(x: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in x)


@dataclass(frozen=True)
class ConflictGraph:
    vertex_literals: tuple[Literal, ...]
    edges: frozenset[tuple[int, int]]
    vertex_weights: tuple[float, ...]

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_literals)

    @staticmethod
    def clause_of(vertex: int) -> int:
        return vertex // 3

    def is_independent(self, vertices) -> bool:
        chosen = set(vertices)
        return not any(i in chosen and j in chosen for i, j in self.edges)


def build_conflict_graph(formula: CnfFormula) -> ConflictGraph:
    """One vertex per literal occurrence; clause triangles plus complementary-literal edges."""
    if formula.num_clauses < 1:
        raise InputError("cannot encode a formula without clauses")
    literals = formula.literals
    edges = set()
    for k in range(formula.num_clauses):
        a, b, c = 3 * k, 3 * k + 1, 3 * k + 2
        edges.update({(a, b), (a, c), (b, c)})
    by_literal: dict[Literal, list[int]] = {}
    for i, lit in enumerate(literals):
        by_literal.setdefault(lit, []).append(i)
    for i, lit in enumerate(literals):
        for j in by_literal.get(~lit, ()):
            if i < j and i // 3 != j // 3:
                edges.add((i, j))
    return ConflictGraph(literals, frozenset(edges), (1.0,) * len(literals))


@dataclass(frozen=True)
class QuboMatrix:
    """Upper-triangular QUBO: ``diagonal[i]`` is Q_i, ``off_diagonal[(i, j)]`` (i < j) is Q_ij.

    Zero off-diagonal entries are dropped so that structurally equal matrices compare equal.
    """

    diagonal: tuple[float, ...]
    off_diagonal: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        diag = tuple(float(v) for v in self.diagonal)
        dim = len(diag)
        entries = {}
        for (i, j), value in sorted(self.off_diagonal.items()):
            i, j = int(i), int(j)
            if not 0 <= i < j < dim:
                raise InputError(f"off-diagonal index ({i}, {j}) outside strict upper triangle of dim {dim}")
            if value != 0:
                entries[(i, j)] = float(value)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "off_diagonal", MappingProxyType(entries))

    @property
    def dimension(self) -> int:
        return len(self.diagonal)

    def __eq__(self, other):
        if not isinstance(other, QuboMatrix):
            return NotImplemented
        return self.diagonal == other.diagonal and dict(self.off_diagonal) == dict(other.off_diagonal)

    def __hash__(self):
        return hash((self.diagonal, tuple(self.off_diagonal.items())))

    @cached_property
    def upper(self) -> np.ndarray:
        """Dense upper-triangular matrix with the linear terms on the diagonal (read-only)."""
        dense = np.zeros((self.dimension, self.dimension))
        dense[np.diag_indices(self.dimension)] = self.diagonal
        for (i, j), value in self.off_diagonal.items():
            dense[i, j] = value
        dense.flags.writeable = False
        return dense

    @cached_property
    def couplings(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal (read-only)."""
        sym = np.zeros((self.dimension, self.dimension))
        for (i, j), value in self.off_diagonal.items():
            sym[i, j] = sym[j, i] = value
        sym.flags.writeable = False
        return sym


def graph_to_qubo(graph: ConflictGraph, weight: float = 1.0, penalty: float = 2.0) -> QuboMatrix:
    """Q_ii = -weight * vertex weight, Q_ij = +penalty on every edge.

    ``penalty`` must exceed ``weight`` so that adding a conflicting vertex never lowers energy.
    """
    if not penalty > weight:
        raise ConfigurationError(f"penalty ({penalty}) must be greater than weight ({weight})")
    diagonal = tuple(-weight * w for w in graph.vertex_weights)
    return QuboMatrix(diagonal, {edge: penalty for edge in graph.edges})


def encode(formula: CnfFormula, weight: float = 1.0, penalty: float = 2.0) -> QuboMatrix:
    return graph_to_qubo(build_conflict_graph(formula), weight, penalty)


def qubo_energy(q: QuboMatrix, x: Sequence[int] | str) -> float:
    """sum_{i<j} Q_ij x_i x_j + sum_i Q_i x_i."""
    bits = as_bits(x)
    if len(bits) != q.dimension:
        raise InputError(f"bitstring has length {len(bits)}, QUBO dimension is {q.dimension}")
    energy = 0.0
    for i, b in enumerate(bits):
        if b:
            energy += q.diagonal[i]
    for (i, j), value in q.off_diagonal.items():
        if bits[i] and bits[j]:
            energy += value
    return energy


def write_qubo(q: QuboMatrix) -> str:
    """Sparse coordinate text: ``dim <d>`` followed by ``<i> <j> <value>`` lines (i <= j)."""
    lines = [f"dim {q.dimension}"]
    for i, value in enumerate(q.diagonal):
        if value != 0:
            lines.append(f"{i} {i} {value!r}")
    for (i, j), value in q.off_diagonal.items():
        lines.append(f"{i} {j} {value!r}")
    return "\n".join(lines) + "\n"


def parse_qubo(text: str) -> QuboMatrix:
    dim = None
    diagonal: list[float] = []
    off: dict[tuple[int, int], float] = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if dim is None:
            if len(parts) != 2 or parts[0] != "dim":
                raise FormatError(f"line {lineno}: expected 'dim <n>' header, got {line!r}")
            try:
                dim = int(parts[1])
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad dimension {parts[1]!r}") from exc
            if dim < 0:
                raise FormatError(f"line {lineno}: negative dimension")
            diagonal = [0.0] * dim
            continue
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected '<i> <j> <value>', got {line!r}")
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: malformed entry {line!r}") from exc
        if i > j:
            raise FormatError(f"line {lineno}: entry ({i}, {j}) is in the lower triangle")
        if i < 0 or j >= dim:
            raise FormatError(f"line {lineno}: index out of range for dim {dim}")
        if (i, j) in seen:
            raise FormatError(f"line {lineno}: duplicate entry ({i}, {j})")
        seen.add((i, j))
        if i == j:
            diagonal[i] = value
        else:
            off[(i, j)] = value
    if dim is None:
        raise FormatError("missing 'dim <n>' header")
    return QuboMatrix(tuple(diagonal), off)
