"""3SAT formulas: representation, evaluation, DIMACS I/O, random generation and DPLL.

Variables are 0-indexed everywhere inside the package; DIMACS text is 1-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import FormatError, InputError

PartialAssignment = tuple[Optional[bool], ...]


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    negated: bool = False

    def __post_init__(self):
        if self.variable < 0:
            raise InputError(f"negative variable index {self.variable}")

    def __invert__(self) -> "Literal":
        return Literal(self.variable, not self.negated)

    def value_under(self, value: bool) -> bool:
        """Truth value of the literal when its variable takes ``value``."""
        return value != self.negated

    @property
    def implied_value(self) -> bool:
        """The variable value that makes this literal true."""
        return not self.negated

    @classmethod
    def from_dimacs(cls, code: int) -> "Literal":
        if code == 0:
            raise FormatError("0 is not a literal")
        return cls(abs(code) - 1, code < 0)

    def to_dimacs(self) -> int:
        return -(self.variable + 1) if self.negated else self.variable + 1

    def __str__(self):
        return f"{'~' if self.negated else ''}v{self.variable}"


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, Literal, Literal]

    def __post_init__(self):
        lits = tuple(self.literals)
        if len(lits) != 3:
            raise InputError(f"a 3SAT clause needs exactly 3 literals, got {len(lits)}")
        object.__setattr__(self, "literals", lits)

    def __iter__(self):
        return iter(self.literals)

    def __getitem__(self, i):
        return self.literals[i]

    def __len__(self):
        return 3

    @classmethod
    def of(cls, *codes: int) -> "Clause":
        """Build a clause from 1-indexed signed DIMACS codes, e.g. ``Clause.of(1, -2, 3)``."""
        return cls(tuple(Literal.from_dimacs(c) for c in codes))


@dataclass(frozen=True)
class CnfFormula:
    num_variables: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        if self.num_variables < 1:
            raise InputError("a formula needs at least one variable")
        clauses = tuple(c if isinstance(c, Clause) else Clause(tuple(c)) for c in self.clauses)
        for k, clause in enumerate(clauses):
            for lit in clause:
                if lit.variable >= self.num_variables:
                    raise InputError(
                        f"clause {k} references variable {lit.variable} "
                        f"but the formula has only {self.num_variables}"
                    )
        object.__setattr__(self, "clauses", clauses)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def alpha(self) -> float:
        return self.num_clauses / self.num_variables

    @property
    def literals(self) -> tuple[Literal, ...]:
        """Flat literal list; position ``i`` belongs to clause ``i // 3``."""
        return tuple(lit for clause in self.clauses for lit in clause)

    @classmethod
    def from_dimacs_clauses(cls, num_variables: int, clauses: Iterable[Sequence[int]]) -> "CnfFormula":
        return cls(num_variables, tuple(Clause.of(*c) for c in clauses))


def _check_length(values: Sequence, formula: CnfFormula, what: str) -> None:
    if len(values) != formula.num_variables:
        raise InputError(
            f"{what} has length {len(values)}, formula has {formula.num_variables} variables"
        )


def evaluate(formula: CnfFormula, assignment: Sequence[bool]) -> bool:
    """True iff every clause has a literal satisfied by the total ``assignment``."""
    _check_length(assignment, formula, "assignment")
    return all(
        any(lit.value_under(bool(assignment[lit.variable])) for lit in clause)
        for clause in formula.clauses
    )


def satisfied_by_partial(formula: CnfFormula, partial: Sequence[Optional[bool]]) -> bool:
    """True iff every clause contains a literal made true by an *assigned* variable.

    When this holds, every completion of ``partial`` satisfies the formula.
    """
    _check_length(partial, formula, "partial assignment")
    for clause in formula.clauses:
        for lit in clause:
            value = partial[lit.variable]
            if value is not None and lit.value_under(value):
                break
        else:
            return False
    return True


def generate_random_3sat(n: int, m: int, seed: int) -> CnfFormula:
    """Draw ``m`` clauses over 3 distinct variables each, negating each literal with probability 1/2."""
    if n < 3:
        raise InputError(f"need n >= 3 to draw 3 distinct variables, got n={n}")
    if m < 1:
        raise InputError(f"need m >= 1 clauses, got m={m}")
    rng = np.random.default_rng(seed % 2**64)
    clauses = []
    for _ in range(m):
        variables = rng.choice(n, size=3, replace=False)
        signs = rng.integers(0, 2, size=3)
        clauses.append(Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(variables, signs))))
    return CnfFormula(n, tuple(clauses))


@dataclass
class SolverStats:
    decisions: int = 0
    backtracks: int = 0

    @property
    def effort(self) -> int:
        return self.decisions + self.backtracks


def dpll_satisfiable(formula: CnfFormula) -> tuple[bool, SolverStats]:
    """Decide satisfiability with DPLL (unit propagation, pure literals, backtracking).

    Branches on the lowest-index unassigned variable occurring in an open
    clause, trying True first. ``decisions`` counts branch points and
    ``backtracks`` counts branches that ended in a conflict.
    """
    clauses = [tuple(lit.to_dimacs() for lit in clause) for clause in formula.clauses]
    values: list[Optional[bool]] = [None] * formula.num_variables
    stats = SolverStats()

    def lit_value(code: int) -> Optional[bool]:
        v = values[abs(code) - 1]
        if v is None:
            return None
        return v if code > 0 else not v

    def propagate(trail: list[int]) -> Optional[list[list[int]]]:
        """Unit propagation and pure-literal elimination to a fixpoint.

        Returns the free literals of every open clause, or None on conflict.
        """
        while True:
            open_clauses = []
            unit = None
            for clause in clauses:
                free = []
                for code in clause:
                    val = lit_value(code)
                    if val is True:
                        break
                    if val is None and code not in free:
                        free.append(code)
                else:
                    if not free:
                        return None
                    if len(free) == 1 and unit is None:
                        unit = free[0]
                    open_clauses.append(free)
            if unit is not None:
                forced = [unit]
            else:
                occurring = {code for free in open_clauses for code in free}
                forced = sorted(code for code in occurring if -code not in occurring)
                if not forced:
                    return open_clauses
            for code in forced:
                values[abs(code) - 1] = code > 0
                trail.append(abs(code) - 1)

    def undo(trail: list[int]) -> None:
        for var in trail:
            values[var] = None

    def search() -> bool:
        trail: list[int] = []
        open_clauses = propagate(trail)
        if open_clauses is None:
            undo(trail)
            return False
        if not open_clauses:
            return True
        var = min(abs(code) - 1 for free in open_clauses for code in free)
        stats.decisions += 1
        for choice in (True, False):
            values[var] = choice
            if search():
                return True
            stats.backtracks += 1
        values[var] = None
        undo(trail)
        return False

    return search(), stats


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text restricted to 3-literal clauses."""
    header = None
    codes: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise FormatError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise FormatError(f"line {lineno}: malformed header {line!r}") from exc
            continue
        if header is None:
            raise FormatError("missing 'p cnf <n> <m>' header")
        try:
            codes.extend(int(tok) for tok in line.split())
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-integer token in {line!r}") from exc
    if header is None:
        raise FormatError("missing 'p cnf <n> <m>' header")
    n, m = header
    clauses = []
    current: list[int] = []
    for code in codes:
        if code == 0:
            if len(current) != 3:
                raise FormatError(f"clause {len(clauses)} has {len(current)} literals: not 3SAT")
            clauses.append(current)
            current = []
            continue
        if abs(code) > n:
            raise FormatError(f"literal {code} exceeds declared variable count {n}")
        current.append(code)
    if current:
        raise FormatError("last clause is not terminated by 0")
    if len(clauses) != m:
        raise FormatError(f"header declares {m} clauses, found {len(clauses)}")
    return CnfFormula.from_dimacs_clauses(n, clauses)


def write_dimacs(formula: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {formula.num_variables} {formula.num_clauses}")
    for clause in formula.clauses:
        lines.append(" ".join(str(lit.to_dimacs()) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"
