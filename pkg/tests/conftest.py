import itertools

import pytest
from hypothesis import strategies as st

from satqubo.cnf import CnfFormula


# (x1 v x2 v x3) ^ (~x1 v x2 v x3)
PSI = CnfFormula.from_dimacs_clauses(3, [(1, 2, 3), (-1, 2, 3)])
# (x1 v x1 v x1) ^ (~x1 v ~x1 v ~x1)
PHI = CnfFormula.from_dimacs_clauses(1, [(1, 1, 1), (-1, -1, -1)])
# (v0 v v1 v v2) ^ (v0 v v1 v v2)
REDUNDANT = CnfFormula.from_dimacs_clauses(3, [(1, 2, 3), (1, 2, 3)])


@pytest.fixture
def psi():
    return PSI


@pytest.fixture
def phi():
    return PHI


@pytest.fixture
def redundant():
    return REDUNDANT


@st.composite
def formulas(draw, max_n=6, max_m=5, min_m=1):
    """Arbitrary 3SAT formulas, duplicate and complementary literals allowed."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(min_m, max_m))
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v]))
    clauses = draw(st.lists(st.tuples(lit, lit, lit), min_size=m, max_size=m))
    return CnfFormula.from_dimacs_clauses(n, clauses)


# --- independent oracles -------------------------------------------------------


def dimacs_clauses(formula):
    return [[lit.to_dimacs() for lit in clause] for clause in formula.clauses]


def satisfying_assignments(formula):
    """Every total assignment (as a tuple of bools) satisfying the formula, by enumeration."""
    clauses = dimacs_clauses(formula)
    out = []
    for values in itertools.product((False, True), repeat=formula.num_variables):
        if all(any(values[abs(c) - 1] == (c > 0) for c in clause) for clause in clauses):
            out.append(values)
    return out


def energy_by_definition(q, bits):
    """sum_i sum_{j<i} Q_ji x_i x_j + sum_i Q_i x_i, straight from the dense upper triangle."""
    upper = q.upper
    total = 0.0
    for i in range(len(bits)):
        total += upper[i, i] * bits[i]
        for j in range(i):
            total += upper[j, i] * bits[i] * bits[j]
    return total


def qubo_minimum_by_enumeration(q):
    best, argmins = None, []
    for bits in itertools.product((0, 1), repeat=q.dimension):
        e = energy_by_definition(q, bits)
        if best is None or e < best:
            best, argmins = e, [bits]
        elif e == best:
            argmins.append(bits)
    return best, argmins


def conflict_edges_by_definition(formula):
    lits = [lit for clause in formula.clauses for lit in clause]
    edges = set()
    for i, j in itertools.combinations(range(len(lits)), 2):
        same_clause = i // 3 == j // 3
        complementary = lits[i].variable == lits[j].variable and lits[i].negated != lits[j].negated
        if same_clause or complementary:
            edges.add((i, j))
    return edges


# --- acceptance reporting -----------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
