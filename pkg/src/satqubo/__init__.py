"""Classical reproduction of the 3SAT -> QUBO annealing pipeline.

Random 3SAT generation and DPLL (:mod:`satqubo.cnf`), the conflict-graph QUBO
encoding (:mod:`satqubo.encoder`), classical samplers (:mod:`satqubo.samplers`),
answer decoding and repair (:mod:`satqubo.postprocess`) and the experiment
harness (:mod:`satqubo.experiments`).
"""

__version__ = "0.1.0"

from .cnf import (
    Clause,
    CnfFormula,
    Literal,
    SolverStats,
    dpll_satisfiable,
    evaluate,
    generate_random_3sat,
    parse_dimacs,
    satisfied_by_partial,
    write_dimacs,
)
from .encoder import (
    ConflictGraph,
    QuboMatrix,
    build_conflict_graph,
    encode,
    graph_to_qubo,
    parse_qubo,
    qubo_energy,
    write_qubo,
)
from .postprocess import (
    Classification,
    DecodedAnswer,
    PostprocessConfig,
    classify,
    complete_witnesses,
    decode,
    logical_postprocess,
    subproblem_postprocess,
)
from .samplers import (
    Sample,
    SampleSet,
    SamplerConfig,
    brute_force_minimize,
    simulated_annealing_sample,
    tabu_sample,
)
