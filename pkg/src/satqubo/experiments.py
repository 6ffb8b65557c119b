"""Experiment harness: answer quality by bitcount, alpha sweeps, solution bias, query bounds.

All randomness is derived from ``ExperimentConfig.master_seed``:

* instance candidate ``a`` of a quality/bias run uses ``derive_seed(seed, INSTANCE_STREAM, a)``,
* sweep instance ``i`` at grid point ``g`` uses ``derive_seed(seed, SWEEP_STREAM, g, i)``,
* the sampler of instance ``k`` is seeded with ``derive_seed(seed, SAMPLER_STREAM, k)``
  (sweeps add the grid index to the path).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .cnf import CnfFormula, dpll_satisfiable, generate_random_3sat
from .encoder import QuboMatrix, as_bits, encode, qubo_energy
from .errors import ConfigurationError, ExperimentError, InputError
from .postprocess import (
    Classification,
    PostprocessConfig,
    classify,
    complete_witnesses,
    decode,
    logical_postprocess,
    partial_key,
    subproblem_postprocess,
)
from .samplers import SAMPLERS, SampleSet, SamplerConfig, derive_seed, sample

INSTANCE_STREAM = 0
SAMPLER_STREAM = 1
SWEEP_STREAM = 2

POSTPROCESSING_MODES = ("none", "logical", "subproblem", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 10
    m: int = 42
    instances: int = 100
    reads: int = 1000
    sampler: str = "sa"
    sampler_config: SamplerConfig = SamplerConfig()
    postprocessing: str = "none"
    postprocess_config: PostprocessConfig = PostprocessConfig()
    master_seed: int = 0
    alpha_grid: tuple[float, ...] = ()
    output_path: Optional[str] = None
    workers: int = 1
    max_attempts_per_instance: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if self.n < 3:
            raise ConfigurationError("n must be >= 3")
        if self.m < 1:
            raise ConfigurationError("m must be >= 1")
        if self.instances < 0 or self.reads < 0:
            raise ConfigurationError("instances and reads must be non-negative")
        if self.sampler not in SAMPLERS:
            raise ConfigurationError(f"unknown sampler {self.sampler!r}; choose from {sorted(SAMPLERS)}")
        if self.postprocessing not in POSTPROCESSING_MODES:
            raise ConfigurationError(
                f"unknown postprocessing {self.postprocessing!r}; choose from {POSTPROCESSING_MODES}"
            )
        if any(a <= 0 for a in self.alpha_grid):
            raise ConfigurationError("alpha grid values must be positive")
        if any(b <= a for a, b in zip(self.alpha_grid, self.alpha_grid[1:])):
            raise ConfigurationError("alpha grid must be strictly increasing")
        if self.workers < 1 or self.max_attempts_per_instance < 1:
            raise ConfigurationError("workers and max_attempts_per_instance must be >= 1")

    def sampler_settings(self, seed: int) -> SamplerConfig:
        return dataclasses.replace(self.sampler_config, reads=max(self.reads, 1), master_seed=seed)


@dataclass(frozen=True)
class Instance:
    instance_id: int
    seed: int
    formula: CnfFormula


@dataclass(frozen=True)
class RunRecord:
    instance_id: int
    read_index: int
    bitcount: int
    classification: Classification
    energy: float
    solution_key: str


@dataclass
class BitcountCounts:
    correct: int = 0
    fixable: int = 0
    incorrect: int = 0

    def add(self, classification: Classification) -> None:
        if classification is Classification.CORRECT:
            self.correct += 1
        elif classification is Classification.FIXABLE:
            self.fixable += 1
        else:
            self.incorrect += 1

    @property
    def total(self) -> int:
        return self.correct + self.fixable + self.incorrect


@dataclass
class QualityReport:
    postprocessing: str
    per_bitcount: dict[int, BitcountCounts]
    per_instance_correct: dict[int, int]
    records: list[RunRecord]
    instance_seeds: dict[int, int]
    config: dict = field(default_factory=dict)

    @property
    def total_correct(self) -> int:
        return sum(self.per_instance_correct.values())

    @property
    def instances_solved(self) -> int:
        return sum(1 for c in self.per_instance_correct.values() if c > 0)

    @property
    def total_answers(self) -> int:
        return sum(c.total for c in self.per_bitcount.values())

    @classmethod
    def from_records(cls, postprocessing, records, instance_seeds, config=None) -> "QualityReport":
        per_bitcount: dict[int, BitcountCounts] = {}
        per_instance = {k: 0 for k in instance_seeds}
        for rec in records:
            per_bitcount.setdefault(rec.bitcount, BitcountCounts()).add(rec.classification)
            if rec.classification is Classification.CORRECT:
                per_instance[rec.instance_id] += 1
        return cls(
            postprocessing,
            dict(sorted(per_bitcount.items())),
            per_instance,
            list(records),
            dict(instance_seeds),
            dict(config or {}),
        )

    def to_dict(self) -> dict:
        return {
            "kind": "quality",
            "postprocessing": self.postprocessing,
            "config": self.config,
            "instance_seeds": {str(k): v for k, v in self.instance_seeds.items()},
            "total_correct": self.total_correct,
            "instances_solved": self.instances_solved,
            "per_bitcount": {str(k): dataclasses.asdict(v) for k, v in self.per_bitcount.items()},
            "per_instance_correct": {str(k): v for k, v in self.per_instance_correct.items()},
            "records": [
                [r.instance_id, r.read_index, r.bitcount, r.classification.value, r.energy, r.solution_key]
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QualityReport":
        records = [
            RunRecord(int(i), int(r), int(b), Classification(c), float(e), str(k))
            for i, r, b, c, e, k in data["records"]
        ]
        return cls(
            data["postprocessing"],
            {int(k): BitcountCounts(**v) for k, v in data["per_bitcount"].items()},
            {int(k): int(v) for k, v in data["per_instance_correct"].items()},
            records,
            {int(k): int(v) for k, v in data["instance_seeds"].items()},
            data.get("config", {}),
        )


def instances_solved_within(report: QualityReport, reads: int) -> int:
    """Instances with a Correct answer among their first ``reads`` reads."""
    solved = {
        r.instance_id
        for r in report.records
        if r.read_index < reads and r.classification is Classification.CORRECT
    }
    return len(solved)


@dataclass
class AlphaPoint:
    alpha: float
    m: int
    instances: int
    satisfiable: int
    mean_effort: float
    sampler_success: Optional[float]

    @property
    def sat_fraction(self) -> float:
        return self.satisfiable / self.instances if self.instances else 0.0


@dataclass
class AlphaSweepReport:
    n: int
    points: list[AlphaPoint]
    config: dict = field(default_factory=dict)

    def crossing_alpha(self, level: float = 0.5) -> Optional[float]:
        """Linear interpolation of the first grid interval where sat_fraction falls below ``level``."""
        for a, b in zip(self.points, self.points[1:]):
            fa, fb = a.sat_fraction, b.sat_fraction
            if fa >= level > fb:
                return a.alpha + (fa - level) / (fa - fb) * (b.alpha - a.alpha)
        return None

    def effort_at(self, alpha: float) -> float:
        """Mean DPLL effort linearly interpolated between grid points."""
        pts = self.points
        if not pts[0].alpha <= alpha <= pts[-1].alpha:
            raise InputError(f"alpha {alpha} outside the swept range")
        for a, b in zip(pts, pts[1:]):
            if a.alpha <= alpha <= b.alpha:
                t = (alpha - a.alpha) / (b.alpha - a.alpha)
                return a.mean_effort + t * (b.mean_effort - a.mean_effort)
        return pts[-1].mean_effort

    def point(self, alpha: float) -> AlphaPoint:
        for p in self.points:
            if math.isclose(p.alpha, alpha):
                return p
        raise KeyError(alpha)

    def to_dict(self) -> dict:
        return {
            "kind": "sweep",
            "n": self.n,
            "config": self.config,
            "crossing_alpha": self.crossing_alpha(),
            "points": [dataclasses.asdict(p) for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlphaSweepReport":
        return cls(int(data["n"]), [AlphaPoint(**p) for p in data["points"]], data.get("config", {}))


@dataclass
class BiasReport:
    tables: dict[int, list[tuple[str, int]]]
    instance_seeds: dict[int, int]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "bias",
            "config": self.config,
            "instance_seeds": {str(k): v for k, v in self.instance_seeds.items()},
            "tables": {str(k): [[key, freq] for key, freq in v] for k, v in self.tables.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BiasReport":
        return cls(
            {int(k): [(str(key), int(freq)) for key, freq in v] for k, v in data["tables"].items()},
            {int(k): int(v) for k, v in data["instance_seeds"].items()},
            data.get("config", {}),
        )


def config_echo(config: ExperimentConfig) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(config)))


def satisfiable_instances(n: int, m: int, count: int, master_seed: int, max_attempts_per_instance: int = 1000) -> list[Instance]:
    """Draw random formulas until ``count`` DPLL-satisfiable ones are found."""
    found: list[Instance] = []
    attempts = 0
    limit = max_attempts_per_instance * count
    while len(found) < count:
        if attempts >= limit:
            raise ExperimentError(
                f"only {len(found)} of {count} satisfiable instances at n={n}, m={m} after {attempts} attempts"
            )
        seed = derive_seed(master_seed, INSTANCE_STREAM, attempts)
        attempts += 1
        formula = generate_random_3sat(n, m, seed)
        if dpll_satisfiable(formula)[0]:
            found.append(Instance(len(found), seed, formula))
    return found


def postprocess_answer(
    x: Sequence[int],
    formula: CnfFormula,
    q: QuboMatrix,
    mode: str,
    pp_config: PostprocessConfig = PostprocessConfig(),
) -> tuple[int, ...]:
    """Apply one postprocessing mode; logical repair only touches answers that are not yet Correct."""
    bits = as_bits(x)
    if mode in ("subproblem", "both"):
        bits = subproblem_postprocess(q, bits, pp_config)
    if mode in ("logical", "both") and classify(bits, formula) is not Classification.CORRECT:
        bits = logical_postprocess(bits, formula, pp_config.logical_fixpoint)
    return bits


def _record(instance: Instance, q: QuboMatrix, read_index: int, bits) -> RunRecord:
    answer = decode(bits, instance.formula)
    return RunRecord(
        instance.instance_id, read_index, sum(bits), answer.classification, qubo_energy(q, bits), answer.key
    )


def _map(fn: Callable, items: Iterable, workers: int) -> list:
    items = list(items)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def sample_instances(config: ExperimentConfig, instances: Sequence[Instance]) -> list[SampleSet]:
    def run(instance: Instance) -> SampleSet:
        q = encode(instance.formula)
        if config.reads == 0:
            return SampleSet((), q.dimension)
        settings = config.sampler_settings(derive_seed(config.master_seed, SAMPLER_STREAM, instance.instance_id))
        return sample(q, config.sampler, settings)

    return _map(run, instances, config.workers)


def quality_reports(
    config: ExperimentConfig,
    modes: Sequence[str] = POSTPROCESSING_MODES,
    instances: Optional[Sequence[Instance]] = None,
    samples: Optional[Sequence[SampleSet]] = None,
) -> dict[str, QualityReport]:
    """Quality reports for several postprocessing modes over one shared set of raw answers."""
    for mode in modes:
        if mode not in POSTPROCESSING_MODES:
            raise ConfigurationError(f"unknown postprocessing {mode!r}")
    if instances is None:
        instances = satisfiable_instances(
            config.n, config.m, config.instances, config.master_seed, config.max_attempts_per_instance
        )
    if samples is None:
        samples = sample_instances(config, instances)
    seeds = {inst.instance_id: inst.seed for inst in instances}
    echo = config_echo(config)

    def evaluate(pair):
        instance, sample_set = pair
        q = encode(instance.formula)
        out = {mode: [] for mode in modes}
        needs_sub = "subproblem" in modes or "both" in modes
        for s in sample_set:
            # the block descent is the expensive step; share it between modes
            sub = subproblem_postprocess(q, s.x, config.postprocess_config) if needs_sub else None
            for mode in modes:
                if mode == "none":
                    bits = s.x
                elif mode == "subproblem":
                    bits = sub
                else:
                    start = s.x if mode == "logical" else sub
                    bits = postprocess_answer(start, instance.formula, q, "logical", config.postprocess_config)
                out[mode].append(_record(instance, q, s.read_index, bits))
        return out

    per_instance = _map(evaluate, zip(instances, samples), config.workers)
    reports = {}
    for mode in modes:
        records = [rec for chunk in per_instance for rec in chunk[mode]]
        reports[mode] = QualityReport.from_records(mode, records, seeds, dict(echo, postprocessing=mode))
    return reports


def run_quality_experiment(config: ExperimentConfig) -> QualityReport:
    """Sample ``reads`` answers for each of ``instances`` satisfiable formulas and classify them."""
    return quality_reports(config, (config.postprocessing,))[config.postprocessing]


def run_alpha_sweep(config: ExperimentConfig) -> AlphaSweepReport:
    """Satisfiable fraction, mean DPLL effort and sampler success for each alpha in the grid.

    ``m = round(alpha * n)``. Sampler success is the fraction of answers on the
    satisfiable instances that are Correct after postprocessing; it is None when
    no reads were requested or no instance was satisfiable.
    """
    if not config.alpha_grid:
        raise ConfigurationError("alpha sweep needs a non-empty alpha grid")
    points = []
    for g, alpha in enumerate(config.alpha_grid):
        m = max(1, round(alpha * config.n))
        satisfiable: list[Instance] = []
        effort = 0
        for i in range(config.instances):
            seed = derive_seed(config.master_seed, SWEEP_STREAM, g, i)
            formula = generate_random_3sat(config.n, m, seed)
            ok, stats = dpll_satisfiable(formula)
            effort += stats.effort
            if ok:
                satisfiable.append(Instance(i, seed, formula))
        success = None
        if config.reads > 0 and satisfiable:
            correct = 0
            total = 0
            for inst in satisfiable:
                q = encode(inst.formula)
                settings = config.sampler_settings(
                    derive_seed(config.master_seed, SAMPLER_STREAM, g, inst.instance_id)
                )
                for s in sample(q, config.sampler, settings, workers=config.workers):
                    bits = postprocess_answer(s.x, inst.formula, q, config.postprocessing, config.postprocess_config)
                    correct += classify(bits, inst.formula) is Classification.CORRECT
                    total += 1
            success = correct / total
        mean_effort = effort / config.instances if config.instances else 0.0
        points.append(AlphaPoint(alpha, m, config.instances, len(satisfiable), mean_effort, success))
    return AlphaSweepReport(config.n, points, config_echo(config))


def bias_tables(report: QualityReport) -> dict[int, list[tuple[str, int]]]:
    """Per instance, how often each distinct Correct assignment occurs (most frequent first)."""
    counters: dict[int, Counter] = {k: Counter() for k in report.per_instance_correct}
    for rec in report.records:
        if rec.classification is Classification.CORRECT:
            counters[rec.instance_id][rec.solution_key] += 1
    return {k: sorted(c.items(), key=lambda kv: (-kv[1], kv[0])) for k, c in counters.items()}


def solution_bias(config: ExperimentConfig) -> BiasReport:
    """Frequency of distinct Correct solutions per instance, keyed on the decoded 3SAT assignment.

    Each Correct answer is first completed with :func:`complete_witnesses` and
    the key is the canonical text of the assignment it decodes to.
    """
    instances = satisfiable_instances(
        config.n, config.m, config.instances, config.master_seed, config.max_attempts_per_instance
    )
    samples = sample_instances(config, instances)
    tables = {}
    for inst, sample_set in zip(instances, samples):
        q = encode(inst.formula)
        counts: Counter = Counter()
        for s in sample_set:
            bits = postprocess_answer(s.x, inst.formula, q, config.postprocessing, config.postprocess_config)
            if classify(bits, inst.formula) is Classification.CORRECT:
                completed = complete_witnesses(bits, inst.formula)
                counts[partial_key(decode(completed, inst.formula).partial)] += 1
        tables[inst.instance_id] = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return BiasReport(tables, {i.instance_id: i.seed for i in instances}, config_echo(config))


def queries_for_confidence(p: float, epsilon: float) -> int:
    """Smallest k with (1 - p)**k <= epsilon: reads needed to see a success with confidence 1 - epsilon."""
    if not 0 < p < 1:
        raise InputError(f"success probability must lie strictly between 0 and 1, got {p}")
    if not 0 < epsilon < 1:
        raise InputError(f"epsilon must lie strictly between 0 and 1, got {epsilon}")
    miss = 1.0 - p
    k = max(1, math.ceil(math.log(epsilon) / math.log1p(-p)))
    # the log ratio can land a hair off an integer; settle k on the exact power test
    while k > 1 and miss ** (k - 1) <= epsilon:
        k -= 1
    while miss**k > epsilon:
        k += 1
    return k


QUALITY_COLUMNS = ("bitcount", "correct", "fixable", "incorrect")
SWEEP_COLUMNS = ("alpha", "sat_fraction", "mean_effort", "sampler_success")
BIAS_COLUMNS = ("instance_id", "solution_key", "frequency")


def _csv_rows(report) -> tuple[Sequence[str], list[list]]:
    if isinstance(report, QualityReport):
        rows = [[b, c.correct, c.fixable, c.incorrect] for b, c in sorted(report.per_bitcount.items())]
        return QUALITY_COLUMNS, rows
    if isinstance(report, AlphaSweepReport):
        rows = [
            [repr(p.alpha), repr(p.sat_fraction), repr(p.mean_effort),
             "" if p.sampler_success is None else repr(p.sampler_success)]
            for p in report.points
        ]
        return SWEEP_COLUMNS, rows
    if isinstance(report, BiasReport):
        rows = [[k, key, freq] for k in sorted(report.tables) for key, freq in report.tables[k]]
        return BIAS_COLUMNS, rows
    raise TypeError(f"cannot emit {type(report).__name__}")


def write_csv(report, path: str | Path) -> Path:
    path = Path(path)
    header, rows = _csv_rows(report)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write CSV report to {path}: {exc.strerror or exc}") from exc
    return path


def write_json(report, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON report to {path}: {exc.strerror or exc}") from exc
    return path


def load_report(path: str | Path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc.strerror or exc}") from exc
    kinds = {"quality": QualityReport, "sweep": AlphaSweepReport, "bias": BiasReport}
    return kinds[data["kind"]].from_dict(data)


def emit_reports(report, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.json`` for a quality, sweep or bias report."""
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    return (
        write_csv(report, base.with_name(base.name + ".csv")),
        write_json(report, base.with_name(base.name + ".json")),
    )
