import csv

import pytest
from hypothesis import given, strategies as st

from satqubo.cnf import CnfFormula, dpll_satisfiable
from satqubo.encoder import encode
from satqubo.errors import ConfigurationError, ExperimentError, InputError
from satqubo.experiments import (
    AlphaPoint,
    AlphaSweepReport,
    BiasReport,
    Classification,
    ExperimentConfig,
    Instance,
    QualityReport,
    RunRecord,
    bias_tables,
    emit_reports,
    instances_solved_within,
    load_report,
    quality_reports,
    queries_for_confidence,
    run_alpha_sweep,
    run_quality_experiment,
    satisfiable_instances,
    solution_bias,
)
from satqubo.postprocess import decode, partial_key
from satqubo.samplers import SamplerConfig, brute_force_minimize

SMALL_SA = SamplerConfig(sweeps=200)


def test_confidence_bound_reference_value():
    assert queries_for_confidence(0.25, 1e-12) == 97


def test_confidence_trivial_and_exact_power():
    assert queries_for_confidence(0.5, 0.5) == 1
    assert queries_for_confidence(0.9, 1e-12) == 12


@pytest.mark.parametrize("p, eps", [(0, 0.1), (1, 0.1), (0.5, 0), (0.5, 1)])
def test_confidence_domain(p, eps):
    with pytest.raises(InputError):
        queries_for_confidence(p, eps)


@given(st.floats(0.001, 0.999), st.floats(1e-15, 0.999))
def test_confidence_is_minimal(p, eps):
    k = queries_for_confidence(p, eps)
    assert (1 - p) ** k <= eps
    assert k == 1 or (1 - p) ** (k - 1) > eps


@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01), st.floats(1e-12, 0.5), st.floats(0.01, 0.99))
def test_confidence_monotone(p, dp, eps, shrink):
    assert queries_for_confidence(p + dp, eps) <= queries_for_confidence(p, eps)
    assert queries_for_confidence(p, eps * shrink) >= queries_for_confidence(p, eps)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(alpha_grid=(2.0, 1.0))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(sampler="qpu")
    with pytest.raises(ConfigurationError):
        ExperimentConfig(postprocessing="majority")
    with pytest.raises(ConfigurationError):
        ExperimentConfig(instances=-1)


def test_satisfiable_instances_are_satisfiable_and_seeded():
    found = satisfiable_instances(10, 42, 5, master_seed=4)
    assert [i.instance_id for i in found] == list(range(5))
    assert all(dpll_satisfiable(i.formula)[0] for i in found)
    assert found == satisfiable_instances(10, 42, 5, master_seed=4)


def test_regeneration_gives_up():
    with pytest.raises(ExperimentError):
        satisfiable_instances(3, 60, 1, master_seed=0, max_attempts_per_instance=5)


def test_quality_report_geometry():
    config = ExperimentConfig(n=10, m=42, instances=3, reads=20, sampler_config=SMALL_SA, master_seed=2)
    report = run_quality_experiment(config)
    assert report.total_answers == 60
    assert len(report.records) == 60
    assert all(r.bitcount <= 126 for r in report.records)
    assert set(report.per_instance_correct) == {0, 1, 2}
    assert report.total_correct == sum(c.correct for c in report.per_bitcount.values())
    assert report.config["n"] == 10 and report.instance_seeds


def test_quality_with_brute_sampler_is_all_correct():
    config = ExperimentConfig(n=5, m=4, instances=6, reads=10, sampler="brute", master_seed=9)
    report = run_quality_experiment(config)
    assert report.total_correct == 60
    assert report.instances_solved == 6


def test_zero_reads_gives_empty_report():
    report = run_quality_experiment(ExperimentConfig(n=10, m=42, instances=2, reads=0))
    assert report.total_answers == 0 and report.total_correct == 0 and report.instances_solved == 0
    assert report.per_bitcount == {}


def test_modes_share_raw_answers_and_dominate():
    config = ExperimentConfig(n=10, m=42, instances=3, reads=30, sampler_config=SamplerConfig(sweeps=50), master_seed=5)
    reports = quality_reports(config)
    raw, logical = reports["none"], reports["logical"]
    assert logical.total_correct >= raw.total_correct
    assert reports["both"].total_correct >= reports["subproblem"].total_correct
    assert raw == run_quality_experiment(config)
    for k in raw.per_instance_correct:
        assert logical.per_instance_correct[k] >= raw.per_instance_correct[k]


def test_raw_fixable_answers_become_correct_under_logical():
    config = ExperimentConfig(n=10, m=42, instances=2, reads=30, sampler_config=SamplerConfig(sweeps=20), master_seed=1)
    reports = quality_reports(config, ("none", "logical"))
    fixable = sum(c.fixable for c in reports["none"].per_bitcount.values())
    gained = reports["logical"].total_correct - reports["none"].total_correct
    assert gained == fixable


def test_instances_solved_monotone_in_reads():
    config = ExperimentConfig(n=10, m=42, instances=4, reads=40, sampler_config=SamplerConfig(sweeps=30), master_seed=3)
    report = run_quality_experiment(config)
    solved = [instances_solved_within(report, k) for k in range(0, 41, 5)]
    assert solved == sorted(solved)
    assert solved[-1] == report.instances_solved


def test_alpha_sweep_extremes():
    config = ExperimentConfig(n=12, instances=40, reads=0, alpha_grid=(1.0, 8.0), master_seed=1)
    report = run_alpha_sweep(config)
    low, high = report.points
    assert low.m == 12 and high.m == 96
    assert low.sat_fraction >= 0.95 and high.sat_fraction <= 0.05
    assert low.sampler_success is None


def test_alpha_sweep_sampler_success_in_unit_interval():
    config = ExperimentConfig(
        n=10, instances=4, reads=10, sampler_config=SamplerConfig(sweeps=100), alpha_grid=(2.0, 4.2)
    )
    for p in run_alpha_sweep(config).points:
        assert p.sampler_success is None or 0 <= p.sampler_success <= 1
        assert 0 <= p.sat_fraction <= 1


def test_crossing_interpolation():
    report = AlphaSweepReport(
        10,
        [AlphaPoint(1.0, 10, 10, 10, 2.0, None), AlphaPoint(2.0, 20, 10, 8, 4.0, None),
         AlphaPoint(3.0, 30, 10, 2, 8.0, None)],
    )
    assert report.crossing_alpha() == pytest.approx(2.5)
    assert report.effort_at(2.5) == pytest.approx(6.0)
    assert AlphaSweepReport(10, report.points[:1]).crossing_alpha() is None


def test_bias_tables_with_brute_sampler():
    config = ExperimentConfig(n=4, m=4, instances=4, reads=64, sampler="brute", master_seed=11)
    report = solution_bias(config)
    for inst in satisfiable_instances(4, 4, 4, master_seed=11):
        _, argmins = brute_force_minimize(encode(inst.formula))
        expected = {partial_key(decode(x, inst.formula).partial) for x in argmins}
        table = report.tables[inst.instance_id]
        assert {key for key, _ in table} == expected
        assert sum(freq for _, freq in table) == 64
        freqs = [freq for _, freq in table]
        assert freqs == sorted(freqs, reverse=True)


def test_bias_unique_solution_instance():
    # x1 & x2 & x3 forced by unit-like clauses
    formula = CnfFormula.from_dimacs_clauses(3, [(1, 1, 1), (2, 2, 2), (3, 3, 3)])
    config = ExperimentConfig(n=3, m=3, instances=1, reads=5, sampler="brute")
    report = quality_reports(config, ("none",), instances=[Instance(0, 0, formula)])["none"]
    assert len(bias_tables(report)[0]) <= 1


def test_bias_frequencies_partition_correct_answers():
    config = ExperimentConfig(n=10, m=42, instances=3, reads=25, sampler_config=SMALL_SA, master_seed=6)
    bias = solution_bias(config)
    quality = run_quality_experiment(config)
    for k, table in bias.tables.items():
        assert sum(freq for _, freq in table) == quality.per_instance_correct[k]


# --- persistence --------------------------------------------------------------


def synthetic_report():
    records = [
        RunRecord(0, 0, 42, Classification.CORRECT, -42.0, "1010101010"),
        RunRecord(0, 1, 40, Classification.INCORRECT, -40.0, "1-1-101010"),
        RunRecord(1, 0, 41, Classification.FIXABLE, -41.0, "0000011111"),
    ]
    return QualityReport.from_records("none", records, {0: 17, 1: 23}, {"n": 10})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_report_is_header_only(tmp_path):
    csv_path, _ = emit_reports(QualityReport.from_records("none", [], {}), tmp_path / "empty")
    assert read_csv(csv_path) == [["bitcount", "correct", "fixable", "incorrect"]]


def test_three_record_report_rows(tmp_path):
    csv_path, _ = emit_reports(synthetic_report(), tmp_path / "q")
    rows = read_csv(csv_path)
    assert rows[1:] == [["40", "0", "0", "1"], ["41", "0", "1", "0"], ["42", "1", "0", "0"]]


def test_json_round_trip(tmp_path):
    report = synthetic_report()
    _, json_path = emit_reports(report, tmp_path / "q")
    assert load_report(json_path) == report


def test_sweep_and_bias_round_trip(tmp_path):
    sweep = AlphaSweepReport(12, [AlphaPoint(1.0, 12, 5, 5, 0.4, 0.75), AlphaPoint(2.0, 24, 5, 4, 1.2, None)])
    csv_path, json_path = emit_reports(sweep, tmp_path / "s")
    assert load_report(json_path) == sweep
    assert read_csv(csv_path)[0] == ["alpha", "sat_fraction", "mean_effort", "sampler_success"]
    assert read_csv(csv_path)[2][3] == ""
    bias = BiasReport({0: [("10-", 3), ("01-", 1)], 1: []}, {0: 5, 1: 6})
    csv_path, json_path = emit_reports(bias, tmp_path / "b")
    assert load_report(json_path) == bias
    assert read_csv(csv_path) == [["instance_id", "solution_key", "frequency"], ["0", "10-", "3"], ["0", "01-", "1"]]


def test_write_error_mentions_path(tmp_path):
    target = tmp_path / "missing" / "dir" / "q"
    with pytest.raises(OSError, match=str(target.parent)):
        emit_reports(synthetic_report(), target)


def test_quality_csv_is_byte_identical_across_runs(tmp_path):
    config = ExperimentConfig(n=10, m=42, instances=2, reads=10, sampler_config=SMALL_SA, master_seed=77)
    a, _ = emit_reports(run_quality_experiment(config), tmp_path / "a")
    b, _ = emit_reports(run_quality_experiment(config), tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_parallel_instances_match_serial():
    base = dict(n=10, m=42, instances=3, reads=10, sampler_config=SMALL_SA, master_seed=12)
    assert run_quality_experiment(ExperimentConfig(workers=3, **base)).records == run_quality_experiment(
        ExperimentConfig(**base)
    ).records


@pytest.mark.slow
def test_full_protocol_yields_100000_answers():
    # 100 instances x 1000 reads; one sweep per read keeps this to answer bookkeeping
    config = ExperimentConfig(n=10, m=42, instances=100, reads=1000, sampler_config=SamplerConfig(sweeps=1))
    report = run_quality_experiment(config)
    assert report.total_answers == 100_000
    assert len(report.per_instance_correct) == 100
