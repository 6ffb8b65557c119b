"""Command line entry point: ``satqubo <command> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .cnf import generate_random_3sat, parse_dimacs, write_dimacs
from .encoder import encode, parse_qubo, write_qubo
from .errors import SatQuboError
from .experiments import (
    POSTPROCESSING_MODES,
    ExperimentConfig,
    emit_reports,
    queries_for_confidence,
    run_alpha_sweep,
    run_quality_experiment,
    solution_bias,
)
from .postprocess import PostprocessConfig
from .samplers import SAMPLERS, SamplerConfig, sample


def parse_alpha_grid(text: str) -> tuple[float, ...]:
    """``"1,2,4.5"`` or an inclusive range ``"start:stop:step"``."""
    if ":" in text:
        try:
            start, stop, step = (float(p) for p in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad alpha range {text!r}, expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad alpha range {text!r}")
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}") from None


def _emit_text(text: str, out: str | None) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        reads=max(args.reads, 1),
        sweeps=args.sweeps,
        beta_start=args.beta_start,
        beta_end=args.beta_end,
        tabu_tenure=args.tabu_tenure,
        master_seed=args.seed,
    )


def _experiment_config(args, alpha_grid=()) -> ExperimentConfig:
    return ExperimentConfig(
        n=args.n,
        m=args.m,
        instances=args.instances,
        reads=args.reads,
        sampler=args.sampler,
        sampler_config=_sampler_config(args),
        postprocessing=args.post,
        postprocess_config=PostprocessConfig(block_size=args.block_size, max_passes=args.max_passes),
        master_seed=args.seed,
        alpha_grid=alpha_grid,
        output_path=args.out,
        workers=args.workers,
    )


def cmd_generate(args) -> int:
    formula = generate_random_3sat(args.n, args.m, args.seed)
    _emit_text(write_dimacs(formula, comments=[f"random 3SAT n={args.n} m={args.m} seed={args.seed}"]), args.out)
    return 0


def cmd_encode(args) -> int:
    _emit_text(write_qubo(encode(parse_dimacs(_read(args.input)))), args.out)
    return 0


def cmd_solve(args) -> int:
    text = _read(args.input)
    first = next((ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")), "")
    q = parse_qubo(text) if first.startswith("dim") else encode(parse_dimacs(text))
    result = sample(q, args.sampler, _sampler_config(args), workers=args.workers)
    payload = dict(result.to_dict(), sampler=args.sampler, config=dataclasses.asdict(_sampler_config(args)))
    _emit_text(json.dumps(payload, indent=1) + "\n", args.out)
    return 0


def _report(report, args) -> int:
    if args.out:
        csv_path, json_path = emit_reports(report, args.out)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    return 0


def cmd_quality(args) -> int:
    report = run_quality_experiment(_experiment_config(args))
    print(
        f"{report.total_answers} answers, {report.total_correct} correct, "
        f"{report.instances_solved}/{len(report.per_instance_correct)} instances solved"
    )
    return _report(report, args)


def cmd_sweep(args) -> int:
    report = run_alpha_sweep(_experiment_config(args, args.alpha_grid))
    print("alpha  m    sat_fraction  mean_effort  sampler_success")
    for p in report.points:
        success = "-" if p.sampler_success is None else f"{p.sampler_success:.3f}"
        print(f"{p.alpha:<6g} {p.m:<4d} {p.sat_fraction:<13.3f} {p.mean_effort:<12.2f} {success}")
    crossing = report.crossing_alpha()
    print(f"crossing alpha: {'none' if crossing is None else f'{crossing:.3f}'}")
    return _report(report, args)


def cmd_bias(args) -> int:
    report = solution_bias(_experiment_config(args))
    for k, table in report.tables.items():
        top = ", ".join(f"{key}:{freq}" for key, freq in table[:3])
        print(f"instance {k}: {len(table)} distinct solutions  {top}")
    return _report(report, args)


def cmd_confidence(args) -> int:
    print(queries_for_confidence(args.p, args.epsilon))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satqubo", description="3SAT via QUBO with classical samplers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n=True):
        if n:
            p.add_argument("--n", type=int, default=10, help="number of variables")
            p.add_argument("--m", type=int, default=42, help="number of clauses")
        p.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
        p.add_argument("--out", default=None, help="output file (or report path prefix)")

    def sampling(p):
        p.add_argument("--sampler", choices=sorted(SAMPLERS), default="sa")
        p.add_argument("--reads", type=int, default=1000)
        p.add_argument("--sweeps", type=int, default=1000)
        p.add_argument("--beta-start", type=float, default=0.1)
        p.add_argument("--beta-end", type=float, default=10.0)
        p.add_argument("--tabu-tenure", type=int, default=10)
        p.add_argument("--workers", type=int, default=1)

    def experiment(p):
        sampling(p)
        p.add_argument("--instances", type=int, default=100)
        p.add_argument("--post", choices=POSTPROCESSING_MODES, default="none")
        p.add_argument("--block-size", type=int, default=12)
        p.add_argument("--max-passes", type=int, default=10)

    p = sub.add_parser("generate", help="emit a random 3SAT instance as DIMACS")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("encode", help="DIMACS -> QUBO text")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("solve", help="QUBO or DIMACS file -> SampleSet JSON")
    p.add_argument("input")
    common(p, n=False)
    sampling(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("quality", help="answer quality by bitcount")
    common(p)
    experiment(p)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("sweep", help="satisfiability / effort / success across alpha")
    common(p)
    experiment(p)
    p.add_argument("--alpha-grid", type=parse_alpha_grid, default=parse_alpha_grid("1:8:0.5"))
    p.set_defaults(func=cmd_sweep, n=12)

    p = sub.add_parser("bias", help="frequency of distinct correct solutions per instance")
    common(p)
    experiment(p)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("confidence", help="queries needed for a 1 - epsilon success probability")
    p.add_argument("--p", type=float, required=True, help="per-query success probability")
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.set_defaults(func=cmd_confidence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SatQuboError, OSError) as exc:
        print(f"satqubo {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
