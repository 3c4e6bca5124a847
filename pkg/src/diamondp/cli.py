"""Command line entry point: ``diamondp run | sweep | check``.

Exit status: 0 converged, 1 usage or scenario error, 2 violation (wrong
stable suspect set or an ADD-conformance failure), 3 inconclusive because
the horizon was too short.
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import oracle, sim
from .core import state_to_dict
from .generate import expand_template
from .replay import ReplayMismatch, read_trace_and_rebuild
from .scenario import ScenarioError, dumps_scenario
from .trace import dump_trace_lines

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_INCONCLUSIVE = 0, 1, 2, 3
_EXIT = {oracle.CONVERGED: EXIT_OK, oracle.VIOLATION: EXIT_VIOLATION,
         oracle.INCONCLUSIVE: EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_template(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None


def build_scenario(path, seed=None, horizon=None):
    """Load a scenario or template file, applying command-line overrides."""
    raw = _read_template(path)
    if horizon is not None:
        raw["horizon"] = horizon
    return expand_template(raw, raw.get("seed", 0) if seed is None else seed)


def cmd_run(args) -> int:
    scenario = build_scenario(args.scenario, args.seed, args.horizon)
    trace = sim.run(scenario)
    report = oracle.evaluate(scenario, trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.jsonl", "w") as f:
        for line in dump_trace_lines(trace):
            f.write(line + "\n")
    (out / "scenario.json").write_text(dumps_scenario(scenario))
    finals = [state_to_dict(trace.final_states[p]) for p in sorted(trace.final_states)]
    (out / "final_states.json").write_text(json.dumps(finals, indent=1) + "\n")
    (out / "verdict.json").write_text(json.dumps(report.to_json(), indent=2) + "\n")
    print(f"{report.status} t_f={report.verdict.t_f_observed} "
          f"records={len(trace.records)} out={out}")
    return _EXIT[report.status]


def _sweep_one(job):
    raw, seed = job
    scenario = expand_template(raw, seed)
    report = oracle.evaluate(scenario, sim.run(scenario))
    return {
        "seed": seed,
        "n": scenario.n,
        "status": report.status,
        "t_f_observed": None if report.verdict.t_f_observed is None else str(report.verdict.t_f_observed),
        "conformance_ok": report.conformance_ok,
        "lemmas_ok": None if report.lemmas is None else report.lemmas.ok,
    }


def sweep(raw: dict, seeds: int, jobs: int = 1) -> dict:
    work = [(raw, seed) for seed in range(seeds)]
    if jobs > 1 and seeds > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, work))
    else:
        rows = [_sweep_one(job) for job in work]
    tfs = [Fraction(r["t_f_observed"]) for r in rows if r["t_f_observed"] is not None]
    converged = sum(r["status"] == oracle.CONVERGED for r in rows)
    return {
        "seeds": seeds,
        "converged": converged,
        "violations": sum(r["status"] == oracle.VIOLATION for r in rows),
        "inconclusive": sum(r["status"] == oracle.INCONCLUSIVE for r in rows),
        "pass_rate": converged / seeds if seeds else None,
        "t_f": None if not tfs else {
            "min": str(min(tfs)), "median": str(statistics.median(tfs)), "max": str(max(tfs)),
        },
        "runs": rows,
    }


def cmd_sweep(args) -> int:
    raw = _read_template(args.template)
    if args.horizon is not None:
        raw["horizon"] = args.horizon
    if args.seeds < 0:
        raise ScenarioError("--seeds must be non-negative")
    if args.seeds:
        expand_template(raw, 0)  # surface template errors before spawning work
    summary = sweep(raw, args.seeds, args.jobs)
    print(json.dumps(summary, indent=2))
    if summary["violations"]:
        return EXIT_VIOLATION
    return EXIT_INCONCLUSIVE if summary["inconclusive"] else EXIT_OK


def cmd_check(args) -> int:
    scenario = build_scenario(args.scenario)
    trace = read_trace_and_rebuild(args.trace, scenario)
    report = oracle.evaluate(scenario, trace)
    print(json.dumps(report.to_json(), indent=2))
    return _EXIT[report.status]


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="diamondp", description="Simulate and check the heartbeat failure detector.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one scenario and write trace, states and verdict")
    r.add_argument("scenario")
    r.add_argument("--out", default="out")
    r.add_argument("--horizon", type=Fraction)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario template over seeds 0..N-1")
    s.add_argument("template")
    s.add_argument("--seeds", type=int, required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--horizon", type=Fraction)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="re-check an existing trace against its scenario")
    c.add_argument("trace")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError, ValueError, ReplayMismatch) as e:
        print(f"diamondp: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
