"""Command-line entry point.

Subcommands: ``run`` (execute a config or suite), ``gs`` (ground energy),
``plan`` (measurement plan and circuit counts), ``dla`` (Lie closure
dimensions) and ``maxcut`` (solve one graph with every method).
Exit status: 0 success, 1 configuration or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .ansatz import build_sign_ansatz, default_brickwork_depth
from .driver import ConfigError, RunConfig, RunTrace, compute_metrics, run, run_maxcut
from .estimator import build_measurement_plan, plan_circuit_count
from .liealg import block_algebra_dimension, compare_generator_sets
from .pauli import PauliString, build_model, encoding_capacity, ground_state, read_edge_list

CSV_COLUMNS = [
    "method",
    "model",
    "seed",
    "mode",
    "final_energy",
    "E0",
    "rel_error",
    "shots_total",
    "circuits_per_iter",
    "cv_layer1",
    "cv_layer2",
]
CAPACITY_CASES = ((17, 2), (30, 2), (17, 3), (30, 3))


class InputError(Exception):
    """Bad command line, file or config; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# -- suites -------------------------------------------------------------------------


@dataclass
class ExperimentSuite:
    name: str
    runs: list[RunConfig]
    baseline: str | None = None
    output_dir: str = "results"
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = [c.label or c.method for c in self.runs]
        ids = [(lab, c.model.get("name"), json.dumps(c.model.get("params", {}), sort_keys=True), c.mode) for lab, c in zip(self.labels, self.runs)]
        if len(set(ids)) != len(ids):
            raise ConfigError("run IDs (label, model, mode) must be unique within a suite")
        if self.baseline is not None and self.baseline not in self.labels:
            raise ConfigError(f"baseline {self.baseline!r} is not the label of any run")

    @classmethod
    def from_dict(cls, d: dict, default_out: str = "results") -> "ExperimentSuite":
        if "runs" not in d:
            cfg = RunConfig.from_dict(d)
            return cls(cfg.label or cfg.method, [cfg], None, default_out)
        unknown = set(d) - {"name", "runs", "baseline", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown suite keys {sorted(unknown)}")
        runs = [RunConfig.from_dict(r) for r in d["runs"]]
        return cls(d.get("name", "suite"), runs, d.get("baseline"), d.get("output_dir", default_out))


def _run_one(args: tuple[str, dict, int]) -> tuple[str, dict, RunTrace]:
    label, cfg_dict, seed = args
    return label, cfg_dict, run(RunConfig.from_dict(cfg_dict), seed)


def execute_suite(suite: ExperimentSuite) -> list[tuple[str, RunConfig, RunTrace]]:
    jobs = [(lab, cfg.to_dict(), int(s)) for lab, cfg in zip(suite.labels, suite.runs) for s in cfg.seeds]
    workers = max(1, int(os.environ.get("SVQNHE_THREADS", "1")))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_one, jobs))
    else:
        done = [_run_one(j) for j in jobs]
    return [(lab, RunConfig.from_dict(c), t) for lab, c, t in done]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


def csv_row(label: str, trace: RunTrace) -> dict:
    e0 = trace.e0
    rel = (trace.final_energy - e0) / abs(e0) if e0 not in (None, 0.0) else None
    return {
        "method": label,
        "model": trace.model,
        "seed": trace.seed,
        "mode": trace.mode,
        "final_energy": trace.final_energy,
        "E0": e0,
        "rel_error": rel,
        "shots_total": trace.shots_total,
        "circuits_per_iter": trace.circuits_per_iter,
        "cv_layer1": trace.cv_layer(1),
        "cv_layer2": trace.cv_layer(2),
    }


METRIC_COLUMNS = ["model", "method", "runs", "mae", "var", "r_mae", "r_var", "success_probability", "median_steps"]


def metric_rows(results: Sequence[tuple[str, RunTrace]], baseline: str | None) -> list[dict]:
    """MAE, variance and (with a baseline) R_MAE / R_Var per model and method."""
    groups: dict[tuple[str, str], list[RunTrace]] = {}
    for label, t in results:
        groups.setdefault((t.model, label), []).append(t)
    rows = []
    for (model, label), traces in sorted(groups.items()):
        row = dict.fromkeys(METRIC_COLUMNS)
        row.update(model=model, method=label, runs=len(traces))
        if len(traces) < 2:
            row["mae"] = abs(traces[0].final_energy - traces[0].e0)
        else:
            base = groups.get((model, baseline)) if baseline and label != baseline else None
            m = compute_metrics(traces, base if base and len(base) >= 2 else None)
            row.update(mae=m.mae, var=m.var, r_mae=m.r_mae, r_var=m.r_var, success_probability=m.success_probability, median_steps=m.median_steps)
        rows.append(row)
    return rows


def summary_table(rows: Sequence[dict]) -> str:
    def cell(x, width, spec):
        return f"{'':>{width}}" if x is None else f"{x:>{width}{spec}}"

    lines = [f"{'model':<14}{'method':<16}{'runs':>5}{'MAE':>14}{'Var':>14}{'R_MAE':>10}{'R_Var':>10}{'success':>9}"]
    for r in rows:
        lines.append(
            f"{r['model']:<14}{r['method']:<16}{r['runs']:>5}"
            + cell(r["mae"], 14, ".6g")
            + cell(r["var"], 14, ".6g")
            + cell(r["r_mae"], 10, ".3f")
            + cell(r["r_var"], 10, ".3f")
            + cell(r["success_probability"], 9, ".2f")
        )
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row[k]) for k in columns})
    path.write_text(buf.getvalue())


def emit_reports(results: Sequence[tuple[str, RunConfig, RunTrace]], output_dir, baseline: str | None = None) -> dict[str, Path]:
    """Write ``results.csv``, ``metrics.csv``, ``summary.txt`` and one JSONL trace per run."""
    out = Path(output_dir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from None
    for label, _, trace in results:
        (out / "traces" / f"{label}_{trace.model}_{trace.mode}_seed{trace.seed}.jsonl").write_text(trace.to_jsonl())
    paths = {"csv": out / "results.csv", "metrics": out / "metrics.csv", "summary": out / "summary.txt"}
    _write_csv(paths["csv"], CSV_COLUMNS, [csv_row(label, t) for label, _, t in results])
    rows = metric_rows([(label, t) for label, _, t in results], baseline)
    _write_csv(paths["metrics"], METRIC_COLUMNS, rows)
    paths["summary"].write_text(summary_table(rows))
    return paths


# -- subcommands ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None


def cmd_run(args) -> int:
    suite = ExperimentSuite.from_dict(_load_json(args.config), args.out or "results")
    if args.out:
        suite.output_dir = args.out
    results = execute_suite(suite)
    paths = emit_reports(results, suite.output_dir, suite.baseline)
    print(paths["summary"].read_text(), end="")
    print(f"wrote {paths['csv']}")
    return 0


_MODEL_FLAGS = ("n", "rows", "cols", "J", "J1", "J2", "h", "g", "delta1", "delta2", "B_H")


def _model_from_flags(args) -> tuple[str, dict]:
    params = {k: getattr(args, k) for k in _MODEL_FLAGS if getattr(args, k) is not None}
    return args.model, params


def _add_model_flags(p):
    p.add_argument("--model", default="j1j2")
    for k in _MODEL_FLAGS:
        p.add_argument(f"--{k}", type=int if k in ("n", "rows", "cols") else float, default=None)


def cmd_gs(args) -> int:
    name, params = _model_from_flags(args)
    try:
        h = build_model(name, params)
    except (KeyError, ValueError) as exc:
        raise InputError(f"cannot build model {name!r}: {exc}") from None
    e0, _ = ground_state(h, args.method)
    print(float(round(e0, 10)))
    return 0


def _maxcut_plan_counts(n: int, k: int) -> tuple[int, int, int]:
    """(vertex capacity, sVQNHE circuits, brickwork-VQE circuits) for a full encoding.

    Counted from masks alone so that register sizes beyond the simulator work.
    The brickwork circuit is differentiated gate by gate with the two-point
    shift rule over three qubit-wise-commuting groups (all X, all Y, all Z).
    """
    from itertools import combinations

    m = encoding_capacity(n, k)
    strings = [PauliString("".join(b if q in qs else "I" for q in range(n))) for b in "ZXY" for qs in combinations(range(n), k)]
    gens = [1 << (n - 1 - q) for q in range(n)] + [(1 << (n - 1 - a)) | (1 << (n - 1 - b)) for a, b in combinations(range(n), 2)]
    d = n * default_brickwork_depth(m)
    return m, plan_circuit_count(strings, gens), (2 * d + 1) * 3


def cmd_plan(args) -> int:
    if args.capacity:
        print(f"{'n':>4}{'k':>3}{'vertices':>10}{'sVQNHE':>9}{'brickwork':>11}")
        for n, k in CAPACITY_CASES:
            m, svq, bw = _maxcut_plan_counts(n, k)
            print(f"{n:>4}{k:>3}{m:>10}{svq:>9}{bw:>11}")
        return 0
    if args.config:
        cfg = RunConfig.from_dict(_load_json(args.config))
        h, layers = cfg.hamiltonian(), cfg.n_layers
        edges = cfg.ansatz.get("edges", "hamiltonian")
    else:
        name, params = _model_from_flags(args)
        try:
            h = build_model(name, params)
        except (KeyError, ValueError) as exc:
            raise InputError(f"cannot build model {name!r}: {exc}") from None
        layers, edges = args.layers, "hamiltonian"
    n = h.n_qubits
    if edges == "hamiltonian":
        edges = h.interaction_edges()
    elif edges == "all":
        edges = [(a, b) for a in range(n) for b in range(a + 1, n)]
    ans = build_sign_ansatz(n, edges, layers)
    plan = build_measurement_plan(h, ans, args.layer or layers)
    if args.json:
        print(plan.to_json())
    else:
        for b in plan.to_dict()["bases"]:
            print(f"{b['flip']}  phase {b['phase_power']}  terms {len(b['terms'])}  shifted {len(b['shifted'])}")
    print(f"circuits per iteration: {plan.circuit_count}")
    return 0


def cmd_dla(args) -> int:
    ms = args.m if args.m else [2]
    print(f"{'n':>3}{'m':>3}{'dim g1':>8}{'dim g2':>8}{'2(4^(n-1)-1)':>14}")
    for n in args.n:
        for m in ms:
            try:
                d1, d2, _ = compare_generator_sets(n, m)
            except ValueError as exc:
                raise InputError(str(exc)) from None
            print(f"{n:>3}{m:>3}{d1:>8}{d2:>8}{block_algebra_dimension(n):>14}")
    return 0


def cmd_maxcut(args) -> int:
    if not Path(args.graph).is_file():
        raise InputError(f"no such file: {args.graph}")
    try:
        graph = read_edge_list(args.graph)
    except ValueError as exc:
        raise InputError(f"malformed edge list {args.graph}: {exc}") from None
    cfg = RunConfig.from_dict(_load_json(args.config))
    report = run_maxcut(graph, cfg)
    rows = report.rows()
    print(f"vertices {report.n_vertices}  edges {report.n_edges}  optimum {report.optimum}")
    print(f"{'method':<16}{'cut':>6}{'R_e':>8}{'R_e(opt)':>10}{'circuits/iter':>15}")
    for r in rows:
        opt = f"{r['r_e_optimum']:>10.3f}" if r["r_e_optimum"] is not None else f"{'':>10}"
        print(f"{r['method']:<16}{r['cut']:>6.0f}{r['r_e']:>8.3f}{opt}{r['circuits_per_iter']:>15}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "maxcut.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="svqnhe", description="Sign-structure quantum-neural hybrid eigensolver experiments")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("run", help="execute a run config or suite")
    r.add_argument("config")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gs", help="print the ground energy of a model")
    _add_model_flags(g)
    g.add_argument("--method", choices=("auto", "dense", "lanczos"), default="auto")
    g.set_defaults(func=cmd_gs)

    pl = sub.add_parser("plan", help="measurement plan and circuits per iteration")
    pl.add_argument("config", nargs="?")
    _add_model_flags(pl)
    pl.add_argument("--layers", type=int, default=1)
    pl.add_argument("--layer", type=int, default=None)
    pl.add_argument("--json", action="store_true")
    pl.add_argument("--capacity", action="store_true", help="MaxCut encoding capacities and per-iteration costs")
    pl.set_defaults(func=cmd_plan)

    d = sub.add_parser("dla", help="Lie closure dimensions of the two generator sets")
    d.add_argument("--n", type=int, nargs="+", required=True)
    d.add_argument("--m", type=int, nargs="+", default=None)
    d.set_defaults(func=cmd_dla)

    mc = sub.add_parser("maxcut", help="solve a MaxCut instance with every method")
    mc.add_argument("graph")
    mc.add_argument("config")
    mc.add_argument("--out", default=None)
    mc.set_defaults(func=cmd_maxcut)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise InputError("missing subcommand; choose from run, gs, plan, dla, maxcut")
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures inside a run
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
