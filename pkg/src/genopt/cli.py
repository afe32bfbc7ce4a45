"""Command-line front end: declarative YAML configs in, CSV tables out.

Output formatting is deliberately rigid (fixed column order, 17
significant digits, LF endings) so that repeated runs of the same config
are byte-identical and diffable. Every error path prints exactly one
stderr line of the form ``error[<code>]: <message>``.

Exit codes: 0 success, 2 config error, 3 runtime error. A diverged run is
a successful run whose status column says so.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np
import yaml

from .harness import (
    ExperimentSpec,
    GridSearchError,
    RunResult,
    SpecError,
    build_problem,
    convergence_metrics,
    grid_search_rows,
    pick_best_row,
    run_experiment,
    spec_from_dict,
)

FORMAT_VERSION = 1

TRAJECTORY_COLUMNS = ("step", "loss", "eta", "eta_candidate",
                      "fit_accepted", "fit_r2", "grad_norm", "status")

SUMMARY_COLUMNS = ("name", "status", "iterations", "final_loss", "final_eta",
                   "wall_time_s", "fit_attempts", "fits_accepted",
                   "fits_rejected")


@dataclass
class Config:
    experiments: List[ExperimentSpec]
    output_dir: str
    format_version: int


def fmt(value) -> str:
    """Canonical cell formatting: floats at 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def _one_line(msg) -> str:
    return " ".join(str(msg).split())


def _err(code: str, message) -> None:
    print(f"error[{code}]: {_one_line(message)}", file=sys.stderr)


def load_config(path: str) -> Config:
    """Read and strictly validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise SpecError("config.unreadable", f"cannot read {path}: {e}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SpecError("config.parse", f"cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise SpecError("config.not-a-mapping",
                        "config root must be a mapping")
    for key in data:
        if key not in ("format_version", "output_dir", "experiments"):
            raise SpecError("config.unknown-key",
                            f"unknown key {key!r} at config root")
    for key in ("format_version", "output_dir", "experiments"):
        if key not in data:
            raise SpecError("config.missing-key",
                            f"missing required key {key!r} at config root")
    if data["format_version"] != FORMAT_VERSION:
        raise SpecError("config.format-version",
                        f"unsupported format_version "
                        f"{data['format_version']!r}; this build reads "
                        f"version {FORMAT_VERSION}")
    if not isinstance(data["output_dir"], str) or not data["output_dir"]:
        raise SpecError("config.output-dir",
                        "output_dir must be a non-empty path string")
    raw = data["experiments"]
    if not isinstance(raw, list) or not raw:
        raise SpecError("config.no-experiments",
                        "no experiments: the experiments list is empty")
    specs = []
    seen = set()
    for i, entry in enumerate(raw):
        spec = spec_from_dict(entry, where=f"experiments[{i}]")
        if spec.name in seen:
            raise SpecError("config.duplicate-name",
                            f"duplicate experiment name {spec.name!r}")
        seen.add(spec.name)
        specs.append(spec)
    return Config(experiments=specs, output_dir=data["output_dir"],
                  format_version=data["format_version"])


# ---------------------------------------------------------------------------
# CSV writers

def _open_csv(path: str):
    return open(path, "w", newline="", encoding="utf-8")


def write_trajectory_csv(path: str, result: RunResult) -> None:
    with _open_csv(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        last = len(result.records) - 1
        for i, rec in enumerate(result.records):
            row_status = result.status if i == last else "ok"
            w.writerow([fmt(rec.step), fmt(rec.loss), fmt(rec.eta),
                        fmt(rec.eta_candidate), fmt(rec.fit_accepted),
                        fmt(rec.fit_r2), fmt(rec.grad_norm), row_status])


def write_summary_csv(path: str, specs: List[ExperimentSpec],
                      results: List[RunResult]) -> None:
    with _open_csv(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for spec, res in zip(specs, results):
            stats = res.gen_stats or {}
            w.writerow([
                spec.name, res.status, fmt(spec.iterations),
                fmt(res.final_loss),
                fmt(res.records[-1].eta if res.records else None),
                f"{res.wall_time:.3f}",
                fmt(stats.get("fit_attempts")),
                fmt(stats.get("fits_accepted")),
                fmt(stats.get("fits_rejected")),
            ])


def write_grid_csv(path: str, rows: List[Dict],
                   best_eta: Optional[float]) -> None:
    with _open_csv(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("eta", "final_loss", "status", "winner"))
        for row in rows:
            w.writerow([fmt(row["eta"]), fmt(row["final_loss"]),
                        row["status"], fmt(row["eta"] == best_eta)])


def write_compare_csv(path: str, names: List[str], iterations: int,
                      results: List[RunResult]) -> None:
    by_step = []
    for res in results:
        by_step.append({rec.step: rec.loss for rec in res.records})
    with _open_csv(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iter"] + names)
        for t in range(1, iterations + 1):
            row = [fmt(t)]
            for table in by_step:
                loss = table.get(t)
                row.append(fmt(loss) if loss is not None else "")
            w.writerow(row)


def write_compare_summary_csv(path: str, entries: List[Dict]) -> None:
    with _open_csv(path) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("name", "optimizer", "variant", "status", "final_loss",
                    "iters_to_tol"))
        for e in entries:
            w.writerow([e["name"], e["optimizer"], e["variant"], e["status"],
                        fmt(e["final_loss"]), fmt(e["iters_to_tol"])])


# ---------------------------------------------------------------------------
# commands

def _apply_seed_override(specs: List[ExperimentSpec],
                         seed: Optional[int]) -> List[ExperimentSpec]:
    if seed is None:
        return specs
    return [replace(s, seed=seed) for s in specs]


def _run_specs(specs: List[ExperimentSpec], jobs: int) -> List[RunResult]:
    if jobs <= 1 or len(specs) == 1:
        return [run_experiment(s) for s in specs]
    # results come back in spec order regardless of completion order
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_experiment, specs))


def cmd_run(config_path: str, output_dir: Optional[str] = None,
            jobs: int = 1, seed: Optional[int] = None) -> int:
    """Run every experiment; write per-run trajectories plus a summary."""
    try:
        config = load_config(config_path)
        specs = _apply_seed_override(config.experiments, seed)
        out = output_dir or config.output_dir
        os.makedirs(out, exist_ok=True)
        results = _run_specs(specs, jobs)
        for spec, res in zip(specs, results):
            write_trajectory_csv(os.path.join(out, f"{spec.name}.trajectory.csv"),
                                 res)
            print(f"{spec.name}: status={res.status} "
                  f"final_loss={res.final_loss:.6g} "
                  f"records={len(res.records)}")
        write_summary_csv(os.path.join(out, "summary.csv"), specs, results)
        print(f"wrote {len(specs)} trajectories + summary.csv to {out}")
        return 0
    except SpecError as e:
        _err(e.code, e)
        return 2
    except OSError as e:
        _err("io.error", e)
        return 3


def cmd_grid_search(config_path: str, output_dir: Optional[str] = None,
                    jobs: int = 1, seed: Optional[int] = None) -> int:
    """Tune each experiment's constant learning rate over the 18-point grid."""
    try:
        config = load_config(config_path)
        specs = _apply_seed_override(config.experiments, seed)
        out = output_dir or config.output_dir
        os.makedirs(out, exist_ok=True)
        for spec in specs:
            if spec.gen is not None:
                raise SpecError("config.grid.gen-not-allowed",
                                f"experiment {spec.name!r} has gen settings; "
                                f"grid search tunes fixed-eta baselines")
            problem = build_problem(spec.problem)
            rows = grid_search_rows(problem, spec.optimizer, spec.iterations,
                                    start_point=spec.start_point,
                                    seed=spec.seed,
                                    batch_size=spec.batch_size)
            best = pick_best_row(rows)
            if best is None:
                raise GridSearchError(
                    f"all grid learning rates diverged for {spec.name!r}",
                    rows)
            write_grid_csv(os.path.join(out, f"{spec.name}.grid.csv"),
                           rows, best["eta"])
            print(f"{spec.name}: grid over {len(rows)} learning rates")
            for row in rows:
                mark = "  <- winner" if row["eta"] == best["eta"] else ""
                print(f"  eta={row['eta']:<8g} final_loss="
                      f"{row['final_loss']:.6e} [{row['status']}]{mark}")
        return 0
    except SpecError as e:
        _err(e.code, e)
        return 2
    except GridSearchError as e:
        _err("runtime.grid-all-diverged", e)
        return 3
    except OSError as e:
        _err("io.error", e)
        return 3


def _compare_pairing(specs: List[ExperimentSpec]) -> None:
    variants: Dict[str, set] = {}
    for spec in specs:
        kind = spec.optimizer["kind"]
        variants.setdefault(kind, set()).add(
            "gen" if spec.gen is not None else "base")
    for kind, have in sorted(variants.items()):
        missing = {"base", "gen"} - have
        if missing:
            raise SpecError("config.compare.unpaired",
                            f"optimizer kind {kind!r} is missing its "
                            f"{missing.pop()} counterpart")


def cmd_compare(config_path: str, output_dir: Optional[str] = None,
                jobs: int = 1, seed: Optional[int] = None) -> int:
    """Run base/adaptive pairs and emit an aligned loss-vs-iteration table."""
    try:
        config = load_config(config_path)
        specs = _apply_seed_override(config.experiments, seed)
        iterations = specs[0].iterations
        for spec in specs:
            if spec.log_every != 1:
                raise SpecError("config.compare.log-every",
                                f"experiment {spec.name!r} must use "
                                f"log_every 1 for aligned comparison")
            if spec.iterations != iterations:
                raise SpecError("config.compare.iterations",
                                f"experiment {spec.name!r} runs "
                                f"{spec.iterations} iterations; all "
                                f"experiments must match ({iterations})")
        _compare_pairing(specs)
        out = output_dir or config.output_dir
        os.makedirs(out, exist_ok=True)
        results = _run_specs(specs, jobs)
        names = [s.name for s in specs]
        write_compare_csv(os.path.join(out, "compare.csv"), names,
                          iterations, results)
        entries = []
        for spec, res in zip(specs, results):
            optimum = build_problem(spec.problem).known_minimizer
            iters_to_tol = None
            if optimum is not None:
                iters_to_tol, _ = convergence_metrics(res, optimum)
            entries.append({
                "name": spec.name,
                "optimizer": spec.optimizer["kind"],
                "variant": "gen" if spec.gen is not None else "base",
                "status": res.status,
                "final_loss": res.final_loss,
                "iters_to_tol": iters_to_tol,
            })
            print(f"{spec.name}: status={res.status} "
                  f"final_loss={res.final_loss:.6g}")
        write_compare_summary_csv(os.path.join(out, "compare_summary.csv"),
                                  entries)
        print(f"wrote compare.csv + compare_summary.csv to {out}")
        return 0
    except SpecError as e:
        _err(e.code, e)
        return 2
    except OSError as e:
        _err("io.error", e)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="genopt",
        description="Run adaptive-learning-rate benchmark experiments "
                    "from declarative configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (("run", "run experiments, write trajectories"),
                        ("grid-search", "tune baseline learning rates"),
                        ("compare", "aligned base-vs-adaptive comparison")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for independent runs")
        p.add_argument("--seed", type=int, default=None,
                       help="override every experiment's seed")
    args = parser.parse_args(argv)
    handler = {"run": cmd_run, "grid-search": cmd_grid_search,
               "compare": cmd_compare}[args.command]
    try:
        return handler(args.config, output_dir=args.out, jobs=args.jobs,
                       seed=args.seed)
    except Exception as e:  # belt and braces: never die without a code
        _err("runtime.unexpected", f"{type(e).__name__}: {e}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
