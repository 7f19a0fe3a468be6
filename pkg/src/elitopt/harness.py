"""Experiment harness: seeded algorithm x problem grids on disk.

An experiment is a grid of cells, one per (algorithm, problem, memory
on/off) combination.  Every cell gets its own base seed derived from the
root seed and the cell's algorithm and problem names only, so the memory
and memoryless variants of the same pair run from identical seeds and can
be compared pairwise; replicate ``r`` adds ``r`` to the cell seed.

Per-cell statistics are recomputed from the emitted history files rather
than carried over in memory, so everything in the report can be reproduced
from the files alone, digit for digit.

Layout under the output directory::

    manifest.json                    the resolved plan
    <alg>-<prob>-<mem|std>/
        run_000.csv ...              per-replicate history
        stats.csv                    replicate summary
        best.json                    best design of the cell
        error.txt                    only present when the cell failed
    report.csv                       one row per cell
    improvements.csv                 memory-vs-standard pairs
    report.txt                       aligned text rendering of both
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algorithms import algorithm_names, get_algorithm
from .core import (
    ConfigError,
    PenaltyParams,
    RunConfig,
    RunResult,
    StatsRecord,
    replicate_seed,
    run,
)
from .problems import get_problem

HISTORY_HEADER = ("iteration", "best_so_far", "nfes")
STATS_HEADER = ("best", "mean", "worst", "std", "nfes_median", "runs")
REPORT_HEADER = (
    "cell",
    "algorithm",
    "problem",
    "memory",
    "status",
    "best",
    "mean",
    "worst",
    "std",
    "nfes_median",
    "runs",
)
IMPROVEMENT_HEADER = (
    "algorithm",
    "problem",
    "standard_mean",
    "memory_mean",
    "improvement_pct",
)
PLOT_HEADER = ("cell", "run", "iteration", "best_so_far", "nfes")


def _fmt(x: float) -> str:
    return "%.12g" % float(x)


def cell_seed(root_seed: int, algorithm: str, problem: str) -> int:
    """Base seed of one grid cell.

    The root seed is XOR-combined with the first 8 bytes of
    ``sha256("algorithm:problem")``.  The memory flag deliberately stays out
    of the hash so paired variants start from the same seeds, and no cell's
    seed depends on any other cell's settings.
    """
    digest = hashlib.sha256(f"{algorithm}:{problem}".encode()).digest()
    return (int(root_seed) ^ int.from_bytes(digest[:8], "big")) % 2**64


def iterations_for_budget(budget: int, population_size: int, per_iteration: int) -> int:
    """Iteration count that fits an evaluation budget.

    The initial population costs ``population_size`` evaluations; the rest
    of the budget is divided by the per-iteration cost, discarding any
    remainder, so a run never exceeds the budget.
    """
    if per_iteration < 1:
        raise ConfigError("per-iteration evaluation count must be >= 1")
    left = int(budget) - int(population_size)
    iters = left // per_iteration
    if iters < 1:
        raise ConfigError(
            f"budget {budget} leaves no full iteration "
            f"(initial population {population_size}, {per_iteration} per iteration)"
        )
    return iters


@dataclass(frozen=True)
class PlanCell:
    label: str
    algorithm: str
    problem: str
    memory: bool
    seed: int
    iterations: int


_PLAN_KEYS = {
    "algorithm",
    "algorithms",
    "problem",
    "problems",
    "population_size",
    "max_iterations",
    "budget",
    "memory_enabled",
    "memory_fraction",
    "seed",
    "replicates",
    "dim",
    "penalty",
    "out",
}


@dataclass(frozen=True)
class ExperimentPlan:
    """A resolved experiment grid.

    Exactly one of ``budget`` (total evaluations per run, initialization
    included) and ``max_iterations`` must be set; with a budget the
    iteration count is derived per algorithm from its per-iteration cost.
    ``algorithm_params`` maps algorithm names to parameter overrides.
    """

    algorithms: tuple
    problems: tuple
    memory_modes: tuple
    replicates: int
    population_size: int
    root_seed: int
    budget: int | None = None
    max_iterations: int | None = None
    memory_fraction: float = 0.2
    dim: int = 10
    penalty: PenaltyParams = field(default_factory=PenaltyParams)
    algorithm_params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "problems", tuple(self.problems))
        object.__setattr__(self, "memory_modes", tuple(self.memory_modes))
        if not self.algorithms or not self.problems:
            raise ConfigError("plan needs at least one algorithm and one problem")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm in plan")
        if len(set(self.problems)) != len(self.problems):
            raise ConfigError("duplicate problem in plan")
        if not self.memory_modes or set(self.memory_modes) - {True, False}:
            raise ConfigError("memory_modes must be a non-empty subset of {on, off}")
        unknown = set(self.algorithms) - set(algorithm_names())
        if unknown:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if (self.budget is None) == (self.max_iterations is None):
            raise ConfigError("set exactly one of budget and max_iterations")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        bad = set(self.algorithm_params) - set(algorithm_names())
        if bad:
            raise ConfigError(f"parameter tables for unknown algorithms: {sorted(bad)}")

    def algorithm_instance(self, name: str):
        return get_algorithm(name, self.algorithm_params.get(name))

    def cells(self) -> list[PlanCell]:
        out = []
        for alg in self.algorithms:
            per_iter = self.algorithm_instance(alg).evals_per_iteration(
                self.population_size
            )
            if self.max_iterations is not None:
                iters = self.max_iterations
            else:
                iters = iterations_for_budget(
                    self.budget, self.population_size, per_iter
                )
            for prob in self.problems:
                seed = cell_seed(self.root_seed, alg, prob)
                for memory in self.memory_modes:
                    suffix = "mem" if memory else "std"
                    out.append(
                        PlanCell(
                            label=f"{alg}-{prob}-{suffix}",
                            algorithm=alg,
                            problem=prob,
                            memory=memory,
                            seed=seed,
                            iterations=iters,
                        )
                    )
        return out


def _as_name_list(doc: dict, singular: str, plural: str):
    if singular in doc and plural in doc:
        raise ConfigError(f"give either {singular!r} or {plural!r}, not both")
    value = doc.get(plural, doc.get(singular))
    if value is None:
        return None
    if isinstance(value, str):
        return [value]
    return [str(v) for v in value]


def plan_from_file(path: str | Path) -> tuple[ExperimentPlan, str | None]:
    """Parse a JSON plan document; returns the plan and the optional output
    directory named inside it."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: plan must be a JSON object")
    known = _PLAN_KEYS | set(algorithm_names())
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown plan keys {sorted(unknown)}")
    algorithms = _as_name_list(doc, "algorithm", "algorithms") or algorithm_names()
    problems = _as_name_list(doc, "problem", "problems")
    if problems is None:
        raise ConfigError(f"{path}: plan names no problem")
    if "memory_enabled" in doc:
        memory_modes = (bool(doc["memory_enabled"]),)
    else:
        memory_modes = (True, False)
    penalty_doc = doc.get("penalty", {})
    penalty = PenaltyParams(
        scale=float(penalty_doc.get("scale", 1.0)),
        exponent=float(penalty_doc.get("exponent", 2.0)),
    )
    params = {name: doc[name] for name in algorithm_names() if name in doc}
    plan = ExperimentPlan(
        algorithms=tuple(algorithms),
        problems=tuple(problems),
        memory_modes=memory_modes,
        replicates=int(doc.get("replicates", 20)),
        population_size=int(doc.get("population_size", 50)),
        root_seed=int(doc.get("seed", 0)),
        budget=None if "budget" not in doc else int(doc["budget"]),
        max_iterations=(
            None if "max_iterations" not in doc else int(doc["max_iterations"])
        ),
        memory_fraction=float(doc.get("memory_fraction", 0.2)),
        dim=int(doc.get("dim", 10)),
        penalty=penalty,
        algorithm_params=params,
    )
    return plan, doc.get("out")


# ---------------------------------------------------------------------------
# CSV files


def write_history_csv(path: Path, history) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(HISTORY_HEADER) + "\n")
        for iteration, best, nfes in history:
            fh.write(f"{int(iteration)},{_fmt(best)},{int(nfes)}\n")


def read_history_csv(path: str | Path) -> list[tuple[int, float, int]]:
    """Parse one history file; errors name the file and the 1-based line."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != HISTORY_HEADER:
        raise ValueError(f"{path}:1: expected header {','.join(HISTORY_HEADER)}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            out.append((int(parts[0]), float(parts[1]), int(parts[2])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from None
    if not out:
        raise ValueError(f"{path}:1: history has no data rows")
    return out


def write_stats_csv(path: Path, stats: StatsRecord) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(STATS_HEADER) + "\n")
        fh.write(
            ",".join(
                [
                    _fmt(stats.best),
                    _fmt(stats.mean),
                    _fmt(stats.worst),
                    _fmt(stats.std),
                    _fmt(stats.nfes_median),
                    str(int(stats.runs)),
                ]
            )
            + "\n"
        )


def read_stats_csv(path: str | Path) -> StatsRecord:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != 2 or tuple(rows[0]) != STATS_HEADER:
        raise ValueError(f"{path}:1: not a stats file")
    vals = rows[1]
    return StatsRecord(
        best=float(vals[0]),
        mean=float(vals[1]),
        worst=float(vals[2]),
        std=float(vals[3]),
        nfes_median=float(vals[4]),
        runs=int(vals[5]),
    )


def _stats_of(finals, nfes) -> StatsRecord:
    finals = np.asarray(finals, dtype=float)
    n = finals.size
    std = float(np.std(finals, ddof=1)) if n > 1 else 0.0
    return StatsRecord(
        best=float(finals.min()),
        mean=float(finals.mean()),
        worst=float(finals.max()),
        std=std,
        nfes_median=float(np.median(np.asarray(nfes, dtype=float))),
        runs=int(n),
    )


def cell_stats_from_files(cell_dir: str | Path) -> StatsRecord:
    """Recompute the cell summary from its run files alone."""
    cell_dir = Path(cell_dir)
    paths = sorted(cell_dir.glob("run_*.csv"))
    if not paths:
        raise ValueError(f"{cell_dir}: no run files")
    finals, nfes = [], []
    for path in paths:
        history = read_history_csv(path)
        finals.append(history[-1][1])
        nfes.append(history[-1][2])
    return _stats_of(finals, nfes)


# ---------------------------------------------------------------------------
# Running cells


def _replicate_job(args) -> RunResult:
    (alg, params, prob, dim, population, iterations, memory, fraction, penalty,
     seed) = args
    algorithm = get_algorithm(alg, params)
    problem = get_problem(prob, dim=dim)
    config = RunConfig(
        population_size=population,
        max_iterations=iterations,
        memory_enabled=memory,
        memory_fraction=fraction,
        seed=seed,
        penalty=penalty,
    )
    return run(algorithm, problem, config)


def run_cell(
    cell: PlanCell, plan: ExperimentPlan, out_dir: Path, workers: int = 1
) -> list[RunResult]:
    """Run all replicates of one cell and write its files.

    The stats file is computed from the just-written history files, not
    from the in-memory results, so it round-trips exactly.
    """
    cell_dir = Path(out_dir) / cell.label
    cell_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (
            cell.algorithm,
            plan.algorithm_params.get(cell.algorithm),
            cell.problem,
            plan.dim,
            plan.population_size,
            cell.iterations,
            cell.memory,
            plan.memory_fraction,
            plan.penalty,
            replicate_seed(cell.seed, r),
        )
        for r in range(plan.replicates)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_job, jobs))
    else:
        results = [_replicate_job(j) for j in jobs]
    for r, result in enumerate(results):
        write_history_csv(cell_dir / f"run_{r:03d}.csv", result.history)
    write_stats_csv(cell_dir / "stats.csv", cell_stats_from_files(cell_dir))
    best_r = min(range(len(results)), key=lambda r: results[r].best.fitness)
    best = results[best_r].best
    with open(cell_dir / "best.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "replicate": best_r,
                "fitness": best.fitness,
                "objective": best.objective,
                "violations": [float(v) for v in best.violations],
                "position": [float(x) for x in best.position],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return results


def write_manifest(plan: ExperimentPlan, out_dir: Path) -> None:
    doc = {
        "root_seed": plan.root_seed,
        "population_size": plan.population_size,
        "budget": plan.budget,
        "max_iterations": plan.max_iterations,
        "replicates": plan.replicates,
        "memory_fraction": plan.memory_fraction,
        "dim": plan.dim,
        "penalty": {"scale": plan.penalty.scale, "exponent": plan.penalty.exponent},
        "algorithm_params": plan.algorithm_params,
        "cells": [dataclasses.asdict(c) for c in plan.cells()],
    }
    with open(Path(out_dir) / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_manifest(out_dir: str | Path) -> list[PlanCell]:
    with open(Path(out_dir) / "manifest.json", encoding="utf-8") as fh:
        doc = json.load(fh)
    return [PlanCell(**c) for c in doc["cells"]]


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class CellSummary:
    label: str
    algorithm: str
    problem: str
    memory: bool
    status: str  # "ok" or "failed"
    stats: StatsRecord | None


@dataclass(frozen=True)
class PairImprovement:
    """Memory-vs-standard comparison of one (algorithm, problem) pair.

    ``improvement_pct`` is ``100 * (standard_mean - memory_mean) /
    standard_mean``; positive means the memory variant did better.
    """

    algorithm: str
    problem: str
    standard_mean: float
    memory_mean: float
    improvement_pct: float


@dataclass(frozen=True)
class ComparisonReport:
    cells: tuple
    improvements: tuple
    mean_improvement: float | None
    max_improvement: float | None


def build_report(out_dir: str | Path, cells=None) -> ComparisonReport:
    """Summarize an output directory by reading its files back."""
    out_dir = Path(out_dir)
    if cells is None:
        cells = read_manifest(out_dir)
    summaries = []
    for cell in cells:
        try:
            stats = read_stats_csv(out_dir / cell.label / "stats.csv")
            status = "ok"
        except (OSError, ValueError):
            stats, status = None, "failed"
        summaries.append(
            CellSummary(
                label=cell.label,
                algorithm=cell.algorithm,
                problem=cell.problem,
                memory=cell.memory,
                status=status,
                stats=stats,
            )
        )
    by_key = {(s.algorithm, s.problem, s.memory): s for s in summaries}
    improvements = []
    for s in summaries:
        if not s.memory:
            continue
        partner = by_key.get((s.algorithm, s.problem, False))
        if (
            partner is None
            or s.status != "ok"
            or partner.status != "ok"
            or s.stats.runs != partner.stats.runs
            or partner.stats.mean == 0
        ):
            continue
        pct = 100.0 * (partner.stats.mean - s.stats.mean) / partner.stats.mean
        improvements.append(
            PairImprovement(
                algorithm=s.algorithm,
                problem=s.problem,
                standard_mean=partner.stats.mean,
                memory_mean=s.stats.mean,
                improvement_pct=pct,
            )
        )
    pcts = [p.improvement_pct for p in improvements]
    return ComparisonReport(
        cells=tuple(summaries),
        improvements=tuple(improvements),
        mean_improvement=float(np.mean(pcts)) if pcts else None,
        max_improvement=float(np.max(pcts)) if pcts else None,
    )


def _render_table(header, rows) -> list[str]:
    widths = [len(h) for h in header]
    for row in rows:
        for j, value in enumerate(row):
            widths[j] = max(widths[j], len(value))
    lines = ["  ".join(h.ljust(widths[j]) for j, h in enumerate(header)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(
            "  ".join(value.ljust(widths[j]) for j, value in enumerate(row)).rstrip()
        )
    return lines


def write_report(out_dir: str | Path, cells=None) -> ComparisonReport:
    """Write ``report.csv``, ``improvements.csv`` and ``report.txt``."""
    out_dir = Path(out_dir)
    report = build_report(out_dir, cells)

    cell_rows = []
    for s in report.cells:
        metrics = [""] * 6
        if s.stats is not None:
            metrics = [
                _fmt(s.stats.best),
                _fmt(s.stats.mean),
                _fmt(s.stats.worst),
                _fmt(s.stats.std),
                _fmt(s.stats.nfes_median),
                str(s.stats.runs),
            ]
        cell_rows.append(
            [s.label, s.algorithm, s.problem, "on" if s.memory else "off", s.status]
            + metrics
        )
    with open(out_dir / "report.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(REPORT_HEADER) + "\n")
        for row in cell_rows:
            fh.write(",".join(row) + "\n")

    pair_rows = [
        [p.algorithm, p.problem, _fmt(p.standard_mean), _fmt(p.memory_mean),
         _fmt(p.improvement_pct)]
        for p in report.improvements
    ]
    with open(out_dir / "improvements.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(IMPROVEMENT_HEADER) + "\n")
        for row in pair_rows:
            fh.write(",".join(row) + "\n")

    lines = ["Per-cell statistics", ""]
    lines += _render_table(REPORT_HEADER, cell_rows)
    lines += ["", "Memory vs standard (positive % = memory better)", ""]
    if pair_rows:
        lines += _render_table(IMPROVEMENT_HEADER, pair_rows)
        lines += [
            "",
            f"mean improvement: {_fmt(report.mean_improvement)}%",
            f"max improvement:  {_fmt(report.max_improvement)}%",
        ]
    else:
        lines.append("(no complete memory/standard pairs)")
    with open(out_dir / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return report


def run_experiment(
    plan: ExperimentPlan, out_dir: str | Path, workers: int = 1
) -> ComparisonReport:
    """Run the whole grid and write all files.

    A failing cell is recorded (``error.txt`` in its directory, status
    ``failed`` in the report) without affecting the other cells.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(plan, out_dir)
    cells = plan.cells()
    for cell in cells:
        cell_dir = out_dir / cell.label
        cell_dir.mkdir(parents=True, exist_ok=True)
        for stale in ("stats.csv", "error.txt"):
            try:
                (cell_dir / stale).unlink()
            except FileNotFoundError:
                pass
        try:
            run_cell(cell, plan, out_dir, workers=workers)
        except Exception as exc:
            with open(cell_dir / "error.txt", "w", encoding="utf-8") as fh:
                fh.write(f"{type(exc).__name__}: {exc}\n")
    return write_report(out_dir, cells)


def emit_plot_data(paths, stream) -> None:
    """Merge history files into one long-format table.

    ``cell`` is the parent directory name of each file, ``run`` the numeric
    suffix of its stem.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValueError("no history files to merge")
    stream.write(",".join(PLOT_HEADER) + "\n")
    for path in sorted(paths, key=str):
        cell = path.parent.name
        stem_tail = path.stem.rsplit("_", 1)[-1]
        run_id = int(stem_tail) if stem_tail.isdigit() else 0
        for iteration, best, nfes in read_history_csv(path):
            stream.write(f"{cell},{run_id},{iteration},{_fmt(best)},{nfes}\n")
