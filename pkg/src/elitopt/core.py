"""Core machinery shared by all optimizers.

This module holds the pieces that do not depend on any particular search
strategy: bounded (optionally gridded) search spaces, evaluated candidates
with multiplicative constraint penalties, the bounded elite memory that can
be bolted onto any population algorithm, the seeded run loop with strict
evaluation accounting, and replicate statistics.
"""

from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration value violates its contract."""


class EvaluationError(RuntimeError):
    """Raised when an objective evaluation returns an unusable value."""


class AccountingError(RuntimeError):
    """Raised when an algorithm consumes a different number of evaluations
    per iteration than it declares."""


# ---------------------------------------------------------------------------
# Search space


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box, optionally with a discrete value grid per variable.

    Parameters
    ----------
    lower, upper : array_like
        Per-variable bounds, same length, ``lower[i] <= upper[i]``.
    grids : sequence of (array_like or None), optional
        For each variable either ``None`` (continuous) or a sorted list of
        admissible values lying inside the bounds.
    names : tuple of str, optional
        Variable names for reporting.
    """

    lower: np.ndarray
    upper: np.ndarray
    grids: tuple = None
    names: tuple = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or upper.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError("bounds must be 1-d arrays of equal length")
        if lower.size == 0:
            raise ConfigError("search space needs at least one variable")
        if np.any(lower > upper):
            raise ConfigError("lower bound exceeds upper bound")
        if self.grids is not None:
            if len(self.grids) != lower.size:
                raise ConfigError("grids length must match dimension")
            cleaned = []
            for j, g in enumerate(self.grids):
                if g is None:
                    cleaned.append(None)
                    continue
                arr = np.asarray(g, dtype=float)
                if arr.size == 0:
                    raise ConfigError(f"variable {j}: empty grid")
                if np.any(np.diff(arr) <= 0):
                    raise ConfigError(f"variable {j}: grid must be strictly increasing")
                if arr[0] < lower[j] or arr[-1] > upper[j]:
                    raise ConfigError(f"variable {j}: grid leaves the bounds")
                cleaned.append(arr)
            object.__setattr__(self, "grids", tuple(cleaned))
        if self.names is not None and len(self.names) != lower.size:
            raise ConfigError("names length must match dimension")

    @property
    def dim(self) -> int:
        return self.lower.size

    def width_sum(self) -> float:
        """Sum of per-variable bound widths."""
        return float(np.sum(self.upper - self.lower))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniformly sample ``n`` positions, ``lb + u * (ub - lb)`` per axis."""
        u = rng.random((n, self.dim))
        return self.lower + u * (self.upper - self.lower)


def clamp_to_bounds(position: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Project a position onto the box; idempotent, in-bounds input unchanged."""
    position = np.asarray(position, dtype=float)
    if position.shape != (space.dim,):
        raise ValueError(
            f"position has shape {position.shape}, expected ({space.dim},)"
        )
    return np.clip(position, space.lower, space.upper)


def snap_to_grid(position: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Round gridded variables to the nearest admissible value.

    Ties resolve to the smaller grid value.  Variables without a grid pass
    through unchanged.
    """
    position = np.asarray(position, dtype=float)
    if position.shape != (space.dim,):
        raise ValueError(
            f"position has shape {position.shape}, expected ({space.dim},)"
        )
    if space.grids is None:
        return position.copy()
    out = position.copy()
    for j, grid in enumerate(space.grids):
        if grid is None:
            continue
        x = out[j]
        idx = int(np.searchsorted(grid, x))
        if idx == 0:
            out[j] = grid[0]
        elif idx == grid.size:
            out[j] = grid[-1]
        else:
            lo, hi = grid[idx - 1], grid[idx]
            # <= keeps the smaller value on an exact tie
            out[j] = lo if x - lo <= hi - x else hi
    return out


# ---------------------------------------------------------------------------
# Candidates and penalties


@dataclass
class Candidate:
    """An evaluated design: raw objective plus penalized fitness."""

    position: np.ndarray
    objective: float
    violations: np.ndarray
    fitness: float

    def clone(self) -> "Candidate":
        return Candidate(
            position=self.position.copy(),
            objective=self.objective,
            violations=self.violations.copy(),
            fitness=self.fitness,
        )


@dataclass(frozen=True)
class PenaltyParams:
    """Multiplicative penalty: ``objective * (1 + scale * sum(v)) ** exponent``."""

    scale: float = 1.0
    exponent: float = 2.0

    def __post_init__(self):
        if self.scale < 0:
            raise ConfigError("penalty scale must be >= 0")
        if self.exponent < 1:
            raise ConfigError("penalty exponent must be >= 1")


def penalized_fitness(
    objective: float, violations: Sequence[float], params: PenaltyParams
) -> float:
    """Fold constraint violations into a single minimization fitness.

    Feasible candidates (all violations zero) keep their raw objective.
    """
    v = np.asarray(violations, dtype=float)
    if v.size and float(np.min(v)) < 0:
        raise ValueError("violations must be non-negative")
    total = float(np.sum(v))
    return float(objective) * (1.0 + params.scale * total) ** params.exponent


# ---------------------------------------------------------------------------
# Elite memory


class EliteMemory:
    """Bounded, deduplicated buffer of the best candidates seen so far.

    Entries are kept sorted ascending by fitness; among equal fitness the
    earlier arrival ranks first and is never displaced by a later tie.
    Candidates whose position exactly matches a stored entry are rejected,
    so the buffer never holds duplicate designs.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("memory capacity must be >= 1")
        self.capacity = int(capacity)
        self._entries: list[Candidate] = []

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[Candidate]:
        """Stored candidates, best first.  Treat as read-only."""
        return list(self._entries)

    @property
    def best(self) -> Candidate | None:
        return self._entries[0] if self._entries else None

    def offer(self, candidate: Candidate) -> bool:
        """Consider one evaluated candidate; return True if it was admitted."""
        for e in self._entries:
            if np.array_equal(e.position, candidate.position):
                return False
        if len(self._entries) >= self.capacity:
            worst = self._entries[-1]
            # strict < : an equal-fitness newcomer loses to the incumbent
            if not candidate.fitness < worst.fitness:
                return False
            self._entries.pop()
        keys = [e.fitness for e in self._entries]
        idx = bisect.bisect_right(keys, candidate.fitness)
        self._entries.insert(idx, candidate.clone())
        return True

    def inject(self, population: list[Candidate]) -> list[Candidate]:
        """Replace the worst members of ``population`` with copies of the
        stored elites.  Population size is preserved; ties among equally bad
        members are broken by index order."""
        if not self._entries:
            return list(population)
        m = len(self._entries)
        if m > len(population):
            raise ValueError("memory holds more entries than the population")
        best_in = min(c.fitness for c in population)
        if m == len(population) and self._entries[0].fitness > best_in:
            # cannot happen when the memory was fed from this population's
            # evaluations; a full replacement by strictly worse entries would
            # discard the population's best
            raise ValueError("memory entries are all worse than the population best")
        order = sorted(range(len(population)), key=lambda i: (population[i].fitness, i))
        out = list(population)
        worst_slots = order[len(population) - m:]
        # the very worst slot receives the best elite
        for slot, elite in zip(reversed(worst_slots), self._entries):
            out[slot] = elite.clone()
        return out


def memory_capacity(population_size: int, fraction: float) -> int:
    """Elite buffer size: ``floor(fraction * population_size)``, at least 1."""
    if population_size < 1:
        raise ConfigError("population size must be >= 1")
    if not 0 < fraction <= 1:
        raise ConfigError("memory fraction must lie in (0, 1]")
    return max(1, int(math.floor(fraction * population_size)))


# ---------------------------------------------------------------------------
# Problems


@dataclass(frozen=True)
class Problem:
    """A minimization task: a search space plus a pure evaluation function.

    ``evaluate(position)`` returns ``(objective, violations)`` where
    ``violations`` is a non-negative vector, one entry per constraint
    (empty for unconstrained problems).  Evaluation must be deterministic.
    """

    name: str
    space: SearchSpace
    evaluate: Callable[[np.ndarray], tuple[float, np.ndarray]]
    description: str = ""


# ---------------------------------------------------------------------------
# Run configuration and results


@dataclass(frozen=True)
class RunConfig:
    population_size: int
    max_iterations: int
    memory_enabled: bool = True
    memory_fraction: float = 0.2
    seed: int = 0
    replicate_count: int = 20
    penalty: PenaltyParams = field(default_factory=PenaltyParams)

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigError("population_size must be >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.replicate_count < 1:
            raise ConfigError("replicate_count must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.memory_enabled:
            # raises ConfigError when the fraction cannot yield a buffer
            memory_capacity(self.population_size, self.memory_fraction)


@dataclass
class RunResult:
    """Outcome of a single seeded run.

    ``history`` holds one ``(iteration, best_so_far, nfes)`` triple for the
    initial population (iteration 0) and for every iteration after it.
    """

    best: Candidate
    history: list[tuple[int, float, int]]
    nfes: int


class RunContext:
    """Per-run evaluation funnel: counts evaluations, applies the penalty,
    feeds the elite memory and tracks the best candidate ever seen."""

    def __init__(
        self,
        problem: Problem,
        penalty: PenaltyParams,
        memory: EliteMemory | None = None,
    ):
        self.problem = problem
        self.penalty = penalty
        self.memory = memory
        self.nfes = 0
        self.best: Candidate | None = None

    def evaluate(self, position: np.ndarray) -> Candidate:
        objective, violations = self.problem.evaluate(position)
        if not math.isfinite(objective):
            raise EvaluationError(
                f"non-finite objective {objective!r} at position {position!r}"
            )
        violations = np.asarray(violations, dtype=float)
        fitness = penalized_fitness(objective, violations, self.penalty)
        self.nfes += 1
        candidate = Candidate(
            position=np.asarray(position, dtype=float).copy(),
            objective=float(objective),
            violations=violations,
            fitness=fitness,
        )
        if self.memory is not None:
            self.memory.offer(candidate)
        if self.best is None or candidate.fitness < self.best.fitness:
            self.best = candidate.clone()
        return candidate


def run(algorithm, problem: Problem, config: RunConfig, rng=None) -> RunResult:
    """Execute one seeded optimization run.

    The loop per iteration: the algorithm advances the population (evaluating
    through the shared context, which also feeds the elite memory), then the
    elites are injected over the worst members, then the history is recorded.
    Algorithms that time their own elite exchange receive the memory instead
    and the loop does not inject a second time.

    Identical ``(seed, config, problem)`` triples give bit-identical results.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    memory = None
    if config.memory_enabled:
        memory = EliteMemory(
            memory_capacity(config.population_size, config.memory_fraction)
        )
    ctx = RunContext(problem, config.penalty, memory)
    population, state = algorithm.init_population(
        ctx, problem.space, config.population_size, rng
    )
    if ctx.nfes != config.population_size:
        raise AccountingError(
            f"init evaluated {ctx.nfes} candidates, expected {config.population_size}"
        )
    history = [(0, ctx.best.fitness, ctx.nfes)]
    declared = algorithm.evals_per_iteration(config.population_size)
    handles_injection = getattr(algorithm, "handles_elite_injection", False)
    for g in range(1, config.max_iterations + 1):
        before = ctx.nfes
        population = algorithm.step(
            population,
            state,
            ctx,
            problem.space,
            g,
            config.max_iterations,
            rng,
            memory if handles_injection else None,
        )
        used = ctx.nfes - before
        if used != declared:
            raise AccountingError(
                f"iteration {g}: {used} evaluations used, {declared} declared"
            )
        if memory is not None and not handles_injection:
            population = memory.inject(population)
        history.append((g, ctx.best.fitness, ctx.nfes))
    return RunResult(best=ctx.best.clone(), history=history, nfes=ctx.nfes)


def replicate_seed(base_seed: int, replicate: int) -> int:
    """Seed of replicate ``replicate`` for a run configured with ``base_seed``."""
    return (int(base_seed) + int(replicate)) % 2**64


def run_replicates(
    algorithm, problem: Problem, config: RunConfig, replicates: int | None = None
) -> list[RunResult]:
    """Run ``replicates`` independent repeats with per-replicate seeds derived
    from the configured seed by offsetting the replicate index."""
    n = config.replicate_count if replicates is None else int(replicates)
    if n < 1:
        raise ConfigError("replicates must be >= 1")
    results = []
    for r in range(n):
        cfg = dataclasses.replace(config, seed=replicate_seed(config.seed, r))
        results.append(run(algorithm, problem, cfg))
    return results


# ---------------------------------------------------------------------------
# Replicate statistics


@dataclass(frozen=True)
class StatsRecord:
    best: float
    mean: float
    worst: float
    std: float
    nfes_median: float
    runs: int


def replicate_stats(results: Sequence[RunResult]) -> StatsRecord:
    """Summary over final best fitness values of a replicate batch.

    Standard deviation is the sample estimate (N-1 denominator), defined as
    0.0 for a single run.
    """
    if not results:
        raise ValueError("no results to summarize")
    finals = np.array([r.best.fitness for r in results], dtype=float)
    n = finals.size
    std = float(np.std(finals, ddof=1)) if n > 1 else 0.0
    return StatsRecord(
        best=float(np.min(finals)),
        mean=float(np.mean(finals)),
        worst=float(np.max(finals)),
        std=std,
        nfes_median=float(np.median([r.nfes for r in results])),
        runs=n,
    )
