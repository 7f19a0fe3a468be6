"""Biogeography-based optimization.

Habitats (candidate designs) exchange suitability index variables through
immigration/emigration rates tied to their fitness rank, then mutate with a
rate inversely proportional to the species-count probability.  The best
habitats of the previous iteration replace the worst of the new one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Candidate, ConfigError, SearchSpace, clamp_to_bounds


@dataclass(frozen=True)
class BboParams:
    """max_immigration and max_emigration are the rate ceilings (I and E),
    mutation_max the mutation probability ceiling, elite_keep the number of
    habitats preserved across an iteration."""

    max_immigration: float = 1.0
    max_emigration: float = 1.0
    mutation_max: float = 0.01
    elite_keep: int = 2

    def __post_init__(self):
        if self.max_immigration < 0 or self.max_emigration < 0:
            raise ConfigError("rate ceilings must be >= 0")
        if not 0 <= self.mutation_max <= 1:
            raise ConfigError("mutation_max must lie in [0, 1]")
        if self.elite_keep < 0:
            raise ConfigError("elite_keep must be >= 0")


def species_count(rank: int, n: int) -> int:
    """Rank-linear species model: the best habitat (rank 0) is the richest."""
    if not 0 <= rank < n:
        raise ValueError("rank out of range")
    return n - 1 - rank

def migration_rates(rank: int, n: int, params: BboParams) -> tuple[float, float]:
    """Immigration and emigration rate of the habitat at a fitness rank.

    With species count ``s`` out of ``n``: immigration ``I * (1 - s/n)``,
    emigration ``E * s/n``.  Good habitats emigrate, poor ones immigrate.
    """
    s = species_count(rank, n)
    lam = params.max_immigration * (1.0 - s / n)
    mu = params.max_emigration * (s / n)
    return lam, mu


def species_probability(rank: int, n: int) -> float:
    """Stand-in species-count probability: piecewise linear in the species
    count with its peak (1.0) at the median count and 0 at the extremes, so
    both the very best and the very worst habitats mutate the most."""
    s = species_count(rank, n)
    mid = (n - 1) / 2.0
    if mid == 0:
        return 1.0
    return 1.0 - abs(s - mid) / mid


def mutation_rate(p: float, p_max: float, params: BboParams) -> float:
    """Mutation probability ``m_max * (1 - p / p_max)``."""
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    if p < 0 or p > p_max:
        raise ValueError("species probability must lie in [0, p_max]")
    return params.mutation_max * (1.0 - p / p_max)


def roulette_pick(weights: np.ndarray, skip: int, rng: np.random.Generator) -> int:
    """Pick an index proportionally to ``weights``, never returning ``skip``.

    All-zero weights degrade to a uniform choice.  Exactly one draw from
    ``rng`` is consumed either way.
    """
    w = np.asarray(weights, dtype=float).copy()
    w[skip] = 0.0
    total = w.sum()
    if total <= 0:
        candidates = [i for i in range(w.size) if i != skip]
        return candidates[int(rng.integers(len(candidates)))]
    u = rng.random() * total
    return int(np.searchsorted(np.cumsum(w), u, side="right"))


def migrate(
    positions: np.ndarray,
    lambdas: np.ndarray,
    mus: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per habitat and per variable: with probability lambda_i replace the
    variable by the same variable of an emigration-selected donor.

    Donors always come from the pre-migration snapshot.  A single-habitat
    population is returned unchanged (no donor exists).
    """
    n, dim = positions.shape
    out = positions.copy()
    if n < 2:
        return out
    for i in range(n):
        coins = rng.random(dim)
        for j in range(dim):
            if coins[j] < lambdas[i]:
                donor = roulette_pick(mus, i, rng)
                out[i, j] = positions[donor, j]
    return out


def mutate(
    position: np.ndarray, rate: float, space: SearchSpace, rng: np.random.Generator
) -> np.ndarray:
    """Resample each variable uniformly within its bounds with probability
    ``rate``.  Coins are drawn for every variable first, then one value per
    mutating variable, in variable order."""
    out = np.asarray(position, dtype=float).copy()
    coins = rng.random(out.size)
    for j in range(out.size):
        if coins[j] < rate:
            out[j] = space.lower[j] + rng.random() * (space.upper[j] - space.lower[j])
    return out


class Bbo:
    """Biogeography-based optimizer with rank-linear migration rates."""

    name = "bbo"
    handles_elite_injection = False

    def __init__(self, params: BboParams | None = None):
        self.params = params or BboParams()

    def evals_per_iteration(self, population_size: int) -> int:
        return population_size

    def init_population(self, ctx, space: SearchSpace, n: int, rng):
        positions = space.sample(n, rng)
        population = [ctx.evaluate(p) for p in positions]
        return population, None

    def step(
        self,
        population: list[Candidate],
        state,
        ctx,
        space: SearchSpace,
        iteration: int,
        max_iterations: int,
        rng: np.random.Generator,
        memory=None,
    ) -> list[Candidate]:
        params = self.params
        n = len(population)
        order = sorted(range(n), key=lambda i: (population[i].fitness, i))
        ranked = [population[i] for i in order]
        elites = [c.clone() for c in ranked[: params.elite_keep]]

        lambdas = np.empty(n)
        mus = np.empty(n)
        for rank in range(n):
            lambdas[rank], mus[rank] = migration_rates(rank, n, params)

        positions = np.array([c.position for c in ranked])
        migrated = migrate(positions, lambdas, mus, rng)

        p_max = 1.0
        for rank in range(params.elite_keep, n):
            p = species_probability(rank, n)
            rate = mutation_rate(p, p_max, params)
            if rate > 0:
                migrated[rank] = mutate(migrated[rank], rate, space, rng)

        new_population = [
            ctx.evaluate(clamp_to_bounds(migrated[rank], space)) for rank in range(n)
        ]
        new_population.sort(key=lambda c: c.fitness)
        if params.elite_keep > 0:
            keep = min(params.elite_keep, n)
            new_population[n - keep:] = [e.clone() for e in elites[:keep]]
            new_population.sort(key=lambda c: c.fitness)
        return new_population
