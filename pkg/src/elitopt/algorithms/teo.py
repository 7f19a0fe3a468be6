"""Thermal exchange optimization.

Agents are temperature vectors.  Each iteration the population is sorted and
split in half: the better half acts as cooling environments for the worse
half, which relaxes toward its (randomly cooled) environment at a rate set
by its own cost.  Only the cooled half is re-evaluated, so an iteration
costs half a population of evaluations.  When the elite memory is active its
entries overwrite the worst agents at the start of the step, before sorting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Candidate, ConfigError, SearchSpace, clamp_to_bounds

BETA_DELTA = 1e-10  # guard for the cost ratio on flat populations


@dataclass(frozen=True)
class TeoParams:
    """c1 toggles the time-independent part of environmental cooling, c2 the
    time-decaying part (both chosen from {0, 1}); jump_probability is the
    chance of re-drawing one variable of a cooled agent."""

    c1: int = 1
    c2: int = 1
    jump_probability: float = 0.3

    def __post_init__(self):
        if self.c1 not in (0, 1) or self.c2 not in (0, 1):
            raise ConfigError("c1 and c2 must be 0 or 1")
        if not 0 <= self.jump_probability <= 1:
            raise ConfigError("jump_probability must lie in [0, 1]")


def exchange_ratio(cost: float, worst_cost: float) -> float:
    """Cost ratio steering how fast an agent approaches its environment.

    Costs are expected pre-shifted so the best is 0; lower cost means a
    smaller ratio and therefore a smaller position change.
    """
    if worst_cost == 0:
        raise ValueError("worst_cost must be nonzero")
    return cost / worst_cost


def time_fraction(iteration: int, max_iterations: int) -> float:
    """Elapsed fraction of the run."""
    if max_iterations <= 0:
        raise ValueError("max_iterations must be positive")
    return iteration / max_iterations


def cooled_environment(
    env: np.ndarray,
    frac: float,
    params: TeoParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Randomly damp an environment temperature, one fresh draw per
    component: ``(1 - (c1 + c2 * (1 - frac)) * rand) * env``."""
    r = rng.random(env.size)
    return (1.0 - (params.c1 + params.c2 * (1.0 - frac)) * r) * env


def updated_temperature(
    t_old: np.ndarray, t_env: np.ndarray, beta: float, frac: float
) -> np.ndarray:
    """Exponential relaxation toward the environment.  The result lies on
    the segment between the old temperature and the environment."""
    return t_env + (t_old - t_env) * np.exp(-beta * frac)


def random_component_jump(
    position: np.ndarray,
    jump_probability: float,
    space: SearchSpace,
    rng: np.random.Generator,
) -> np.ndarray:
    """With probability ``jump_probability`` re-draw one uniformly chosen
    variable inside its bounds; at most one component changes."""
    out = position.copy()
    if rng.random() < jump_probability:
        j = int(rng.integers(out.size))
        out[j] = space.lower[j] + rng.random() * (space.upper[j] - space.lower[j])
    return out


class Teo:
    """Thermal exchange optimizer.  Requires an even population."""

    name = "teo"
    handles_elite_injection = True

    def __init__(self, params: TeoParams | None = None):
        self.params = params or TeoParams()

    def evals_per_iteration(self, population_size: int) -> int:
        return population_size // 2

    def init_population(self, ctx, space: SearchSpace, n: int, rng):
        if n < 2 or n % 2 != 0:
            raise ConfigError("population size must be even and >= 2")
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
        if memory is not None:
            population = memory.inject(population)
        n = len(population)
        half = n // 2
        order = sorted(range(n), key=lambda i: (population[i].fitness, i))
        ranked = [population[i] for i in order]
        env_half = ranked[:half]
        cool_half = ranked[half:]

        best = ranked[0].fitness
        worst = ranked[-1].fitness
        denom = (worst - best) + BETA_DELTA
        frac = time_fraction(iteration, max_iterations)

        new_cool = []
        for k in range(half):
            agent = cool_half[k]
            beta = (agent.fitness - best) / denom
            env = cooled_environment(env_half[k].position, frac, params, rng)
            pos = updated_temperature(agent.position, env, beta, frac)
            pos = random_component_jump(pos, params.jump_probability, space, rng)
            new_cool.append(ctx.evaluate(clamp_to_bounds(pos, space)))

        return [c for c in env_half] + new_cool
