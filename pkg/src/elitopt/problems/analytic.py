"""Unconstrained analytic test functions on [-5.12, 5.12]^dim."""

from __future__ import annotations

import numpy as np

from ..core import Problem, SearchSpace

BOUND = 5.12


def sphere(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(
        np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2)
    )


# (function, global minimum value, minimizer coordinate per axis)
FUNCTIONS = {
    "sphere": (sphere, 0.0, 0.0),
    "rastrigin": (rastrigin, 0.0, 0.0),
    "rosenbrock": (rosenbrock, 0.0, 1.0),
}

_NO_VIOLATIONS = np.empty(0)


def analytic_problem(name: str, dim: int = 10) -> Problem:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    func, minimum, argmin = FUNCTIONS[name]

    def evaluate(x: np.ndarray) -> tuple[float, np.ndarray]:
        return func(x), _NO_VIOLATIONS

    space = SearchSpace(lower=np.full(dim, -BOUND), upper=np.full(dim, BOUND))
    return Problem(
        name=name,
        space=space,
        evaluate=evaluate,
        description=f"{name} function, {dim} variables, minimum {minimum} at "
        f"all coordinates {argmin}",
    )
