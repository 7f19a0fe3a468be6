"""Optimizer registry."""

from __future__ import annotations

from .bbo import Bbo, BboParams
from .kha import Kha, KhaParams
from .teo import Teo, TeoParams

ALGORITHMS = {
    "bbo": (Bbo, BboParams),
    "kha": (Kha, KhaParams),
    "teo": (Teo, TeoParams),
}


def algorithm_names() -> list[str]:
    return sorted(ALGORITHMS)


def get_algorithm(name: str, params: dict | None = None):
    """Instantiate an optimizer by name with optional parameter overrides."""
    try:
        cls, params_cls = ALGORITHMS[name]
    except KeyError:
        raise KeyError(
            f"unknown algorithm {name!r}; available: {', '.join(algorithm_names())}"
        ) from None
    return cls(params_cls(**(params or {})))


__all__ = [
    "ALGORITHMS",
    "Bbo",
    "BboParams",
    "Kha",
    "KhaParams",
    "Teo",
    "TeoParams",
    "algorithm_names",
    "get_algorithm",
]
