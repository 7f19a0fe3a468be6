"""Truss benchmark geometry files and their design-variable mapping.

A geometry file is a JSON document with these keys (all fixed quantities in
SI units; design variables may use scaled units declared per variable):

``name``            short identifier.
``provenance``      list of free-text lines about where the data comes from.
``material``        ``{"young_modulus": Pa, "density": kg/m^3}``.
``nodes``           list of ``{"id", "x", "y"}``; ids are arbitrary ints.
``elements``        list of ``{"id", "nodes": [a, b], "group": str}``.
``supports``        list of ``{"node", "fix_x", "fix_y"}``.
``loads``           list of ``{"node", "fx", "fy"}`` in newtons.
``masses``          list of ``{"node", "mass"}`` in kilograms.
``fixed_areas``     list of ``{"group", "area"}`` in m^2 for groups that are
                    not design variables.
``size_variables``  ordered list of ``{"name", "groups", "lower", "upper",
                    "unit_scale", "grid"}``.  The design value times
                    ``unit_scale`` is the member area in m^2; ``grid`` is
                    either null or ``{"start", "stop", "step"}`` in design
                    units.
``shape_variables`` ordered list of ``{"name", "lower", "upper",
                    "unit_scale", "targets"}`` where each target is
                    ``{"node", "axis", "coeff", "datum"}``.  The node
                    coordinate becomes ``datum + coeff * unit_scale * value``,
                    which expresses linked coordinates such as mirrored pairs
                    (coeff -1) or shared offsets.
``constraints``     ``{"stress_limit": Pa|null, "displacement_limits":
                    [{"node": id|"all", "axis", "limit"}], "frequency_bounds":
                    [Hz, ...]}``.

The design vector is the concatenation of size variables then shape
variables, in file order.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import ConfigError, Problem, SearchSpace, snap_to_grid
from ..fem import (
    AnalysisError,
    Material,
    TrussModel,
    displacement_violation,
    frequency_violations,
    natural_frequencies,
    solve_static,
    stress_violations,
)

DATA_DIR_ENV = "ELITOPT_DATA_DIR"
DEGENERATE_LENGTH = 1e-6  # m; shorter members mark the design infeasible
DEGENERATE_VIOLATION = 1e3

_AXES = {"x": 0, "y": 1}


def data_dir(override: str | Path | None = None) -> Path:
    """Directory holding the bundled geometry files; the environment
    variable named in ``DATA_DIR_ENV`` overrides it."""
    if override is not None:
        return Path(override)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "data"


@dataclass(frozen=True)
class SizeVariable:
    name: str
    member_indices: np.ndarray
    lower: float
    upper: float
    unit_scale: float
    grid: np.ndarray | None


@dataclass(frozen=True)
class ShapeTarget:
    node: int
    axis: int
    coeff: float
    datum: float


@dataclass(frozen=True)
class ShapeVariable:
    name: str
    lower: float
    upper: float
    unit_scale: float
    targets: tuple


class TrussDesign:
    """A parsed geometry file plus the design-vector mapping."""

    def __init__(self, doc: dict):
        self.name = doc["name"]
        self.provenance = list(doc.get("provenance", []))
        self.material = Material(
            young_modulus=float(doc["material"]["young_modulus"]),
            density=float(doc["material"]["density"]),
        )

        ids = [int(n["id"]) for n in doc["nodes"]]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate node id")
        self._id_to_index = {nid: k for k, nid in enumerate(ids)}
        self.base_nodes = np.array(
            [[float(n["x"]), float(n["y"])] for n in doc["nodes"]]
        )
        n = len(ids)

        self.members = np.array(
            [
                [self._id_to_index[int(e["nodes"][0])], self._id_to_index[int(e["nodes"][1])]]
                for e in doc["elements"]
            ],
            dtype=int,
        )
        self.member_groups = [str(e["group"]) for e in doc["elements"]]

        self.fixed = np.zeros((n, 2), dtype=bool)
        for s in doc.get("supports", []):
            k = self._id_to_index[int(s["node"])]
            self.fixed[k, 0] = bool(s.get("fix_x", False))
            self.fixed[k, 1] = bool(s.get("fix_y", False))

        self.loads = np.zeros((n, 2))
        for l in doc.get("loads", []):
            k = self._id_to_index[int(l["node"])]
            self.loads[k, 0] += float(l.get("fx", 0.0))
            self.loads[k, 1] += float(l.get("fy", 0.0))

        self.masses = np.zeros(n)
        for m in doc.get("masses", []):
            self.masses[self._id_to_index[int(m["node"])]] += float(m["mass"])

        group_members: dict[str, list[int]] = {}
        for idx, g in enumerate(self.member_groups):
            group_members.setdefault(g, []).append(idx)

        self.base_areas = np.full(self.members.shape[0], np.nan)
        assigned = set()
        for fa in doc.get("fixed_areas", []):
            g = str(fa["group"])
            if g not in group_members:
                raise ConfigError(f"fixed area for unknown group {g!r}")
            self.base_areas[group_members[g]] = float(fa["area"])
            assigned.add(g)

        self.size_variables: list[SizeVariable] = []
        for sv in doc.get("size_variables", []):
            groups = [str(g) for g in sv["groups"]]
            idx: list[int] = []
            for g in groups:
                if g not in group_members:
                    raise ConfigError(f"size variable {sv['name']!r}: unknown group {g!r}")
                if g in assigned:
                    raise ConfigError(f"group {g!r} assigned twice")
                assigned.add(g)
                idx.extend(group_members[g])
            grid = None
            if sv.get("grid"):
                spec = sv["grid"]
                count = int(round((spec["stop"] - spec["start"]) / spec["step"])) + 1
                grid = np.round(
                    spec["start"] + spec["step"] * np.arange(count), decimals=12
                )
            self.size_variables.append(
                SizeVariable(
                    name=str(sv["name"]),
                    member_indices=np.array(idx, dtype=int),
                    lower=float(sv["lower"]),
                    upper=float(sv["upper"]),
                    unit_scale=float(sv.get("unit_scale", 1.0)),
                    grid=grid,
                )
            )
        missing = sorted(set(group_members) - assigned)
        if missing:
            raise ConfigError(f"groups without an area source: {missing}")

        self.shape_variables: list[ShapeVariable] = []
        for sv in doc.get("shape_variables", []):
            targets = tuple(
                ShapeTarget(
                    node=self._id_to_index[int(t["node"])],
                    axis=_AXES[t["axis"]],
                    coeff=float(t.get("coeff", 1.0)),
                    datum=float(t.get("datum", 0.0)),
                )
                for t in sv["targets"]
            )
            if not targets:
                raise ConfigError(f"shape variable {sv['name']!r} has no targets")
            self.shape_variables.append(
                ShapeVariable(
                    name=str(sv["name"]),
                    lower=float(sv["lower"]),
                    upper=float(sv["upper"]),
                    unit_scale=float(sv.get("unit_scale", 1.0)),
                    targets=targets,
                )
            )

        c = doc.get("constraints", {})
        self.stress_limit = c.get("stress_limit")
        self.frequency_bounds = np.array(c.get("frequency_bounds", []), dtype=float)
        self.displacement_limits: list[tuple[int | None, int, float]] = []
        for dl in c.get("displacement_limits", []):
            axis = _AXES[dl["axis"]]
            limit = float(dl["limit"])
            if dl["node"] == "all":
                self.displacement_limits.append((None, axis, limit))
            else:
                self.displacement_limits.append(
                    (self._id_to_index[int(dl["node"])], axis, limit)
                )

    @classmethod
    def from_file(cls, path: str | Path) -> "TrussDesign":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    # -- design-vector mapping ------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.size_variables) + len(self.shape_variables)

    def search_space(self) -> SearchSpace:
        lower = [v.lower for v in self.size_variables] + [
            v.lower for v in self.shape_variables
        ]
        upper = [v.upper for v in self.size_variables] + [
            v.upper for v in self.shape_variables
        ]
        grids = [v.grid for v in self.size_variables] + [
            None for _ in self.shape_variables
        ]
        names = tuple(
            v.name for v in self.size_variables + self.shape_variables
        )
        if all(g is None for g in grids):
            grids = None
        else:
            grids = tuple(grids)
        return SearchSpace(
            lower=np.array(lower), upper=np.array(upper), grids=grids, names=names
        )

    def expand(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Design vector -> (node coordinates, member areas), both in SI."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"design vector has shape {x.shape}, expected ({self.dim},)")
        areas = self.base_areas.copy()
        for v, value in zip(self.size_variables, x):
            areas[v.member_indices] = v.unit_scale * value
        coords = self.base_nodes.copy()
        ns = len(self.size_variables)
        for v, value in zip(self.shape_variables, x[ns:]):
            for t in v.targets:
                coords[t.node, t.axis] = t.datum + t.coeff * v.unit_scale * value
        return coords, areas

    def contract(self, coords: np.ndarray, areas: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`expand`: read the design vector back out of full
        per-member areas and per-node coordinates."""
        x = np.empty(self.dim)
        for k, v in enumerate(self.size_variables):
            x[k] = areas[v.member_indices[0]] / v.unit_scale
        ns = len(self.size_variables)
        for k, v in enumerate(self.shape_variables):
            t = v.targets[0]
            x[ns + k] = (coords[t.node, t.axis] - t.datum) / (t.coeff * v.unit_scale)
        return x

    def model(self, x: np.ndarray) -> TrussModel:
        coords, areas = self.expand(x)
        return TrussModel(
            nodes=coords,
            members=self.members,
            areas=areas,
            material=self.material,
            fixed=self.fixed,
            loads=self.loads,
            masses=self.masses,
        )

    # -- evaluation ------------------------------------------------------

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective (structural mass, kg) and normalized violation vector.

        Gridded variables are snapped to their grid before analysis, so the
        optimizer may move in continuous space.  Near-zero member lengths and
        mechanisms yield a finite objective with one large violation instead
        of aborting the run.
        """
        x = snap_to_grid(np.asarray(x, dtype=float), self.search_space())
        coords, areas = self.expand(x)
        delta = coords[self.members[:, 1]] - coords[self.members[:, 0]]
        lengths = np.linalg.norm(delta, axis=1)
        weight = float(self.material.density * np.sum(areas * lengths))
        if np.min(lengths) < DEGENERATE_LENGTH:
            return weight, np.array([DEGENERATE_VIOLATION])
        model = TrussModel(
            nodes=coords,
            members=self.members,
            areas=areas,
            material=self.material,
            fixed=self.fixed,
            loads=self.loads,
            masses=self.masses,
        )
        violations: list[float] = []
        try:
            if self.stress_limit or self.displacement_limits:
                res = solve_static(model)
                if self.stress_limit:
                    violations.extend(
                        stress_violations(res.stresses, float(self.stress_limit))
                    )
                for node, axis, limit in self.displacement_limits:
                    if node is None:
                        for k in range(model.n_nodes):
                            violations.append(
                                displacement_violation(res.displacements[k, axis], limit)
                            )
                    else:
                        violations.append(
                            displacement_violation(res.displacements[node, axis], limit)
                        )
            if self.frequency_bounds.size:
                freqs = natural_frequencies(model, count=self.frequency_bounds.size)
                violations.extend(frequency_violations(freqs, self.frequency_bounds))
        except AnalysisError:
            return weight, np.array([DEGENERATE_VIOLATION])
        return weight, np.array(violations, dtype=float)

    def problem(self, name: str | None = None, description: str = "") -> Problem:
        design = self
        return Problem(
            name=name or self.name,
            space=self.search_space(),
            evaluate=design.evaluate,
            description=description,
        )
