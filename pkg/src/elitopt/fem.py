"""Linear-elastic analysis of 2D pin-jointed trusses.

Small dense direct-stiffness solver: two translational degrees of freedom
per node, axial bar elements, static displacements and stresses, and natural
frequencies from a lumped (diagonal) mass matrix.  Sign convention: tension
positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Raised when a truss model is not analyzable as posed."""


class AnalysisError(RuntimeError):
    """Raised when the reduced system is singular (a mechanism)."""


@dataclass(frozen=True)
class Material:
    young_modulus: float
    density: float

    def __post_init__(self):
        if self.young_modulus <= 0 or self.density < 0:
            raise ModelError("need E > 0 and density >= 0")


@dataclass
class TrussModel:
    """Immutable-by-convention description of one truss configuration.

    nodes : (n, 2) float array of coordinates [m]
    members : (m, 2) int array of node index pairs
    areas : (m,) float array of cross sections [m^2]
    fixed : (n, 2) bool array, True where a DOF is restrained
    loads : (n, 2) float array of nodal forces [N]
    masses : (n,) float array of lumped nonstructural masses [kg]
    """

    nodes: np.ndarray
    members: np.ndarray
    areas: np.ndarray
    material: Material
    fixed: np.ndarray
    loads: np.ndarray = None
    masses: np.ndarray = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.members = np.asarray(self.members, dtype=int)
        self.areas = np.asarray(self.areas, dtype=float)
        self.fixed = np.asarray(self.fixed, dtype=bool)
        n = self.nodes.shape[0]
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ModelError("nodes must be an (n, 2) array")
        if self.members.ndim != 2 or self.members.shape[1] != 2:
            raise ModelError("members must be an (m, 2) array")
        if self.members.min(initial=0) < 0 or self.members.max(initial=-1) >= n:
            raise ModelError("member endpoint out of range")
        if np.any(self.members[:, 0] == self.members[:, 1]):
            raise ModelError("member with identical endpoints")
        if self.areas.shape != (self.members.shape[0],):
            raise ModelError("areas must match the member count")
        if np.any(self.areas <= 0):
            raise ModelError("member areas must be positive")
        if self.fixed.shape != (n, 2):
            raise ModelError("fixed must be an (n, 2) bool array")
        if int(self.fixed.sum()) < 3:
            raise ModelError("at least three restrained DOFs are required")
        if self.loads is None:
            self.loads = np.zeros((n, 2))
        else:
            self.loads = np.asarray(self.loads, dtype=float)
            if self.loads.shape != (n, 2):
                raise ModelError("loads must be an (n, 2) array")
        if self.masses is None:
            self.masses = np.zeros(n)
        else:
            self.masses = np.asarray(self.masses, dtype=float)
            if self.masses.shape != (n,):
                raise ModelError("masses must be an (n,) array")
            if np.any(self.masses < 0):
                raise ModelError("lumped masses must be >= 0")
        if np.any(member_lengths(self) <= 0):
            raise ModelError("zero-length member")

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_members(self) -> int:
        return self.members.shape[0]


def member_lengths(model: TrussModel) -> np.ndarray:
    d = model.nodes[model.members[:, 1]] - model.nodes[model.members[:, 0]]
    return np.linalg.norm(d, axis=1)


def total_weight(model: TrussModel) -> float:
    """Structural mass [kg]: sum of density * area * length over members."""
    return float(model.material.density * np.sum(model.areas * member_lengths(model)))


def element_stiffness(
    xa: np.ndarray, xb: np.ndarray, area: float, young_modulus: float
) -> np.ndarray:
    """4x4 global-frame stiffness of one bar between points xa and xb.

    DOF order (ua_x, ua_y, ub_x, ub_y).  The matrix is (EA/L) times the
    outer-product pattern of the direction cosines; symmetric and singular
    (rank 1) on its own.
    """
    d = np.asarray(xb, dtype=float) - np.asarray(xa, dtype=float)
    length = float(np.linalg.norm(d))
    if length <= 0:
        raise ModelError("zero-length element")
    c, s = d / length
    k = young_modulus * area / length
    cc, ss, cs = c * c, s * s, c * s
    return k * np.array(
        [
            [cc, cs, -cc, -cs],
            [cs, ss, -cs, -ss],
            [-cc, -cs, cc, cs],
            [-cs, -ss, cs, ss],
        ]
    )


def _dof_indices(model: TrussModel) -> np.ndarray:
    """(m, 4) array of global DOF indices per member."""
    a = model.members[:, 0]
    b = model.members[:, 1]
    return np.column_stack([2 * a, 2 * a + 1, 2 * b, 2 * b + 1])


def assemble_stiffness(model: TrussModel) -> np.ndarray:
    """Full (2n, 2n) stiffness matrix, all DOFs, no supports applied."""
    n_dof = 2 * model.n_nodes
    coords = model.nodes
    d = coords[model.members[:, 1]] - coords[model.members[:, 0]]
    lengths = np.linalg.norm(d, axis=1)
    cosines = d / lengths[:, None]
    # per-member 4-vector (c, s, -c, -s); element matrix is k * outer(v, v)
    v = np.column_stack([cosines, -cosines])
    k = model.material.young_modulus * model.areas / lengths
    blocks = k[:, None, None] * v[:, :, None] * v[:, None, :]
    dofs = _dof_indices(model)
    K = np.zeros((n_dof, n_dof))
    rows = np.repeat(dofs, 4, axis=1)
    cols = np.tile(dofs, (1, 4))
    np.add.at(K, (rows.ravel(), cols.ravel()), blocks.ravel())
    return K


def free_dofs(model: TrussModel) -> np.ndarray:
    return np.flatnonzero(~model.fixed.ravel())


@dataclass
class StaticResult:
    """displacements is (n, 2) with zeros on restrained DOFs; stresses is
    per-member axial stress [Pa], tension positive; weight is the structural
    mass [kg]."""

    displacements: np.ndarray
    stresses: np.ndarray
    member_forces: np.ndarray
    weight: float


def solve_static(model: TrussModel) -> StaticResult:
    """Displacements, stresses and weight under the model's nodal loads."""
    K = assemble_stiffness(model)
    free = free_dofs(model)
    if free.size == 0:
        raise ModelError("no free DOFs")
    K_red = K[np.ix_(free, free)]
    f = model.loads.ravel()[free]
    try:
        np.linalg.cholesky(K_red)
    except np.linalg.LinAlgError:
        eigmin = float(np.linalg.eigvalsh(K_red)[0])
        raise AnalysisError(
            f"reduced stiffness is not positive definite "
            f"(smallest eigenvalue {eigmin:.3e}); the truss is a mechanism"
        ) from None
    u_free = np.linalg.solve(K_red, f)
    u = np.zeros(2 * model.n_nodes)
    u[free] = u_free

    d = model.nodes[model.members[:, 1]] - model.nodes[model.members[:, 0]]
    lengths = np.linalg.norm(d, axis=1)
    cosines = d / lengths[:, None]
    ua = u.reshape(-1, 2)[model.members[:, 0]]
    ub = u.reshape(-1, 2)[model.members[:, 1]]
    elongation = np.einsum("ij,ij->i", ub - ua, cosines)
    stresses = model.material.young_modulus * elongation / lengths
    forces = stresses * model.areas
    return StaticResult(
        displacements=u.reshape(-1, 2),
        stresses=stresses,
        member_forces=forces,
        weight=total_weight(model),
    )


def lumped_masses(model: TrussModel) -> np.ndarray:
    """Per-node translational mass: lumped nonstructural mass plus half of
    each adjacent member's structural mass."""
    node_mass = model.masses.copy()
    tributary = 0.5 * model.material.density * model.areas * member_lengths(model)
    np.add.at(node_mass, model.members[:, 0], tributary)
    np.add.at(node_mass, model.members[:, 1], tributary)
    return node_mass


def natural_frequencies(model: TrussModel, count: int | None = None) -> np.ndarray:
    """Lowest natural frequencies [Hz], ascending.

    The generalized problem with the diagonal mass matrix is reduced to a
    symmetric standard problem through a M^(-1/2) similarity transform.
    Tiny negative eigenvalues from roundoff are clamped to zero.
    """
    free = free_dofs(model)
    if free.size == 0:
        raise ModelError("no free DOFs")
    mass = np.repeat(lumped_masses(model), 2)[free]
    if np.any(mass <= 0):
        bad = free[np.flatnonzero(mass <= 0)[0]]
        raise ModelError(f"free DOF {bad} carries no mass")
    K = assemble_stiffness(model)[np.ix_(free, free)]
    inv_sqrt = 1.0 / np.sqrt(mass)
    A = inv_sqrt[:, None] * K * inv_sqrt[None, :]
    A = 0.5 * (A + A.T)
    lams = np.linalg.eigvalsh(A)
    tol = 1e-8 * max(1.0, float(np.abs(lams).max()))
    if lams[0] < -tol:
        raise AnalysisError(
            f"negative stiffness eigenvalue {lams[0]:.3e}; the truss is a mechanism"
        )
    lams = np.clip(lams, 0.0, None)
    freqs = np.sqrt(lams) / (2.0 * np.pi)
    if count is not None:
        freqs = freqs[: int(count)]
    return freqs


# ---------------------------------------------------------------------------
# Constraint helpers (normalized, >= 0 means violated amount)


def stress_violations(stresses: np.ndarray, limit: float) -> np.ndarray:
    """Per-member ``max(0, |sigma| / limit - 1)``."""
    if limit <= 0:
        raise ValueError("stress limit must be positive")
    return np.maximum(0.0, np.abs(stresses) / limit - 1.0)


def displacement_violation(value: float, limit: float) -> float:
    """``max(0, |u| / limit - 1)`` for one displacement bound."""
    if limit <= 0:
        raise ValueError("displacement limit must be positive")
    return max(0.0, abs(value) / limit - 1.0)


def frequency_violations(freqs: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Per-mode lower bounds: ``max(0, 1 - f_k / f_min_k)``."""
    freqs = np.asarray(freqs, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    if np.any(bounds <= 0):
        raise ValueError("frequency bounds must be positive")
    if freqs.size < bounds.size:
        raise ValueError("fewer frequencies than bounds")
    return np.maximum(0.0, 1.0 - freqs[: bounds.size] / bounds)
