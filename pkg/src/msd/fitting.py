"""Radius fitting: smoothness + expansion quadratic with soft contact
penalties, solved by an alternating active-set scheme with progressive
target growth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import CanonicalBoundary, DiscretizedPrimitive
from .mesh import (
    GeometryError,
    TriMesh,
    point_inside,
    point_mesh_distance,
    ray_first_hits_batch,
)

DEFAULT_W = 10.0
DEFAULT_W_HAT = 1e4
MAX_ITERATIONS = 15
CONVERGENCE_TOL = 1e-8
N_PROGRESSIONS = 25
GROWTH_FRACTION = 0.1
MIN_RADIUS = 1e-4


def boundary_laplacian(boundary: CanonicalBoundary) -> sp.csr_matrix:
    """Combinatorial graph Laplacian (D - A) of the boundary mesh."""
    n = boundary.n_vertices
    f = boundary.faces
    rows = np.concatenate([f[:, 0], f[:, 1], f[:, 1], f[:, 2], f[:, 2], f[:, 0]])
    cols = np.concatenate([f[:, 1], f[:, 0], f[:, 2], f[:, 1], f[:, 0], f[:, 2]])
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    A.data[:] = 1.0  # collapse duplicate edge entries
    A = sp.csr_matrix((np.ones(len(A.data)), A.indices, A.indptr), shape=(n, n))
    deg = np.asarray(A.sum(axis=1)).ravel()
    return (sp.diags(deg) - A).tocsr()


@dataclass
class FitProblem:
    laplacian: sp.csr_matrix
    r_max: np.ndarray
    r_tgt: np.ndarray
    r: np.ndarray
    w: float = DEFAULT_W
    w_hat: float = DEFAULT_W_HAT

    def __post_init__(self):
        self.r_max = np.asarray(self.r_max, dtype=np.float64).ravel()
        self.r_tgt = np.asarray(self.r_tgt, dtype=np.float64).ravel()
        self.r = np.asarray(self.r, dtype=np.float64).ravel()
        n = self.laplacian.shape[0]
        if not (len(self.r_max) == len(self.r_tgt) == len(self.r) == n):
            raise ValueError("size mismatch in fit problem")
        if np.any(self.r_max <= 0) or self.w <= 0 or self.w_hat <= 0:
            raise ValueError("r_max and weights must be positive")

    def objective(self, r: np.ndarray, active: np.ndarray) -> float:
        Lr = self.laplacian @ r
        val = float(Lr @ Lr) + self.w * float(np.sum((r - self.r_tgt) ** 2))
        if active.any():
            val += self.w_hat * float(
                np.sum((r[active] - self.r_max[active]) ** 2)
            )
        return val


@dataclass
class FitReport:
    iterations: int
    objective: float
    max_penetration: float
    converged: bool


def compute_rmax(prim_or_boundary, target: TriMesh) -> np.ndarray:
    """Per-direction max radii: distance from each boundary vertex to the
    first hit of its outward ray against the target surface."""
    boundary = (
        prim_or_boundary.boundary
        if isinstance(prim_or_boundary, DiscretizedPrimitive)
        else prim_or_boundary
    )
    bases = np.unique(np.round(boundary.base_points, 12), axis=0)
    for b in bases[:: max(1, len(bases) // 8)]:
        if not point_inside(target, b):
            raise GeometryError("medial element lies outside the target mesh")
    t = ray_first_hits_batch(target, boundary.vertices, boundary.directions)
    if not np.isfinite(t).all():
        i = int(np.argmax(~np.isfinite(t)))
        raise GeometryError(f"ray for direction {i} misses the target mesh")
    return t


def solve_fit(problem: FitProblem) -> Tuple[np.ndarray, FitReport]:
    """Alternate active-set selection and a single SPD linear solve until
    the radii stop moving."""
    L = problem.laplacian
    LtL = (L.T @ L).tocsc()
    n = L.shape[0]
    w, w_hat = problem.w, problem.w_hat
    r = problem.r.copy()
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        active = r > problem.r_max
        A = LtL + sp.diags(np.where(active, w + w_hat, w), format="csc")
        b = w * problem.r_tgt + np.where(active, w_hat * problem.r_max, 0.0)
        r_new = spla.splu(A).solve(b)
        delta = np.max(np.abs(r_new - r))
        r = r_new
        if delta < CONVERGENCE_TOL:
            converged = True
            break
    active = r > problem.r_max
    report = FitReport(
        iterations=iterations,
        objective=problem.objective(r, active),
        max_penetration=float(np.max(r - problem.r_max)),
        converged=converged,
    )
    return r, report


def progressive_fit(
    prim: DiscretizedPrimitive,
    target: TriMesh,
    r_max: Optional[np.ndarray] = None,
    w: float = DEFAULT_W,
    w_hat: float = DEFAULT_W_HAT,
    n_progressions: int = N_PROGRESSIONS,
) -> DiscretizedPrimitive:
    """Fit the radius vector by growing the expansion target in steps of
    10% of the initial radius and re-solving each time."""
    boundary = prim.boundary
    if r_max is None:
        r_max = compute_rmax(boundary, target)
    center = prim.element.corner_array().mean(axis=0)
    d0 = point_mesh_distance(target, center)
    r_init = max(d0 - boundary.epsilon, MIN_RADIUS)
    L = boundary_laplacian(boundary)
    n = boundary.n_vertices
    r = np.full(n, r_init)
    for step in range(n_progressions):
        r_tgt = np.full(n, r_init * (1.0 + GROWTH_FRACTION * (step + 1)))
        problem = FitProblem(L, r_max, r_tgt, r, w=w, w_hat=w_hat)
        r, _ = solve_fit(problem)
    r = np.maximum(np.minimum(r, r_max), MIN_RADIUS)
    return prim.with_radii(r)
