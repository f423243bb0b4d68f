"""Union implicit field of fitted primitives, iso-surface preview
extraction, and reconstruction-error metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from skimage import measure

from .elements import (
    DiscretizedPrimitive,
    evaluate_implicit_batch,
    realize_positions,
)
from .mesh import TriMesh


def point_triangles_distance(points: np.ndarray, tri_pts: np.ndarray,
                             chunk: int = 256) -> np.ndarray:
    """Min distance from each point to a triangle soup (vectorized).

    tri_pts has shape (F, 3, 3); closest points found per Voronoi region
    of each triangle, expressed in (v, w) barycentric coordinates.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    a = tri_pts[:, 0]
    ab = tri_pts[:, 1] - a
    ac = tri_pts[:, 2] - a
    out = np.empty(len(points))
    for lo in range(0, len(points), chunk):
        p = points[lo : lo + chunk][:, None, :]  # (q, 1, 3)
        ap = p - a[None, :, :]
        d1 = np.einsum("fj,qfj->qf", ab, ap)
        d2 = np.einsum("fj,qfj->qf", ac, ap)
        bp = p - tri_pts[None, :, 1]
        d3 = np.einsum("fj,qfj->qf", ab, bp)
        d4 = np.einsum("fj,qfj->qf", ac, bp)
        cp = p - tri_pts[None, :, 2]
        d5 = np.einsum("fj,qfj->qf", ab, cp)
        d6 = np.einsum("fj,qfj->qf", ac, cp)
        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ab = np.clip(np.where(d1 != d3, d1 / (d1 - d3), 0.0), 0, 1)
            t_ac = np.clip(np.where(d2 != d6, d2 / (d2 - d6), 0.0), 0, 1)
            den_bc = (d4 - d3) + (d5 - d6)
            t_bc = np.clip(np.where(den_bc != 0, (d4 - d3) / den_bc, 0.0), 0, 1)
            denom = va + vb + vc
            vi = np.where(denom != 0, vb / denom, 0.0)
            wi = np.where(denom != 0, vc / denom, 0.0)
        conds = [
            (d1 <= 0) & (d2 <= 0),                       # vertex a
            (d3 >= 0) & (d4 <= d3),                      # vertex b
            (d6 >= 0) & (d5 <= d6),                      # vertex c
            (vc <= 0) & (d1 >= 0) & (d3 <= 0),           # edge ab
            (vb <= 0) & (d2 >= 0) & (d6 <= 0),           # edge ac
            (va <= 0) & (d4 >= d3) & (d5 >= d6),         # edge bc
        ]
        zeros = np.zeros_like(d1)
        ones = np.ones_like(d1)
        V = np.select(conds, [zeros, ones, zeros, t_ab, zeros, 1.0 - t_bc], vi)
        W = np.select(conds, [zeros, zeros, ones, zeros, t_ac, t_bc], wi)
        closest = a[None, :, :] + V[..., None] * ab[None, :, :] + W[..., None] * ac[None, :, :]
        d = np.linalg.norm(closest - p, axis=-1)
        out[lo : lo + d.shape[0]] = d.min(axis=1)
    return out


@dataclass
class UnionField:
    primitives: List[DiscretizedPrimitive]
    _bounds: Optional[List[Tuple[np.ndarray, float]]] = None

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("union field needs at least one primitive")

    def _lower_bounds(self, X: np.ndarray) -> np.ndarray:
        """Conservative per-primitive lower bound of the implicit value."""
        lbs = np.empty((len(self.primitives), len(X)))
        for k, p in enumerate(self.primitives):
            P = p.element.closest_points_batch(X)
            dist = np.linalg.norm(X - P, axis=1)
            lbs[k] = dist - (p.boundary.epsilon + float(p.radii.max()))
        return lbs

    def values(self, X: np.ndarray, accelerated: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
        if not accelerated:
            vals = np.full(len(X), np.inf)
            for p in self.primitives:
                vals = np.minimum(vals, evaluate_implicit_batch(p, X))
            return vals
        lbs = self._lower_bounds(X)
        order = np.argsort(lbs.min(axis=1), kind="stable")
        vals = np.full(len(X), np.inf)
        for k in order:
            active = lbs[k] < vals
            if not active.any():
                continue
            vals[active] = np.minimum(
                vals[active],
                evaluate_implicit_batch(self.primitives[k], X[active]),
            )
        return vals

    def value(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=np.float64)[None, :])[0])


def union_value(field: UnionField, x) -> float:
    return field.value(x)


def extract_union_mesh(
    field: UnionField, grid_resolution: int, margin: float = 0.05
) -> TriMesh:
    """Marching-cubes iso-surface of the union field at level 0."""
    if grid_resolution < 16:
        raise ValueError("grid resolution must be >= 16")
    pts = np.vstack([realize_positions(p) for p in field.primitives])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = margin * float(np.linalg.norm(hi - lo) + 1e-12) + 1e-6
    lo -= pad
    hi += pad
    n = grid_resolution
    axes = [np.linspace(lo[k], hi[k], n) for k in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = field.values(grid).reshape(n, n, n)
    if vals.min() > 0 or vals.max() < 0:
        import warnings

        warnings.warn("empty iso-surface")
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    spacing = tuple((hi - lo) / (n - 1))
    verts, faces, _, _ = measure.marching_cubes(vals, level=0.0, spacing=spacing)
    return TriMesh(verts + lo, faces)


def reconstruction_samples(
    field: UnionField, interior_tolerance: float = 1e-9
) -> np.ndarray:
    """Realized primitive vertices not strictly inside another primitive.

    `interior_tolerance` sets how deep inside a neighboring primitive a
    vertex may sit before it is discarded as interior; raise it when
    primitives overlap with noticeable fitting sag so near-boundary
    vertices still count as surface samples.
    """
    samples = []
    for k, p in enumerate(field.primitives):
        pos = realize_positions(p)
        keep = np.ones(len(pos), dtype=bool)
        for j, q in enumerate(field.primitives):
            if j == k:
                continue
            keep &= evaluate_implicit_batch(q, pos) >= -interior_tolerance
        samples.append(pos[keep])
    out = np.vstack(samples)
    if len(out) == 0:
        raise ValueError("no boundary samples; interior tolerance too tight")
    return out


def _boundary_triangles(
    field: UnionField, interior_tolerance: float = 1e-9
) -> np.ndarray:
    """Realized triangles with at least one vertex on the union boundary."""
    tris = []
    for k, p in enumerate(field.primitives):
        pos = realize_positions(p)
        outside = np.ones(len(pos), dtype=bool)
        for j, q in enumerate(field.primitives):
            if j == k:
                continue
            outside &= evaluate_implicit_batch(q, pos) >= -interior_tolerance
        f = p.boundary.faces
        keep = outside[f].any(axis=1)
        tris.append(pos[f[keep]])
    out = np.vstack(tris)
    if len(out) == 0:
        raise ValueError("no boundary triangles; interior tolerance too tight")
    return out


@dataclass
class ErrorReport:
    eps1: float
    eps2: float
    eps: float
    hausdorff: float
    per_vertex: np.ndarray
    scale: float = 1.0

    def scaled(self, factor: float = 100.0) -> "ErrorReport":
        return ErrorReport(
            self.eps1 * factor,
            self.eps2 * factor,
            self.eps * factor,
            self.hausdorff * factor,
            self.per_vertex * factor,
            scale=self.scale * factor,
        )


def error_metrics(
    target: TriMesh, field: UnionField, combine: str = "sum",
    interior_tolerance: float = 1e-9,
) -> ErrorReport:
    """Two-sided vertex-to-surface reconstruction errors.

    `combine` selects how the aggregate error joins the two directed means
    ("sum" or "mean").  `interior_tolerance` is forwarded to the boundary
    sample selection (see `reconstruction_samples`).
    """
    recon_tris = _boundary_triangles(field, interior_tolerance)
    d1 = point_triangles_distance(target.vertices, recon_tris)
    samples = reconstruction_samples(field, interior_tolerance)
    tgt_tris = target.vertices[target.triangles]
    d2 = point_triangles_distance(samples, tgt_tris)
    eps1 = float(d1.mean())
    eps2 = float(d2.mean())
    if combine == "sum":
        eps = eps1 + eps2
    elif combine == "mean":
        eps = 0.5 * (eps1 + eps2)
    else:
        raise ValueError("combine must be 'sum' or 'mean'")
    hausdorff = float(max(d1.max(), d2.max()))
    return ErrorReport(eps1, eps2, eps, hausdorff, d1)
