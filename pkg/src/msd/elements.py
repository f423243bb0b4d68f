"""Generalized enveloping primitives: canonical boundary tessellations,
radius vectors, implicit evaluation, and canonical-resolution resampling.

A primitive's realized surface places each canonical boundary vertex at
v_i + r_i * d_i, so the realized distance from the medial element along
direction d_i is epsilon + r_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import GeometryError, TriMesh, closest_point_on_element

DEFAULT_EPSILON = 0.1

# region labels
R_SPHERE = "sphere"
R_CAP = "cap-hemisphere"
R_WALL = "cylinder-wall"
R_PLANE = "plane"
R_HALF_CYL = "half-cylinder"
R_WEDGE = "wedge"

RESOLUTIONS = ("high", "mid", "low", "min")

# canonical vertex counts for the three compression resolutions
SPHERE_COUNTS = {"mid": 411, "low": 213, "min": 47}
CYLINDER_PARAMS = {  # (n_phi, n_z, n_alpha) -> n_phi*n_z + 2*(n_phi*(n_alpha-1)+1)
    "mid": (14, 10, 3),   # 198
    "low": (8, 6, 3),     # 82
    "min": (5, 4, 3),     # 42
}
PRISM_COUNTS = {"mid": 664, "low": 314, "min": 120}

SPHERE_HIGH_COUNT = 1588


@dataclass(frozen=True)
class MedialElement:
    """A skeletal vertex, edge, or triangle with 1-3 corner positions."""

    kind: str  # vertex | edge | triangle
    corners: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        if self.kind not in ("vertex", "edge", "triangle"):
            raise ValueError(f"bad element kind: {self.kind}")
        k = {"vertex": 1, "edge": 2, "triangle": 3}[self.kind]
        if len(self.corners) != k:
            raise ValueError(f"{self.kind} element needs {k} corners")
        pts = self.corner_array()
        if self.kind == "edge" and np.allclose(pts[0], pts[1]):
            raise GeometryError("zero-length edge element")
        if self.kind == "triangle":
            n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            if np.linalg.norm(n) < 1e-14:
                raise GeometryError("degenerate triangle element")

    def corner_array(self) -> np.ndarray:
        return np.asarray(self.corners, dtype=np.float64)

    def closest_point(self, x):
        return closest_point_on_element(x, self.corner_array())

    def closest_points_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
        c = self.corner_array()
        if self.kind == "vertex":
            return np.broadcast_to(c[0], X.shape).copy()
        if self.kind == "edge":
            a, b = c
            d = b - a
            t = np.clip((X - a) @ d / d.dot(d), 0.0, 1.0)
            return a + t[:, None] * d
        return np.array([closest_point_on_element(x, c)[0] for x in X])


def medial_vertex(p) -> MedialElement:
    return MedialElement("vertex", (tuple(float(x) for x in p),))


def medial_edge(p, q) -> MedialElement:
    return MedialElement(
        "edge", (tuple(float(x) for x in p), tuple(float(x) for x in q))
    )


def medial_triangle(p, q, r) -> MedialElement:
    return MedialElement(
        "triangle",
        (
            tuple(float(x) for x in p),
            tuple(float(x) for x in q),
            tuple(float(x) for x in r),
        ),
    )


@dataclass
class CanonicalBoundary:
    """Tessellated epsilon-boundary of a medial element.

    vertices[i] = base_points[i] + epsilon * directions[i]; directions are
    unit outward normals of the smooth epsilon-boundary.
    """

    epsilon: float
    vertices: np.ndarray
    directions: np.ndarray
    faces: np.ndarray
    face_regions: List[str]
    base_points: np.ndarray
    vertex_regions: List[str]
    resolution: str
    meta: Dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass
class DiscretizedPrimitive:
    element: MedialElement
    boundary: CanonicalBoundary
    radii: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=np.float64).ravel()
        if len(self.radii) != self.boundary.n_vertices:
            raise ValueError("radius count does not match boundary vertices")
        if np.any(self.radii <= 0):
            raise ValueError("radii must be positive")

    def with_radii(self, radii) -> "DiscretizedPrimitive":
        return DiscretizedPrimitive(self.element, self.boundary, np.asarray(radii))


# ---------------------------------------------------------------------------
# canonical tessellations


def fibonacci_sphere(n: int) -> np.ndarray:
    """n quasi-uniform unit directions (golden-angle spiral)."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _oriented_hull_faces(dirs: np.ndarray) -> np.ndarray:
    """Convex-hull triangulation of unit directions, oriented outward."""
    hull = ConvexHull(dirs)
    if len(hull.vertices) != len(dirs):
        # near-coplanar facets can swallow samples; joggle to keep them all
        hull = ConvexHull(dirs, qhull_options="QJ")
    if len(hull.vertices) != len(dirs):
        raise GeometryError("hull dropped sample points")
    faces = []
    for simplex in hull.simplices:
        a, b, c = dirs[simplex]
        if np.cross(b - a, c - a).dot(a + b + c) < 0:
            simplex = simplex[[0, 2, 1]]
        faces.append(simplex)
    return np.asarray(faces, dtype=np.int64)


def _build_sphere(center, epsilon: float, count: int, resolution: str) -> CanonicalBoundary:
    dirs = fibonacci_sphere(count)
    faces = _oriented_hull_faces(dirs)
    center = np.asarray(center, dtype=np.float64)
    verts = center + epsilon * dirs
    base = np.broadcast_to(center, verts.shape).copy()
    return CanonicalBoundary(
        epsilon=epsilon,
        vertices=verts,
        directions=dirs,
        faces=faces,
        face_regions=[R_SPHERE] * len(faces),
        base_points=base,
        vertex_regions=[R_SPHERE] * len(verts),
        resolution=resolution,
    )


def _frame_for_axis(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis.dot(ref)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    return u, w


def _build_capsule(
    p0: np.ndarray,
    p1: np.ndarray,
    epsilon: float,
    n_phi: int,
    n_z: int,
    n_alpha: int,
    resolution: str,
) -> CanonicalBoundary:
    """Cylinder wall (n_z rings x n_phi) plus two hemispherical caps."""
    axis = p1 - p0
    length = float(np.linalg.norm(axis))
    axis = axis / length
    u, w = _frame_for_axis(axis)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    radial = np.cos(phis)[:, None] * u + np.sin(phis)[:, None] * w

    verts, dirs, base, vregion = [], [], [], []
    wall_rows = []
    for i in range(n_z):
        t = i / (n_z - 1)
        b = p0 + t * length * axis
        row = []
        for k in range(n_phi):
            row.append(len(verts))
            verts.append(b + epsilon * radial[k])
            dirs.append(radial[k])
            base.append(b)
            vregion.append(R_WALL)
        wall_rows.append(row)

    def cap(endpoint, out_axis, equator_row):
        rows = [equator_row]
        for j in range(1, n_alpha):
            alpha = (np.pi / 2) * (1 - j / n_alpha)
            row = []
            for k in range(n_phi):
                d = np.sin(alpha) * radial[k] + np.cos(alpha) * out_axis
                row.append(len(verts))
                verts.append(endpoint + epsilon * d)
                dirs.append(d)
                base.append(endpoint)
                vregion.append(R_CAP)
            rows.append(row)
        pole = len(verts)
        verts.append(endpoint + epsilon * out_axis)
        dirs.append(out_axis.copy())
        base.append(endpoint)
        vregion.append(R_CAP)
        return rows, pole

    faces, fregion = [], []

    def quad_strip(row_a, row_b, region, flip=False):
        for k in range(n_phi):
            k1 = (k + 1) % n_phi
            tris = [
                [row_a[k], row_a[k1], row_b[k1]],
                [row_a[k], row_b[k1], row_b[k]],
            ]
            for t in tris:
                faces.append(t[::-1] if flip else t)
                fregion.append(region)

    for r0, r1 in zip(wall_rows[:-1], wall_rows[1:]):
        quad_strip(r0, r1, R_WALL, flip=True)

    rows0, pole0 = cap(p0, -axis, wall_rows[0])
    for ra, rb in zip(rows0[:-1], rows0[1:]):
        quad_strip(ra, rb, R_CAP, flip=True)
    for k in range(n_phi):
        faces.append([pole0, rows0[-1][(k + 1) % n_phi], rows0[-1][k]])
        fregion.append(R_CAP)

    rows1, pole1 = cap(p1, axis, wall_rows[-1])
    for ra, rb in zip(rows1[:-1], rows1[1:]):
        quad_strip(ra, rb, R_CAP)
    for k in range(n_phi):
        faces.append([pole1, rows1[-1][k], rows1[-1][(k + 1) % n_phi]])
        fregion.append(R_CAP)

    return CanonicalBoundary(
        epsilon=epsilon,
        vertices=np.asarray(verts),
        directions=np.asarray(dirs),
        faces=np.asarray(faces, dtype=np.int64),
        face_regions=fregion,
        base_points=np.asarray(base),
        vertex_regions=vregion,
        resolution=resolution,
        meta={
            "axis_p0": p0,
            "axis_p1": p1,
            "n_phi": n_phi,
            "n_z": n_z,
            "wall_rows": wall_rows,
        },
    )


def _prism_samples(corners: np.ndarray, epsilon: float, total: int):
    """Quasi-uniform samples on a slab boundary (triangle + epsilon ball).

    Returns (points, dirs, bases, regions); exactly `total` samples.
    """
    A, B, C = corners
    n_hat = np.cross(B - A, C - A)
    area = 0.5 * np.linalg.norm(n_hat)
    n_hat = n_hat / np.linalg.norm(n_hat)
    edges = [(A, B, C), (B, C, A), (C, A, B)]
    edge_lens = [np.linalg.norm(q - p) for p, q, _ in edges]
    wedge_angles = []
    for i, (p, q, r) in enumerate(edges):
        prev = edges[(i - 1) % 3]
        u_cur = _edge_outward_normal(p, q, r, n_hat)
        u_prev = _edge_outward_normal(*prev, n_hat)
        cosang = np.clip(u_prev.dot(u_cur), -1, 1)
        wedge_angles.append(float(np.arccos(cosang)))
    region_areas = (
        [area, area]
        + [np.pi * epsilon * L for L in edge_lens]
        + [a * epsilon ** 2 for a in wedge_angles]
    )
    weights = np.asarray(region_areas) / sum(region_areas)
    counts = np.floor(weights * total).astype(int)
    counts = np.maximum(counts, 1)
    order = np.argsort(-(weights * total - counts))
    i = 0
    while counts.sum() < total:
        counts[order[i % len(counts)]] += 1
        i += 1
    while counts.sum() > total:
        j = np.argmax(counts)
        counts[j] -= 1

    golden = (math.sqrt(5.0) - 1) / 2
    pts, dirs, bases, regions = [], [], [], []

    def halton(idx, b):
        f, r = 1.0, 0.0
        while idx > 0:
            f /= b
            r += f * (idx % b)
            idx //= b
        return r

    # plane regions
    for sgn, cnt in ((1.0, counts[0]), (-1.0, counts[1])):
        for k in range(cnt):
            su = math.sqrt(halton(k + 1, 2))
            a1, a2 = 1.0 - su, halton(k + 1, 3) * su
            p = A + a1 * (B - A) + a2 * (C - A)
            pts.append(p + sgn * epsilon * n_hat)
            dirs.append(sgn * n_hat)
            bases.append(p)
            regions.append(R_PLANE)
    # half-cylinders
    for ei, (p, q, r) in enumerate(edges):
        u = _edge_outward_normal(p, q, r, n_hat)
        cnt = counts[2 + ei]
        for k in range(cnt):
            t = (k + 0.5) / cnt
            phi = np.pi * ((k * golden) % 1.0)
            b = p + t * (q - p)
            d = np.cos(phi) * n_hat + np.sin(phi) * u
            pts.append(b + epsilon * d)
            dirs.append(d)
            bases.append(b)
            regions.append(R_HALF_CYL)
    # wedges
    for ci in range(3):
        corner = corners[ci]
        prev_e = edges[(ci - 1) % 3]
        cur_e = edges[ci]
        u_prev = _edge_outward_normal(*prev_e, n_hat)
        u_cur = _edge_outward_normal(*cur_e, n_hat)
        theta = wedge_angles[ci]
        axis_rot = n_hat if np.cross(u_prev, u_cur).dot(n_hat) > 0 else -n_hat
        cnt = counts[5 + ci]
        for k in range(cnt):
            psi = theta * (k + 0.5) / cnt
            phi = np.pi * (0.15 + 0.7 * ((k * golden) % 1.0))
            u = _rotate(u_prev, axis_rot, psi)
            d = np.cos(phi) * n_hat + np.sin(phi) * u
            pts.append(corner + epsilon * d)
            dirs.append(d)
            bases.append(corner.copy())
            regions.append(R_WEDGE)
    return (
        np.asarray(pts),
        np.asarray(dirs),
        np.asarray(bases),
        regions,
    )


def _edge_outward_normal(p, q, r, n_hat) -> np.ndarray:
    """In-plane unit normal of edge pq pointing away from opposite corner r."""
    e = q - p
    u = np.cross(e, n_hat)
    u = u / np.linalg.norm(u)
    if u.dot(p - r) < 0:
        u = -u
    return u


def _rotate(v, axis, angle):
    axis = axis / np.linalg.norm(axis)
    return (
        v * np.cos(angle)
        + np.cross(axis, v) * np.sin(angle)
        + axis * axis.dot(v) * (1 - np.cos(angle))
    )


def _build_prism_sampled(
    corners: np.ndarray, epsilon: float, count: int, resolution: str
) -> CanonicalBoundary:
    """Unstructured slab boundary with an exact vertex count (used for the
    compression canonicals; the slab is convex so hull connectivity of the
    normalized directions is a valid triangulation)."""
    pts, dirs, bases, regions = _prism_samples(corners, epsilon, count)
    centroid = corners.mean(axis=0)
    rel = pts - centroid
    rel = rel / np.linalg.norm(rel, axis=1, keepdims=True)
    faces = _oriented_hull_faces(rel)
    fregion = [regions[f[0]] for f in faces]
    return CanonicalBoundary(
        epsilon=epsilon,
        vertices=pts,
        directions=dirs,
        faces=faces,
        face_regions=fregion,
        base_points=bases,
        vertex_regions=regions,
        resolution=resolution,
    )


def _build_prism_structured(
    corners: np.ndarray, epsilon: float, n: int, n_phi: int, resolution: str
) -> CanonicalBoundary:
    """Structured slab boundary: two triangulated offset planes, three
    half-cylinder walls (phi in [0, pi]) and three corner wedges; region
    borders share vertices exactly."""
    A, B, C = corners
    n_hat = np.cross(B - A, C - A)
    n_hat = n_hat / np.linalg.norm(n_hat)

    verts: List[np.ndarray] = []
    dirs: List[np.ndarray] = []
    bases: List[np.ndarray] = []
    vregion: List[str] = []
    index: Dict[Tuple[int, int, int], int] = {}

    def add(p, d, b, region, key=None):
        if key is None:
            key = tuple(np.round(p, 9))
        if key in index:
            return index[key]
        idx = len(verts)
        index[key] = idx
        verts.append(np.asarray(p))
        dirs.append(np.asarray(d))
        bases.append(np.asarray(b))
        vregion.append(region)
        return idx

    faces: List[List[int]] = []
    fregion: List[str] = []

    # plane grids (top sgn=+1, bottom sgn=-1)
    plane_idx = {}
    for sgn in (1.0, -1.0):
        grid = {}
        for i in range(n + 1):
            for j in range(n + 1 - i):
                p = A + (i / n) * (B - A) + (j / n) * (C - A)
                on_border = i == 0 or j == 0 or i + j == n
                region = R_PLANE
                grid[(i, j)] = add(
                    p + sgn * epsilon * n_hat, sgn * n_hat, p, region
                )
        plane_idx[sgn] = grid
        for i in range(n):
            for j in range(n - i):
                a = grid[(i, j)]
                b = grid[(i + 1, j)]
                c = grid[(i, j + 1)]
                tri = [a, b, c] if sgn > 0 else [a, c, b]
                faces.append(tri)
                fregion.append(R_PLANE)
                if i + j < n - 1:
                    d = grid[(i + 1, j + 1)]
                    tri = [b, d, c] if sgn > 0 else [b, c, d]
                    faces.append(tri)
                    fregion.append(R_PLANE)

    # half-cylinders per edge; phi row 0 = top plane border, row n_phi = bottom
    edge_list = [(0, 1), (1, 2), (2, 0)]
    cyl_rows = {}
    for ei, (ia, ib) in enumerate(edge_list):
        P, Q = corners[ia], corners[ib]
        Rop = corners[3 - ia - ib]
        u = _edge_outward_normal(P, Q, Rop, n_hat)
        rows = []
        for k in range(n_phi + 1):
            phi = np.pi * k / n_phi
            d = np.cos(phi) * n_hat + np.sin(phi) * u
            row = []
            for s in range(n + 1):
                b = P + (s / n) * (Q - P)
                if k == 0:
                    row.append(_plane_border_index(plane_idx[1.0], ia, ib, s, n))
                elif k == n_phi:
                    row.append(_plane_border_index(plane_idx[-1.0], ia, ib, s, n))
                else:
                    row.append(add(b + epsilon * d, d, b, R_HALF_CYL))
            rows.append(row)
        cyl_rows[ei] = rows
        for ra, rb in zip(rows[:-1], rows[1:]):
            for s in range(n):
                faces.append([ra[s], rb[s], rb[s + 1]])
                fregion.append(R_HALF_CYL)
                faces.append([ra[s], rb[s + 1], ra[s + 1]])
                fregion.append(R_HALF_CYL)

    # wedges per corner between incoming edge (ci-1) and outgoing edge ci
    for ci in range(3):
        corner = corners[ci]
        e_in = (ci - 1) % 3   # edge ending at this corner (station n)
        e_out = ci            # edge starting at this corner (station 0)
        P_in, Q_in = corners[edge_list[e_in][0]], corners[edge_list[e_in][1]]
        u_in = _edge_outward_normal(
            P_in, Q_in, corners[3 - edge_list[e_in][0] - edge_list[e_in][1]], n_hat
        )
        P_o, Q_o = corners[edge_list[e_out][0]], corners[edge_list[e_out][1]]
        u_out = _edge_outward_normal(
            P_o, Q_o, corners[3 - edge_list[e_out][0] - edge_list[e_out][1]], n_hat
        )
        theta = float(np.arccos(np.clip(u_in.dot(u_out), -1, 1)))
        axis_rot = n_hat if np.cross(u_in, u_out).dot(n_hat) > 0 else -n_hat
        n_psi = max(2, int(np.ceil(theta / (np.pi / n_phi))))
        cols = []
        for m in range(n_psi + 1):
            if m == 0:
                cols.append([cyl_rows[e_in][k][n] for k in range(n_phi + 1)])
                continue
            if m == n_psi:
                cols.append([cyl_rows[e_out][k][0] for k in range(n_phi + 1)])
                continue
            u = _rotate(u_in, axis_rot, theta * m / n_psi)
            col = []
            for k in range(n_phi + 1):
                phi = np.pi * k / n_phi
                d = np.cos(phi) * n_hat + np.sin(phi) * u
                if k == 0:
                    col.append(cols[0][0])
                elif k == n_phi:
                    col.append(cols[0][n_phi])
                else:
                    col.append(add(corner + epsilon * d, d, corner, R_WEDGE))
            cols.append(col)
        for ca, cb in zip(cols[:-1], cols[1:]):
            for k in range(n_phi):
                tri1 = [ca[k], cb[k], cb[k + 1]]
                tri2 = [ca[k], cb[k + 1], ca[k + 1]]
                for tri in (tri1, tri2):
                    if len(set(tri)) == 3:
                        faces.append(tri)
                        fregion.append(R_WEDGE)

    return CanonicalBoundary(
        epsilon=epsilon,
        vertices=np.asarray(verts),
        directions=np.asarray(dirs),
        faces=np.asarray(faces, dtype=np.int64),
        face_regions=fregion,
        base_points=np.asarray(bases),
        vertex_regions=vregion,
        resolution=resolution,
        meta={"n": n, "n_phi": n_phi},
    )


def _plane_border_index(grid, ia, ib, s, n):
    """Index of the plane-grid vertex at station s of edge (ia, ib)."""
    if (ia, ib) == (0, 1):
        return grid[(s, 0)]
    if (ia, ib) == (1, 2):
        return grid[(n - s, s)]
    if (ia, ib) == (2, 0):
        return grid[(0, n - s)]
    raise ValueError("bad edge")


def _orient_faces_outward(boundary: CanonicalBoundary) -> CanonicalBoundary:
    """Make the face windings globally consistent with outward normals.

    Winding is propagated combinatorially across shared edges, then the
    whole closed surface is flipped if its signed volume is negative.
    """
    faces = [tuple(int(v) for v in f) for f in boundary.faces]
    by_edge: Dict[Tuple[int, int], List[int]] = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            by_edge.setdefault((u, v) if u < v else (v, u), []).append(fi)
    seen = [False] * len(faces)
    for start in range(len(faces)):
        if seen[start]:
            continue
        seen[start] = True
        queue = [start]
        while queue:
            fi = queue.pop()
            a, b, c = faces[fi]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                for fj in by_edge[key]:
                    if seen[fj]:
                        continue
                    x, y, z = faces[fj]
                    same_direction = (u, v) in ((x, y), (y, z), (z, x))
                    if same_direction:  # neighbor must traverse it reversed
                        faces[fj] = (x, z, y)
                    seen[fj] = True
                    queue.append(fj)
    verts = boundary.vertices
    tri = verts[np.asarray(faces)]
    volume6 = float(np.einsum(
        "ij,ij->", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])
    ))
    if volume6 < 0:
        faces = [(a, c, b) for a, b, c in faces]
    boundary.faces = np.asarray(faces, dtype=np.int64)
    return boundary


def build_canonical(
    element: MedialElement,
    epsilon: float = DEFAULT_EPSILON,
    resolution: str = "high",
    slab_grid: Optional[Tuple[int, int]] = None,
) -> CanonicalBoundary:
    """Canonical epsilon-boundary tessellation for a medial element.

    "high" is the fitting resolution (sphere: 1588 vertices; edge and
    triangle boundaries scale with element size).  "mid"/"low"/"min" are
    the three fixed compression canonicals.

    slab_grid=(n, n_phi) forces the structured slab tessellation for
    triangle elements at the given grid density.  Structured slabs keep
    every wall face on a single side with a small azimuth span, which the
    exact refinement stage requires; the sampled compression slabs may
    contain hull faces bridging regions, which refinement rejects.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if resolution not in RESOLUTIONS:
        raise ValueError(f"unknown resolution: {resolution}")
    c = element.corner_array()
    if element.kind == "vertex":
        count = SPHERE_HIGH_COUNT if resolution == "high" else SPHERE_COUNTS[resolution]
        boundary = _build_sphere(c[0], epsilon, count, resolution)
    elif element.kind == "edge":
        if resolution == "high":
            length = float(np.linalg.norm(c[1] - c[0]))
            n_phi = 20
            spacing = 2 * np.pi * epsilon / n_phi
            n_z = max(2, int(np.ceil(length / spacing)) + 1)
            n_alpha = max(2, n_phi // 4)
        else:
            n_phi, n_z, n_alpha = CYLINDER_PARAMS[resolution]
        boundary = _build_capsule(c[0], c[1], epsilon, n_phi, n_z, n_alpha, resolution)
    elif slab_grid is not None:
        n, n_phi = slab_grid
        boundary = _build_prism_structured(c, epsilon, n, n_phi, resolution=resolution)
    elif resolution == "high":
        max_len = max(np.linalg.norm(c[i] - c[j]) for i, j in ((0, 1), (1, 2), (2, 0)))
        n = max(2, int(np.ceil(2 * max_len / epsilon)))
        boundary = _build_prism_structured(c, epsilon, n, n_phi=8, resolution=resolution)
    else:
        boundary = _build_prism_sampled(c, epsilon, PRISM_COUNTS[resolution], resolution)
    return _orient_faces_outward(boundary)


# ---------------------------------------------------------------------------
# evaluation


def realize_positions(prim: DiscretizedPrimitive) -> np.ndarray:
    """Positions of the realized primitive mesh: v_i + r_i * d_i."""
    b = prim.boundary
    return b.vertices + prim.radii[:, None] * b.directions


def realized_mesh(prim: DiscretizedPrimitive) -> TriMesh:
    return TriMesh(realize_positions(prim), prim.boundary.faces)


def _ray_face_interpolate(
    boundary: CanonicalBoundary, values: np.ndarray, origins: np.ndarray, dirs: np.ndarray
) -> np.ndarray:
    """Interpolate a per-vertex field along rays (origin_i, dir_i) against
    the canonical boundary mesh.

    Uses the face hit first by each ray; interpolation is anchored at the
    face's first corner so constant fields are reproduced exactly.
    """
    v0 = boundary.vertices[boundary.faces[:, 0]]
    e1 = boundary.vertices[boundary.faces[:, 1]] - v0
    e2 = boundary.vertices[boundary.faces[:, 2]] - v0
    n_faces = max(1, len(boundary.faces))
    chunk = max(64, 2_000_000 // n_faces)
    if len(origins) > chunk:
        out = np.empty(len(origins))
        for lo in range(0, len(origins), chunk):
            out[lo : lo + chunk] = _ray_face_interpolate(
                boundary, values, origins[lo : lo + chunk], dirs[lo : lo + chunk]
            )
        return out
    out = np.empty(len(origins))
    # batch over queries; faces axis vectorized
    h = np.cross(dirs[:, None, :], e2[None, :, :])
    a = np.einsum("fj,qfj->qf", e1, h)
    eps = 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(np.abs(a) > eps, 1.0 / a, np.nan)
        s = origins[:, None, :] - v0[None, :, :]
        u = f * np.einsum("qfj,qfj->qf", s, h)
        qv = np.cross(s, e1[None, :, :])
        v = f * np.einsum("qfj,qj->qf", qv, dirs)
        t = f * np.einsum("fj,qfj->qf", e2, qv)
    tol = 1e-9
    valid = (np.abs(a) > eps) & (u >= -tol) & (v >= -tol) & (u + v <= 1 + tol) & (t > 0)
    t_masked = np.where(valid, t, np.inf)
    best = np.argmin(t_masked, axis=1)
    ok = np.isfinite(t_masked[np.arange(len(origins)), best])
    if not ok.all():
        # tolerance fallback for rays grazing the tessellation
        loose = (np.abs(a) > eps) & (u >= -1e-6) & (v >= -1e-6) & (u + v <= 1 + 1e-6) & (t > 0)
        t_loose = np.where(loose, t, np.inf)
        best = np.where(ok, best, np.argmin(t_loose, axis=1))
        ok = ok | np.isfinite(t_loose[np.arange(len(origins)), best])
        if not ok.all():
            raise GeometryError("direction ray misses the canonical boundary")
    qi = np.arange(len(origins))
    fsel = boundary.faces[best]
    w1 = np.clip(u[qi, best], 0.0, 1.0)
    w2 = np.clip(v[qi, best], 0.0, 1.0)
    vals0 = values[fsel[:, 0]]
    out = vals0 + w1 * (values[fsel[:, 1]] - vals0) + w2 * (values[fsel[:, 2]] - vals0)
    return out


def interpolate_realized_radius(
    prim: DiscretizedPrimitive, bases: np.ndarray, dirs: np.ndarray
) -> np.ndarray:
    """Realized radius (epsilon + interpolated r) along rays from element
    base points."""
    r = _ray_face_interpolate(prim.boundary, prim.radii, bases, dirs)
    return prim.boundary.epsilon + r


def evaluate_implicit_batch(prim: DiscretizedPrimitive, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
    P = prim.element.closest_points_batch(X)
    delta = X - P
    dist = np.linalg.norm(delta, axis=1)
    degenerate = dist < 1e-15
    out = np.empty(len(X))
    if degenerate.any():
        out[degenerate] = -(prim.boundary.epsilon + prim.radii.min())
    act = ~degenerate
    if act.any():
        dirs = delta[act] / dist[act, None]
        R = interpolate_realized_radius(prim, P[act], dirs)
        out[act] = dist[act] - R
    return out


def evaluate_implicit(prim: DiscretizedPrimitive, x) -> Tuple[float, bool]:
    """Signed implicit value at x; second value flags the degenerate case
    of x lying exactly on the medial element."""
    x = np.asarray(x, dtype=np.float64)
    p, _ = prim.element.closest_point(x)
    if np.linalg.norm(x - p) < 1e-15:
        return float(-(prim.boundary.epsilon + prim.radii.min())), True
    return float(evaluate_implicit_batch(prim, x[None, :])[0]), False


def resample(prim: DiscretizedPrimitive, target_resolution: str) -> DiscretizedPrimitive:
    """Transfer the radius field onto the canonical boundary at another
    resolution by sampling the interpolation along each new direction."""
    if target_resolution == prim.boundary.resolution:
        return DiscretizedPrimitive(prim.element, prim.boundary, prim.radii.copy())
    newb = build_canonical(prim.element, prim.boundary.epsilon, target_resolution)
    R = interpolate_realized_radius(prim, newb.base_points, newb.directions)
    r = np.maximum(R - newb.epsilon, 1e-9)
    return DiscretizedPrimitive(prim.element, newb, r)
