"""Target sub-surface selection and exact projection trajectories.

A trajectory is the surface swept while projecting one target edge onto
its medial element.  For a skeletal vertex it is a Cartesian triangle;
for a skeletal edge, a planar parallelogram in the edge's cylindrical
chart; for a skeletal triangle, an ordered mix of Cartesian quads (flat
plane regions) and chart parallelograms (half-cylinder regions around
each triangle side), split exactly at region borders.  Corner sphere
portions are omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from gmpy2 import mpq

from ..exact import (
    GeometryError,
    Vec3,
    lerp,
    point_in_triangle,
    rational,
    to_float,
    triangle_normal,
    vadd,
    vcross,
    vdot,
    vnorm2,
    vscale,
    vsub,
    triangle_triangle_segment,
)
from ..elements import DiscretizedPrimitive, evaluate_implicit_batch
from ..mesh import ExactTriMesh, TriMesh, point_mesh_distance
from .frames import PI_R, CylCoord, CylFrame, V1Table, to_chart

# piece kinds
K_TRIANGLE = "vertex-triangle"
K_CYL_QUAD = "cylinder-quad"
K_PLANE_QUAD = "plane-quad"


@dataclass
class TrajectoryPiece:
    kind: str
    polygon: List            # working-space corners (chart-0 coords for cyl)
    target_edge: Tuple[Vec3, Vec3]
    frame_key: Optional[int] = None   # medial-edge index for chart pieces
    # projection data for the vertex-update step
    medial_vertex: Optional[Vec3] = None   # vertex elements: radial center
    plane_normal: Optional[Vec3] = None    # plane pieces: projection direction
    t_range: Tuple[mpq, mpq] = (mpq(0), mpq(1))

    def azimuth_span(self) -> Optional[Tuple[mpq, mpq]]:
        if self.kind != K_CYL_QUAD:
            return None
        phis = [p[1] for p in self.polygon]
        return (min(phis), max(phis))


@dataclass
class Trajectory:
    edge_id: Tuple[int, int]
    target_edge: Tuple[Vec3, Vec3]
    pieces: List[TrajectoryPiece]


@dataclass
class SubSurface:
    edges: List[Tuple[int, int]]                  # target vertex index pairs
    trajectories: Dict[Tuple[int, int], Trajectory]
    target_vertices: Dict[int, Vec3]              # exact target positions


# ---------------------------------------------------------------------------
# selection


def _cartesian_pieces_for_test(traj: Trajectory) -> List[List[Vec3]]:
    """Cartesian stand-ins of trajectory pieces for the intersection test.

    Chart parallelograms are replaced by the planar quad spanned by the
    target sub-edge and its chord projection on the axis (a conservative
    flat approximation of the swept surface).
    """
    out = []
    for piece in traj.pieces:
        if piece.kind in (K_TRIANGLE, K_PLANE_QUAD):
            out.append(piece.polygon)
    return out


def _segment_on_segment(seg: Tuple[Vec3, Vec3], a: Vec3, b: Vec3) -> bool:
    """Whether both endpoints of seg lie on the closed segment (a, b)."""
    d = vsub(b, a)
    n2 = vnorm2(d)
    for p in seg:
        if vcross(vsub(p, a), d) != (0, 0, 0):
            return False
        t = vdot(vsub(p, a), d) / n2
        if t < 0 or t > 1:
            return False
    return True


def trajectory_intersects_target(
    traj: Trajectory, target: ExactTriMesh
) -> bool:
    """Exact trajectory-vs-target test (rule 2), brute force over target
    triangles.  Contacts confined to the projected edge itself are not
    intersections."""
    a, b = traj.target_edge
    for poly in _cartesian_pieces_for_test(traj):
        tris = [poly] if len(poly) == 3 else [
            [poly[0], poly[1], poly[2]], [poly[0], poly[2], poly[3]]
        ]
        for tri in tris:
            if triangle_normal(*tri) == (0, 0, 0):
                continue
            for f in target.triangles:
                t2 = [target.vertices[i] for i in f]
                seg = triangle_triangle_segment(tri, t2)
                if seg is None:
                    continue
                if _segment_on_segment(seg, a, b):
                    continue
                return True
    return False


def select_subsurface(
    target: ExactTriMesh,
    prim: DiscretizedPrimitive,
    delta: float,
    element=None,
    frames: Optional[Dict[int, CylFrame]] = None,
    tables: Optional[Dict[int, V1Table]] = None,
) -> SubSurface:
    """Target edges close to (or inside) the primitive whose trajectories
    stay clear of the target surface."""
    element = element or prim.element
    verts_f = np.array([to_float(v) for v in target.vertices])
    field_vals = evaluate_implicit_batch(prim, verts_f)
    edges = sorted(
        {tuple(sorted((int(f[i]), int(f[(i + 1) % 3])))) for f in
         target.triangles for i in range(3)}
    )
    chosen = []
    trajectories = {}
    tverts = {}
    for (i, j) in edges:
        near = False
        for k in (i, j):
            if field_vals[k] <= delta:
                near = True
        mid = 0.5 * (verts_f[i] + verts_f[j])
        if not near:
            if evaluate_implicit_batch(prim, mid[None, :])[0] <= delta:
                near = True
        if not near:
            continue
        try:
            traj = build_trajectory(
                (target.vertices[i], target.vertices[j]), element,
                frames=frames, tables=tables, edge_id=(i, j),
                reach=projection_reach(
                    prim, (target.vertices[i], target.vertices[j])
                ),
            )
        except GeometryError:
            continue
        if trajectory_intersects_target(traj, target):
            continue
        chosen.append((i, j))
        trajectories[(i, j)] = traj
        tverts[i] = target.vertices[i]
        tverts[j] = target.vertices[j]
    return SubSurface(chosen, trajectories, tverts)


def prim_shadow_positions(prim: DiscretizedPrimitive):
    from ..elements import realize_positions

    pos = realize_positions(prim)
    return [(rational(float(x)), rational(float(y)), rational(float(z)))
            for x, y, z in pos]


# ---------------------------------------------------------------------------
# trajectory construction


def _vertex_trajectory(edge_pts, m: Vec3, edge_id, reach: mpq) -> Trajectory:
    """Radial sector swept while projecting the edge from the skeletal
    vertex; the edge is scaled out along its projection rays so the
    sector crosses the whole primitive boundary."""
    a, b = edge_pts
    if vcross(vsub(a, m), vsub(b, m)) == (0, 0, 0):
        raise GeometryError("degenerate trajectory: edge collinear with center")
    # distance from m to the chord (float lower bound is enough: the
    # scale only needs to be large, not tight)
    af, bf, mf = to_float(a), to_float(b), to_float(m)
    d = np.subtract(bf, af)
    t = float(np.clip(np.dot(np.subtract(mf, af), d) / np.dot(d, d), 0, 1))
    dmin = float(np.linalg.norm(np.subtract(mf, np.add(af, t * d))))
    s = mpq(max(2, int(4 * float(reach) / max(dmin, 1e-12)) + 2))
    a_far = vadd(m, vscale(vsub(a, m), s))
    b_far = vadd(m, vscale(vsub(b, m), s))
    piece = TrajectoryPiece(
        K_TRIANGLE, [a_far, b_far, m], (a, b), medial_vertex=m
    )
    return Trajectory(edge_id, (a, b), [piece])


def _chart_quads(
    ca: CylCoord, cb: CylCoord, edge_pts, frame_key, reach: mpq,
    t_range=(mpq(0), mpq(1)),
) -> List[TrajectoryPiece]:
    """Chart-space parallelograms swept by projecting the (chart-linear)
    sub-edge radially: each spans the full radius range from the axis out
    past the primitive wall.  The sweep follows the shorter way around the
    axis and is split at quarter-turn azimuths so every sub-piece stays
    clear of both periodic chart boundaries."""
    from .frames import to_chart0 as _chart0

    r0, p0, z0 = ca
    r1, p1, z1 = cb
    if r0 == 0 or r1 == 0:
        raise GeometryError(
            "target endpoint on the medial axis: azimuth undefined"
        )
    if p0 == p1 and z0 == z1:
        raise GeometryError("degenerate chart trajectory piece")
    # shorter-way branch: chart where the azimuths do not wrap
    chart = 0
    if abs(p1 - p0) > PI_R:
        chart = 1
        p0 = to_chart((mpq(0), p0, mpq(0)), 1)[1]
        p1 = to_chart((mpq(0), p1, mpq(0)), 1)[1]
        if abs(p1 - p0) > PI_R:
            raise GeometryError(
                "trajectory sweeps more than a half turn around the axis"
            )
    cuts = [mpq(0), mpq(1)]
    if p0 != p1:
        for c in (-PI_R / 2, mpq(0), PI_R / 2):
            t = (c - p0) / (p1 - p0)
            if 0 < t < 1:
                cuts.append(t)
    cuts = sorted(set(cuts))
    zero = mpq(0)
    t_lo, t_hi = t_range
    pieces = []
    for ta, tb in zip(cuts[:-1], cuts[1:]):
        qa = p0 + ta * (p1 - p0)
        qb = p0 + tb * (p1 - p0)
        if chart == 1:
            qa = _chart0((mpq(0), qa, mpq(0)), 1)[1]
            qb = _chart0((mpq(0), qb, mpq(0)), 1)[1]
        za = z0 + ta * (z1 - z0)
        zb = z0 + tb * (z1 - z0)
        poly = [(zero, qa, za), (zero, qb, zb), (reach, qb, zb),
                (reach, qa, za)]
        pieces.append(
            TrajectoryPiece(
                K_CYL_QUAD, poly, tuple(edge_pts), frame_key=frame_key,
                t_range=(t_lo + ta * (t_hi - t_lo),
                         t_lo + tb * (t_hi - t_lo)),
            )
        )
    return pieces


def _edge_trajectory(edge_pts, frame: CylFrame, table: V1Table,
                     frame_key, edge_id, reach: mpq) -> Trajectory:
    ca = table.add(edge_pts[0])
    cb = table.add(edge_pts[1])
    return Trajectory(
        edge_id, tuple(edge_pts),
        _chart_quads(ca, cb, edge_pts, frame_key, reach),
    )


def _triangle_regions(tri: Sequence[Vec3]):
    """Plane normal and per-side outward data for a medial triangle."""
    n = triangle_normal(*tri)
    if n == (0, 0, 0):
        raise GeometryError("degenerate medial triangle")
    sides = []
    for k in range(3):
        a, b = tri[k], tri[(k + 1) % 3]
        d = vsub(b, a)
        outward = vcross(d, n)  # points away from the triangle interior?
        # orient so that the third vertex is on the negative side
        c = tri[(k + 2) % 3]
        if vdot(vsub(c, a), outward) > 0:
            outward = vscale(outward, -1)
        sides.append((a, b, d, outward))
    return n, sides


def _project_to_plane(p: Vec3, origin: Vec3, n: Vec3) -> Vec3:
    h = vdot(vsub(p, origin), n) / vnorm2(n)
    return vsub(p, vscale(n, h))


def _triangle_trajectory(edge_pts, tri, frames, tables, edge_id,
                         reach: mpq) -> Trajectory:
    """Split the target edge at exact region borders of the medial triangle
    and emit one piece per sub-interval (corner regions omitted)."""
    n, sides = _triangle_regions(tri)
    a, b = edge_pts
    pa = _project_to_plane(a, tri[0], n)
    pb = _project_to_plane(b, tri[0], n)
    dp = vsub(pb, pa)
    # side functions s_k(t) = ((p(t) - a_k) . outward_k), linear in t
    cuts = [mpq(0), mpq(1)]
    for (sa, _, _, out) in sides:
        c0 = vdot(vsub(pa, sa), out)
        c1 = vdot(vsub(pb, sa), out)
        if c0 == c1:
            continue
        t = c0 / (c0 - c1)
        if 0 < t < 1:
            cuts.append(t)
    # plane-side crossings: projection flips between the two slab faces
    h0 = vdot(vsub(a, tri[0]), n)
    h1 = vdot(vsub(b, tri[0]), n)
    if h0 != h1:
        t = h0 / (h0 - h1)
        if 0 < t < 1:
            cuts.append(t)
    # offset factor along n clearing the slab faces on either side
    n_len = math.sqrt(float(vnorm2(n)))
    k_off = mpq(max(2, int(4 * float(reach) / max(n_len, 1e-300)) + 2))
    # corner bisector crossings: boundary between two adjacent cylinder
    # regions happens where the projection passes a triangle corner's
    # perpendicular; approximate region choice via midpoint classification.
    cuts = sorted(set(cuts))
    pieces: List[TrajectoryPiece] = []
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        tm = (t0 + t1) / 2
        pm = lerp(pa, pb, tm)
        side_vals = [vdot(vsub(pm, sa), out) for (sa, _, _, out) in sides]
        e0 = lerp(a, b, t0)
        e1 = lerp(a, b, t1)
        if all(v <= 0 for v in side_vals):
            # plane region: parallelogram swept by the normal projection,
            # extended past the slab face on the sub-edge's side
            hm = vdot(vsub(lerp(a, b, tm), tri[0]), n)
            sigma = mpq(-1) if hm < 0 else mpq(1)
            off = vscale(n, sigma * k_off)
            q0 = vadd(e0, off)
            q1 = vadd(e1, off)
            if triangle_normal(e0, e1, q1) == (0, 0, 0):
                raise GeometryError("degenerate plane-region trajectory piece")
            pieces.append(
                TrajectoryPiece(
                    K_PLANE_QUAD, [e0, e1, q1, q0], (a, b),
                    plane_normal=n, t_range=(t0, t1),
                )
            )
            continue
        outside = [k for k, v in enumerate(side_vals) if v > 0]
        if len(outside) != 1:
            # corner (sphere) region: omitted
            continue
        k = outside[0]
        # clamp check: projection onto the side segment must be interior,
        # otherwise this is a corner region (omitted)
        sa, sb, d, _ = sides[k]
        w = vdot(vsub(pm, sa), d) / vnorm2(d)
        if w < 0 or w > 1:
            continue
        frame = frames[k]
        table = tables[k]
        ca = table.add(e0)
        cb = table.add(e1)
        pieces.extend(
            _chart_quads(ca, cb, (a, b), k, reach, t_range=(t0, t1))
        )
    if not pieces:
        raise GeometryError("trajectory entirely in omitted corner regions")
    return Trajectory(edge_id, (a, b), pieces)


def projection_reach(prim: DiscretizedPrimitive,
                     edge_pts: Tuple[Vec3, Vec3]) -> mpq:
    """Rational upper bound on how far the projection sweep must extend
    from the medial element to clear the primitive boundary and the
    target edge."""
    from ..elements import realize_positions

    pos = realize_positions(prim)
    c = prim.element.corner_array()[0]
    span = float(np.max(np.linalg.norm(pos - np.asarray(c, float), axis=1)))
    for p in edge_pts:
        span = max(
            span,
            float(np.linalg.norm(
                np.subtract(to_float(p), np.asarray(c, float))
            )),
        )
    return rational(2.0 * span + 1.0)


def build_trajectory(
    edge_pts: Tuple[Vec3, Vec3],
    element,
    frames: Optional[Dict[int, CylFrame]] = None,
    tables: Optional[Dict[int, V1Table]] = None,
    edge_id: Tuple[int, int] = (0, 1),
    reach: mpq = mpq(4),
) -> Trajectory:
    pts = element.corner_array()
    if element.kind == "vertex":
        m = (rational(float(pts[0][0])), rational(float(pts[0][1])),
             rational(float(pts[0][2])))
        return _vertex_trajectory(edge_pts, m, edge_id, reach)
    if frames is None or tables is None:
        raise GeometryError("chart trajectories need frames and tables")
    if element.kind == "edge":
        return _edge_trajectory(
            edge_pts, frames[0], tables[0], 0, edge_id, reach
        )
    tri = [
        (rational(float(p[0])), rational(float(p[1])),
         rational(float(p[2]))) for p in pts
    ]
    return _triangle_trajectory(
        edge_pts, tri, frames, tables, edge_id, reach
    )
