"""Exact corefinement of a primitive mesh against projection trajectories.

Each primitive triangle is corefined independently in its working space
(Cartesian, or a cylindrical chart for wall triangles), then the pieces
are seamed back by exact coordinate comparison; triangles processed in
the rotated chart are reconciled through the fixed rational azimuth
shift.  A sequential whole-mesh route shares one vertex bank and serves
as the oracle the parallel route must match exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from gmpy2 import mpq

from ..exact import (
    GeometryError,
    Vec3,
    convex_polygon_triangle_clip,
    lerp,
    orient2d,
    rational,
    triangle_normal,
    triangle_triangle_segment,
    vcross,
    vdot,
    vnorm2,
    vsub,
)
from ..elements import (
    DiscretizedPrimitive,
    R_CAP,
    R_HALF_CYL,
    R_PLANE,
    R_SPHERE,
    R_WALL,
    R_WEDGE,
    realize_positions,
)
from .frames import (
    PI_R,
    CylCoord,
    CylFrame,
    V1Table,
    barycentric_weight_cyl,
    to_chart,
    to_chart0,
)
from .trajectory import (
    K_CYL_QUAD,
    K_PLANE_QUAD,
    K_TRIANGLE,
    Trajectory,
    TrajectoryPiece,
)
from .triangulate2d import triangulate_constrained

PROV_ORIGINAL = "original-primitive"
PROV_ENDPOINT = "projected-target-endpoint"
PROV_INTERSECTION = "corefinement-intersection"


# ---------------------------------------------------------------------------
# working mesh


@dataclass
class WorkTriangle:
    region: Tuple                      # ("cart",) or ("cyl", edge_index)
    corners_work: List                 # chart-0 working coords
    corners_cart: List[Vec3]
    corner_ids: Tuple[int, int, int]
    frame: Optional[CylFrame] = None
    source_face: int = -1


@dataclass
class WorkMesh:
    triangles: List[WorkTriangle]
    passthrough: List[Tuple[List[Vec3], Tuple[int, int, int]]]
    frames: Dict[int, CylFrame]
    tables: Dict[int, V1Table]
    vertices_cart: List[Vec3]


def _exact_positions(prim: DiscretizedPrimitive) -> List[Vec3]:
    pos = realize_positions(prim)
    return [
        (rational(float(x)), rational(float(y)), rational(float(z)))
        for x, y, z in pos
    ]


def build_work_mesh(prim: DiscretizedPrimitive,
                    precision_bits: int = 120) -> WorkMesh:
    """Exact working mesh of a realized primitive, with chart tables for
    cylindrical regions.  Cap / corner-sphere faces pass through uncut."""
    element = prim.element
    cart = _exact_positions(prim)
    faces = prim.boundary.faces
    regions = prim.boundary.face_regions
    frames: Dict[int, CylFrame] = {}
    tables: Dict[int, V1Table] = {}
    tris: List[WorkTriangle] = []
    passthrough = []
    corners = element.corner_array()

    if element.kind == "vertex":
        for fi, f in enumerate(faces):
            ids = tuple(int(i) for i in f)
            cs = [cart[i] for i in ids]
            tris.append(WorkTriangle(("cart",), cs, cs, ids, source_face=fi))
        return WorkMesh(tris, passthrough, frames, tables, cart)

    def exact_pt(p):
        return (rational(float(p[0])), rational(float(p[1])),
                rational(float(p[2])))

    if element.kind == "edge":
        a, b = exact_pt(corners[0]), exact_pt(corners[1])
        frames[0] = CylFrame(a, b, precision_bits=precision_bits)
        tables[0] = V1Table(frames[0])
        for fi, f in enumerate(faces):
            ids = tuple(int(i) for i in f)
            cs = [cart[i] for i in ids]
            if regions[fi] == R_WALL:
                work = [tables[0].add(c) for c in cs]
                tris.append(
                    WorkTriangle(("cyl", 0), work, cs, ids, frames[0],
                                 source_face=fi)
                )
            else:
                passthrough.append((cs, ids))
        return WorkMesh(tris, passthrough, frames, tables, cart)

    # triangle element: plane faces in Cartesian, each half-cylinder wall in
    # the chart of its nearest medial side, wedges pass through.
    tri_exact = [exact_pt(c) for c in corners]
    n = triangle_normal(*tri_exact)
    for k in range(3):
        a, b = tri_exact[k], tri_exact[(k + 1) % 3]
        frames[k] = CylFrame(a, b, reference=n, precision_bits=precision_bits)
        tables[k] = V1Table(frames[k])
    import numpy as np

    corners_f = np.asarray(corners, dtype=float)
    pos_f = realize_positions(prim)
    for fi, f in enumerate(faces):
        ids = tuple(int(i) for i in f)
        cs = [cart[i] for i in ids]
        region = regions[fi]
        if region == R_PLANE:
            tris.append(WorkTriangle(("cart",), cs, cs, ids, source_face=fi))
        elif region == R_HALF_CYL:
            centroid = pos_f[f].mean(axis=0)
            best, best_d = 0, float("inf")
            for k in range(3):
                p0 = corners_f[k]
                d = corners_f[(k + 1) % 3] - p0
                t = float(np.clip(np.dot(centroid - p0, d) / np.dot(d, d),
                                  0.0, 1.0))
                dist = float(np.linalg.norm(centroid - (p0 + t * d)))
                if dist < best_d:
                    best, best_d = k, dist
            work = [tables[best].add(c) for c in cs]
            tris.append(
                WorkTriangle(("cyl", best), work, cs, ids, frames[best],
                             source_face=fi)
            )
        else:
            passthrough.append((cs, ids))
    return WorkMesh(tris, passthrough, frames, tables, cart)


# ---------------------------------------------------------------------------
# chart selection


def _azimuth_arc(phis: Sequence[mpq]) -> Tuple[int, mpq, mpq]:
    """Shortest circular arc covering chart-0 azimuths, as (chart, lo, hi)
    in whichever chart the arc does not cross the periodic boundary.
    The two representations of the half-turn direction (±pi) count as the
    same direction."""
    for flip in (False, True):
        for chart in (0, 1):
            vals = [to_chart((mpq(0), p, mpq(0)), chart)[1] for p in phis]
            if flip:
                if not any(abs(v) == PI_R for v in vals):
                    continue
                vals = [-v if abs(v) == PI_R else v for v in vals]
            if max(vals) - min(vals) <= PI_R:
                return chart, min(vals), max(vals)
    raise GeometryError("azimuth span exceeds a half turn in both charts")


def _arc_interval(arc: Tuple[int, mpq, mpq]) -> Tuple[mpq, mpq]:
    """Arc as an unwrapped chart-0 interval (may extend past the seam)."""
    chart, lo, hi = arc
    return (lo, hi) if chart == 0 else (lo + PI_R, hi + PI_R)


def _arcs_overlap(a: Tuple[int, mpq, mpq], b: Tuple[int, mpq, mpq]) -> bool:
    a0, a1 = _arc_interval(a)
    b0, b1 = _arc_interval(b)
    two = 2 * PI_R
    return any(
        a0 <= b1 + k * two and b0 + k * two <= a1 for k in (-1, 0, 1)
    )


def _arc_in_chart(arc: Tuple[int, mpq, mpq],
                  chart: int) -> Optional[Tuple[mpq, mpq]]:
    """Arc as a connected interval of chart `chart` coordinates, or None
    if it crosses that chart's periodic boundary strictly."""
    ca, lo, hi = arc
    if chart == ca:
        return lo, hi
    if lo >= 0:
        return lo - PI_R, hi - PI_R
    if hi <= 0:
        return lo + PI_R, hi + PI_R
    return None


def choose_chart(
    tri_arc: Tuple[int, mpq, mpq],
    piece_arcs: Sequence[Tuple[int, mpq, mpq]],
    strategy: str = "prefer-zero",
) -> Tuple[int, Tuple[mpq, mpq]]:
    """Processing chart for one triangle and the azimuth window (hull of
    the triangle and its relevant pieces) inside that chart."""
    options = []
    for chart in (0, 1):
        ivs = [_arc_in_chart(a, chart) for a in [tri_arc] + list(piece_arcs)]
        if all(iv is not None for iv in ivs):
            window = (min(iv[0] for iv in ivs), max(iv[1] for iv in ivs))
            options.append((chart, ivs[0], window))
    if not options:
        raise GeometryError(
            "no chart avoids the periodic boundary: tessellation too sparse"
        )
    if strategy == "prefer-zero" or len(options) == 1:
        chart, _, window = options[0]
        return chart, window
    # balance: keep the triangle's own azimuths smallest, exercising
    # cross-chart seaming for triangles near the periodic boundary
    chart, _, window = min(
        options, key=lambda o: max(abs(o[1][0]), abs(o[1][1]))
    )
    return chart, window


def _proc_phi(phi: mpq, chart: int, window: Tuple[mpq, mpq]) -> mpq:
    """Azimuth in processing-chart coordinates, resolving the ±pi
    identification towards the processing window."""
    v = to_chart((mpq(0), phi, mpq(0)), chart)[1]
    if abs(v) == PI_R and not (window[0] <= v <= window[1]) and \
            window[0] <= -v <= window[1]:
        return -v
    return v


def _canon0(c: CylCoord, chart: int) -> CylCoord:
    """Processing-chart coordinates back to canonical chart-0 form."""
    rho, phi, z = c
    if chart == 1:
        phi = phi + PI_R if phi < 0 else phi - PI_R
    if phi == -PI_R:
        phi = PI_R
    return (rho, phi, z)


# ---------------------------------------------------------------------------
# single-triangle corefinement


@dataclass
class LocalVertex:
    work: Tuple          # chart-0 working coords (or Cartesian)
    provenance: str
    cart: Optional[Vec3] = None              # exact Cartesian position
    target_vertex: Optional[int] = None      # for projected endpoints
    owner_edges: Set[Tuple[int, int]] = field(default_factory=set)
    corner_slot: Optional[int] = None        # 0..2 for original corners
    piece: Optional[TrajectoryPiece] = None  # a piece this vertex lies on


@dataclass
class TriangleResult:
    tri: WorkTriangle
    vertices: List[LocalVertex]
    triangles: List[Tuple[int, int, int]]
    tagged_edges: Dict[FrozenSet[int], Set[Tuple[int, int]]]


def _piece_segments(piece: TrajectoryPiece, tri_work: List, conv):
    """Constraint segment of one trajectory piece against one triangle,
    in processing-chart coordinates."""
    poly = piece.polygon
    if piece.kind == K_CYL_QUAD:
        poly = [conv(p) for p in poly]
    if len(poly) == 3:
        if triangle_normal(*poly) == (0, 0, 0):
            return None
        return triangle_triangle_segment(poly, tri_work)
    return convex_polygon_triangle_clip(poly, tri_work)


def _point_on_segment(p, a, b) -> bool:
    if vcross(vsub(p, a), vsub(b, a)) != (0, 0, 0):
        return False
    d = vsub(b, a)
    t = vdot(vsub(p, a), d)
    return 0 <= t <= vnorm2(d)


def _endpoint_boundaries(piece: TrajectoryPiece, conv):
    """Working-space boundary segments of the piece that correspond to the
    two swept target endpoints, as (segment, endpoint_slot) pairs."""
    poly = piece.polygon
    if piece.kind == K_CYL_QUAD:
        # [(0,p0,z0), (0,p1,z1), (reach,p1,z1), (reach,p0,z0)]:
        # endpoint sweeps are the radial sides at fixed (phi, z)
        poly = [conv(p) for p in poly]
        out = [((poly[0], poly[3]), 0), ((poly[1], poly[2]), 1)]
    elif piece.kind == K_TRIANGLE:
        a, b, m = poly
        out = [((a, m), 0), ((b, m), 1)]
    else:
        # plane quad [e0, e1, q1, q0]: sweeps are (e0, q0) and (e1, q1)
        e0, e1, q1, q0 = poly
        out = [((e0, q0), 0), ((e1, q1), 1)]
    # interior cut borders of a split trajectory are not endpoint sweeps
    keep = []
    if piece.t_range[0] == 0:
        keep.append(out[0])
    if piece.t_range[1] == 1:
        keep.append(out[1])
    return keep


def corefine_work_triangle(
    tri: WorkTriangle,
    piece_list: Sequence[Tuple[TrajectoryPiece, Trajectory]],
    chart_strategy: str = "prefer-zero",
) -> TriangleResult:
    chart = 0
    conv = None
    if tri.region[0] == "cyl":
        # only pieces whose azimuth arc can reach this triangle matter
        tri_arc = _azimuth_arc([c[1] for c in tri.corners_work])
        piece_list = [
            (p, tr) for p, tr in piece_list
            if _arcs_overlap(tri_arc, _azimuth_arc([q[1] for q in p.polygon]))
        ]
        piece_arcs = [
            _azimuth_arc([q[1] for q in p.polygon]) for p, _ in piece_list
        ]
        chart, window = choose_chart(tri_arc, piece_arcs, chart_strategy)

        def conv(c):
            return (c[0], _proc_phi(c[1], chart, window), c[2])

        tri_work = [conv(c) for c in tri.corners_work]
    else:
        tri_work = list(tri.corners_work)

    # raw constraint segments
    raw = []
    for piece, traj in piece_list:
        seg = _piece_segments(piece, tri_work, conv)
        if seg is None:
            continue
        raw.append((seg[0], seg[1], traj.edge_id, piece))

    # 2D projection of the triangle plane
    n = triangle_normal(*tri_work)
    if n == (0, 0, 0):
        raise GeometryError("degenerate primitive triangle")
    drop = max(range(3), key=lambda k: abs(n[k]))
    axes = [k for k in range(3) if k != drop]

    def p2(p):
        return (p[axes[0]], p[axes[1]])

    if orient2d(p2(tri_work[0]), p2(tri_work[1]), p2(tri_work[2])) < 0:
        axes = axes[::-1]

    pts2: List = []
    pts3: List = []
    index: Dict = {}

    def add_point(p3):
        key = p2(p3)
        if key in index:
            return index[key]
        index[key] = len(pts2)
        pts2.append(key)
        pts3.append(p3)
        return index[key]

    for c in tri_work:
        add_point(c)

    segments = [
        {"a": s[0], "b": s[1], "tag": s[2], "piece": s[3]} for s in raw
    ]
    for s in segments:
        add_point(s["a"])
        add_point(s["b"])

    # pairwise proper crossings become shared points
    from ..exact import segment_segment_intersect_2d

    for i in range(len(segments)):
        for j in range(i + 1, len(segments)):
            si, sj = segments[i], segments[j]
            hit = segment_segment_intersect_2d(
                p2(si["a"]), p2(si["b"]), p2(sj["a"]), p2(sj["b"])
            )
            if hit is None:
                continue
            t, _ = hit
            add_point(lerp(si["a"], si["b"], t))

    # split each segment at every point lying on it
    constraints: List[Tuple[int, int, Tuple[int, int], TrajectoryPiece]] = []
    for s in segments:
        a2, b2 = p2(s["a"]), p2(s["b"])
        d = (b2[0] - a2[0], b2[1] - a2[1])
        n2 = d[0] * d[0] + d[1] * d[1]
        if n2 == 0:
            continue
        on = []
        for idx, q in enumerate(pts2):
            if orient2d(a2, b2, q) != 0:
                continue
            t = ((q[0] - a2[0]) * d[0] + (q[1] - a2[1]) * d[1]) / n2
            if 0 <= t <= 1:
                on.append((t, idx))
        on.sort(key=lambda x: x[0])
        for (t0, i0), (t1, i1) in zip(on[:-1], on[1:]):
            if i0 != i1:
                constraints.append((i0, i1, s["tag"], s["piece"]))

    tri_local = triangulate_constrained(
        pts2, [(c[0], c[1]) for c in constraints]
    )

    # provenance
    vertices: List[LocalVertex] = []
    boundary_info = {}
    for s in segments:
        for seg, slot in _endpoint_boundaries(s["piece"], conv):
            boundary_info.setdefault(id(s["piece"]), []).append(
                (seg, slot, s["tag"])
            )
    piece_by_tag = {s["tag"]: s["piece"] for s in segments}
    for li, p3 in enumerate(pts3):
        if tri.region[0] == "cyl":
            work0 = _canon0(p3, chart)
            cart = tri.corners_cart[li] if li < 3 else \
                recover_cartesian(tri_work, tri.corners_cart, p3)
        else:
            work0 = p3
            cart = p3
        owners: Set[Tuple[int, int]] = set()
        for i0, i1, tag, _ in constraints:
            if li in (i0, i1):
                owners.add(tag)
        if li < 3 and not owners:
            vertices.append(
                LocalVertex(work0, PROV_ORIGINAL, cart=cart, corner_slot=li)
            )
            continue
        # a primitive corner crossed by a projected curve joins the curve
        prov = PROV_INTERSECTION
        tv = None
        for s in segments:
            for seg, slot, tag in boundary_info.get(id(s["piece"]), []):
                if _point_on_segment(p3, seg[0], seg[1]):
                    prov = PROV_ENDPOINT
                    tv = tag[slot]
                    owners.add(tag)
        piece = piece_by_tag.get(sorted(owners)[0])
        vertices.append(
            LocalVertex(
                work0, prov, cart=cart, target_vertex=tv,
                owner_edges=owners,
                corner_slot=li if li < 3 else None, piece=piece,
            )
        )

    tagged: Dict[FrozenSet[int], Set[Tuple[int, int]]] = {}
    for i0, i1, tag, _ in constraints:
        tagged.setdefault(frozenset((i0, i1)), set()).add(tag)
    return TriangleResult(tri, vertices, tri_local, tagged)


# ---------------------------------------------------------------------------
# Cartesian recovery and seaming


def recover_cartesian(cw: List, cc: List[Vec3], p3) -> Vec3:
    """Exact Cartesian position of a chart-space point inside the triangle
    with chart corners `cw` and Cartesian corners `cc` (barycentric weights
    in chart space applied to the Cartesian corners).  All chart points
    must use one consistent processing chart."""
    for k in range(3):
        a, b = cw[k], cw[(k + 1) % 3]
        if _point_on_segment(p3, a, b):
            w = barycentric_weight_cyl(p3, a, b)
            return lerp(cc[k], cc[(k + 1) % 3], w)
    # interior: 2D barycentric solve in chart space
    n = triangle_normal(*cw)
    drop = max(range(3), key=lambda k: abs(n[k]))
    axes = [k for k in range(3) if k != drop]

    def p2(p):
        return (p[axes[0]], p[axes[1]])

    a, b, c = (p2(x) for x in cw)
    p = p2(p3)
    den = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    w1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / den
    w2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / den
    w0 = 1 - w1 - w2
    return tuple(
        w0 * cc[0][k] + w1 * cc[1][k] + w2 * cc[2][k] for k in range(3)
    )


@dataclass
class CorefinedPrimitive:
    cartesian: List[Vec3]
    triangles: List[Tuple[int, int, int]]
    provenance: List[str]
    target_vertex: List[Optional[int]]
    owner_edges: List[Set[Tuple[int, int]]]
    projection: List[Optional[Tuple]]  # per-vertex update rule
    tagged_edges: Dict[FrozenSet[int], Set[Tuple[int, int]]]

    def edge_keys(self, keys) -> Set[FrozenSet]:
        out = set()
        for t in self.triangles:
            for k in range(3):
                out.add(frozenset((keys[t[k]], keys[t[(k + 1) % 3]])))
        return out


def _projection_rule(tri: WorkTriangle, piece: Optional[TrajectoryPiece]):
    if piece is None:
        return None
    if piece.kind == K_TRIANGLE:
        return ("radial", piece.medial_vertex)
    if piece.kind == K_PLANE_QUAD:
        return ("plane", piece.plane_normal)
    return ("axis", tri.region[1])


def seam(
    results: Sequence[TriangleResult],
    work: WorkMesh,
) -> CorefinedPrimitive:
    cart: List[Vec3] = []
    provenance: List[str] = []
    target_vertex: List[Optional[int]] = []
    owner_edges: List[Set] = []
    projection: List[Optional[Tuple]] = []
    triangles: List[Tuple[int, int, int]] = []
    tagged: Dict[FrozenSet[int], Set] = {}
    bank: Dict[Vec3, int] = {}

    priority = {PROV_ORIGINAL: 0, PROV_INTERSECTION: 1, PROV_ENDPOINT: 2}

    def global_index(tri: WorkTriangle, lv: LocalVertex) -> int:
        p = lv.cart
        rule = _projection_rule(tri, lv.piece) if lv.piece is not None \
            else None
        if p in bank:
            gi = bank[p]
            if priority[lv.provenance] > priority[provenance[gi]]:
                provenance[gi] = lv.provenance
                if lv.provenance == PROV_ENDPOINT:
                    target_vertex[gi] = lv.target_vertex
            owner_edges[gi] |= lv.owner_edges
            if projection[gi] is None:
                projection[gi] = rule
            return gi
        gi = len(cart)
        bank[p] = gi
        cart.append(p)
        provenance.append(lv.provenance)
        target_vertex.append(lv.target_vertex)
        owner_edges.append(set(lv.owner_edges))
        projection.append(rule)
        return gi

    for res in results:
        gmap = [global_index(res.tri, lv) for lv in res.vertices]
        for t in res.triangles:
            triangles.append((gmap[t[0]], gmap[t[1]], gmap[t[2]]))
        for key, tags in res.tagged_edges.items():
            a, b = tuple(key)
            gk = frozenset((gmap[a], gmap[b]))
            tagged.setdefault(gk, set()).update(tags)

    # passthrough faces (caps / corner spheres)
    for cs, ids in work.passthrough:
        gis = []
        for p in cs:
            if p in bank:
                gis.append(bank[p])
            else:
                gi = len(cart)
                bank[p] = gi
                cart.append(p)
                provenance.append(PROV_ORIGINAL)
                target_vertex.append(None)
                owner_edges.append(set())
                projection.append(None)
                gis.append(gi)
        triangles.append(tuple(gis))

    return CorefinedPrimitive(
        cart, triangles, provenance, target_vertex, owner_edges,
        projection, tagged,
    )


def corefine_primitive(
    work: WorkMesh,
    trajectories: Sequence[Trajectory],
    parallel: bool = True,
) -> CorefinedPrimitive:
    """Corefine the primitive against all trajectories.

    parallel=True corefines each triangle independently, letting every
    triangle pick its locally best chart, then seams; parallel=False is
    the sequential whole-mesh route that keeps every triangle in chart 0
    whenever possible.  Both must produce exactly equal labeled meshes.
    """
    strategy = "balance" if parallel else "prefer-zero"
    results = []
    for tri in work.triangles:
        piece_list = []
        for traj in trajectories:
            for piece in traj.pieces:
                if tri.region[0] == "cart" and piece.kind in (
                    K_TRIANGLE, K_PLANE_QUAD
                ):
                    piece_list.append((piece, traj))
                elif tri.region[0] == "cyl" and piece.kind == K_CYL_QUAD \
                        and piece.frame_key == tri.region[1]:
                    piece_list.append((piece, traj))
        results.append(
            corefine_work_triangle(tri, piece_list, chart_strategy=strategy)
        )
    return seam(results, work)


def corefined_equal(a: CorefinedPrimitive, b: CorefinedPrimitive) -> bool:
    """Labeled exact-mesh equality: vertex coordinate sets and edge sets."""
    va = set(a.cartesian)
    vb = set(b.cartesian)
    if va != vb:
        return False
    ka = {i: p for i, p in enumerate(a.cartesian)}
    kb = {i: p for i, p in enumerate(b.cartesian)}
    ea = {frozenset((ka[t[i]], ka[t[(i + 1) % 3]])) for t in a.triangles
          for i in range(3)}
    eb = {frozenset((kb[t[i]], kb[t[(i + 1) % 3]])) for t in b.triangles
          for i in range(3)}
    return ea == eb
