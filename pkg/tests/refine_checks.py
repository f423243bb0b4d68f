"""Shared validation helpers for exact-refinement tests."""

from collections import Counter

import numpy as np
from gmpy2 import mpq

from msd.exact import (
    collinear,
    lerp,
    point_in_triangle,
    rational,
    to_float,
    triangle_normal,
    vadd,
    vcross,
    vdot,
    vec,
    vnorm2,
    vscale,
    vsub,
)
from msd.refine import refine_primitive
from msd.refine.corefine import (
    build_work_mesh,
    corefine_primitive,
    corefined_equal,
)
from msd.refine.trajectory import select_subsurface


def seam_equivalence(prim, target, delta=0.01):
    """Parallel per-triangle corefinement equals the whole-mesh pass with
    exact rational equality of vertex and edge sets."""
    work = build_work_mesh(prim)
    sub = select_subsurface(
        target, prim, delta, frames=work.frames, tables=work.tables
    )
    trajs = [sub.trajectories[e] for e in sub.edges]
    c_par = corefine_primitive(work, trajs, parallel=True)
    c_ser = corefine_primitive(work, trajs, parallel=False)
    return corefined_equal(c_par, c_ser)


def edge_use_counts(triangles):
    counts = Counter()
    for t in triangles:
        for k in range(3):
            counts[frozenset((t[k], t[(k + 1) % 3]))] += 1
    return counts


def assert_refinement_valid(ref, expect_selected=None):
    """Bitwise target-vertex match, exactly-collinear edge chains, closed
    oriented manifold with sphere topology, no degenerate faces."""
    if expect_selected is not None:
        assert len(ref.subsurface.edges) == expect_selected

    vset = set(ref.vertices)
    for i, p in ref.subsurface.target_vertices.items():
        assert p in vset, f"target vertex {i} not bitwise present"

    idx = {v: i for i, v in enumerate(ref.vertices)}
    counts = edge_use_counts(ref.triangles)
    adj = {}
    for e in counts:
        a, b = tuple(e)
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    for i, j in ref.subsurface.edges:
        pa = ref.subsurface.target_vertices[i]
        pb = ref.subsurface.target_vertices[j]
        ia, ib = idx[pa], idx[pb]
        seen, front = {ia}, [ia]
        found = False
        while front:
            x = front.pop()
            if x == ib:
                found = True
                break
            for y in adj.get(x, ()):
                if y not in seen and (
                    y == ib or collinear(pa, pb, ref.vertices[y])
                ):
                    seen.add(y)
                    front.append(y)
        assert found, f"no exactly-collinear chain for target edge {(i, j)}"

    assert all(c == 2 for c in counts.values()), "mesh not closed"
    chi = len(ref.vertices) - len(counts) + len(ref.triangles)
    assert chi == 2, f"Euler characteristic {chi}"
    directed = Counter()
    for t in ref.triangles:
        for k in range(3):
            directed[(t[k], t[(k + 1) % 3])] += 1
    assert all(c == 1 for c in directed.values()), "inconsistent orientation"
    for t in ref.triangles:
        assert triangle_normal(*(ref.vertices[v] for v in t)) != (0, 0, 0)


def refine_and_check(prim, target, delta=0.01, expect_selected=None):
    ref = refine_primitive(prim, target, delta=delta)
    assert_refinement_valid(ref, expect_selected)
    return ref


def _closest_on_segment(a, b, p):
    u = vsub(b, a)
    t = vdot(vsub(p, a), u) / vnorm2(u)
    t = min(max(t, mpq(0)), mpq(1))
    return vadd(a, vscale(u, t))


def _closest_on_triangle(a, b, c, p):
    """Exact closest point on a triangle (Voronoi-region case analysis)."""
    ab, ac, ap = vsub(b, a), vsub(c, a), vsub(p, a)
    d1, d2 = vdot(ab, ap), vdot(ac, ap)
    if d1 <= 0 and d2 <= 0:
        return a
    bp = vsub(p, b)
    d3, d4 = vdot(ab, bp), vdot(ac, bp)
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return vadd(a, vscale(ab, d1 / (d1 - d3)))
    cp = vsub(p, c)
    d5, d6 = vdot(ab, cp), vdot(ac, cp)
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return vadd(a, vscale(ac, d2 / (d2 - d6)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return vadd(b, vscale(vsub(c, b),
                              (d4 - d3) / ((d4 - d3) + (d5 - d6))))
    den = va + vb + vc
    return vadd(a, vadd(vscale(ab, vb / den), vscale(ac, vc / den)))


def element_base_point(element, v):
    """Exact closest point on the medial element to vertex `v`."""
    c = [vec(*(rational(float(x)) for x in row))
         for row in element.corner_array()]
    if element.kind == "vertex":
        return c[0]
    if element.kind == "edge":
        return _closest_on_segment(c[0], c[1], v)
    return _closest_on_triangle(c[0], c[1], c[2], v)


def vertex_ray_crossing_counts(ref, prim):
    """Exact crossing count, per refined vertex, of the ray from the
    nearest medial-element point through that vertex.

    Hit points are deduplicated exactly so edge/vertex hits count once;
    a vertex lying exactly on the element reports -1 (no ray defined).
    """
    tris = [tuple(ref.vertices[v] for v in t) for t in ref.triangles]
    normals = [triangle_normal(*t) for t in tris]
    counts = []
    for v in ref.vertices:
        o = element_base_point(prim.element, v)
        d = vsub(v, o)
        if d == (0, 0, 0):
            counts.append(-1)
            continue
        hits = set()
        for t, n in zip(tris, normals):
            dn = vdot(n, d)
            if dn == 0:
                continue
            s = vdot(n, vsub(t[0], o)) / dn
            if s <= 0:
                continue
            p = vadd(o, vscale(d, s))
            if point_in_triangle(p, *t):
                hits.add(p)
        counts.append(len(hits))
    return counts


def exact_ray_crossing_counts(ref, prim):
    """Exact crossing count of each canonical-direction ray against the
    refined surface (brute force over all triangles, rational arithmetic).

    Rays start on the medial element (the canonical base point) and run
    along the canonical outward direction; intersection points are
    deduplicated exactly so edge and vertex hits count once.
    """
    b = prim.boundary
    counts = []
    tris = [tuple(ref.vertices[v] for v in t) for t in ref.triangles]
    normals = [triangle_normal(*t) for t in tris]
    for base_f, dir_f in zip(b.base_points, b.directions):
        o = vec(*(rational(float(x)) for x in base_f))
        d = vec(*(rational(float(x)) for x in dir_f))
        hits = set()
        for t, n in zip(tris, normals):
            dn = vdot(n, d)
            if dn == 0:
                continue  # parallel; endpoints are caught by neighbors
            s = vdot(n, vsub(t[0], o)) / dn
            if s <= 0:
                continue
            p = vadd(o, vscale(d, s))
            if point_in_triangle(p, *t):
                hits.add(p)
        counts.append(len(hits))
    return counts
