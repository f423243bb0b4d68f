"""Validated small-feature cleanup on exact meshes."""

import math
from collections import Counter

from gmpy2 import mpq

from msd.exact import lerp, to_float, vec
from msd.refine.cleanup import (
    DEFAULT_THRESHOLD,
    EditableMesh,
    cleanup,
)


def octahedron():
    verts = [vec(1, 0, 0), vec(-1, 0, 0), vec(0, 1, 0),
             vec(0, -1, 0), vec(0, 0, 1), vec(0, 0, -1)]
    tris = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
            (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return verts, tris


def split_octahedron(t):
    """Octahedron with edge (0, 4) split at parameter t."""
    verts, tris = octahedron()
    mesh = EditableMesh(verts, tris, set())
    mesh.split_edge(0, 4, lerp(verts[0], verts[4], t))
    v, tr, _ = mesh.compact()
    return v, tr


def edge_lengths(verts, tris):
    out = {}
    for t in tris:
        for k in range(3):
            e = frozenset((t[k], t[(k + 1) % 3]))
            a, b = tuple(e)
            out[e] = math.dist(to_float(verts[a]), to_float(verts[b]))
    return out


def assert_closed_oriented(verts, tris):
    undirected = Counter()
    directed = Counter()
    for t in tris:
        for k in range(3):
            a, b = t[k], t[(k + 1) % 3]
            undirected[frozenset((a, b))] += 1
            directed[(a, b)] += 1
    assert all(c == 2 for c in undirected.values())
    assert all(c == 1 for c in directed.values())
    chi = len(verts) - len(undirected) + len(tris)
    assert chi == 2


def test_short_edge_is_collapsed():
    v, tr = split_octahedron(mpq(1, 1000))
    out_v, out_t, _, log = cleanup(v, tr, set())
    assert log.collapsed_edges >= 1
    assert_closed_oriented(out_v, out_t)
    assert all(l >= DEFAULT_THRESHOLD
               for l in edge_lengths(out_v, out_t).values())


def test_protected_short_edge_survives():
    # the split point sits slightly off the original edge line so the
    # collinear pass cannot shorten the protected chain geometrically
    verts, tris = octahedron()
    mesh = EditableMesh(verts, tris, set())
    p = lerp(verts[0], verts[4], mpq(1, 1000))
    mesh.split_edge(0, 4, vec(p[0], p[1] + mpq(1, 10 ** 4), p[2]))
    v, tr, _ = mesh.compact()
    short = frozenset((0, 6))  # the split vertex is appended last
    out_v, out_t, out_prot, log = cleanup(v, tr, {short})
    lens = edge_lengths(out_v, out_t)
    assert any(l < DEFAULT_THRESHOLD for l in lens.values())
    # the surviving short edge is exactly the protected one
    assert len(out_prot) == 1
    (e,) = out_prot
    assert lens[e] < DEFAULT_THRESHOLD
    assert log.failures == []


def test_collinear_vertex_is_removed():
    v, tr = split_octahedron(mpq(1, 2))  # midpoint: long but collinear
    out_v, out_t, _, log = cleanup(v, tr, set())
    assert log.collapsed_collinear >= 1
    assert len(out_v) == 6
    assert len(out_t) == 8
    assert_closed_oriented(out_v, out_t)


def test_clean_mesh_is_untouched():
    v, tr = octahedron()
    out_v, out_t, _, log = cleanup(v, tr, set())
    assert out_v == v
    assert list(map(tuple, out_t)) == tr
    assert log.collapsed_edges == 0
    assert log.removed_triangles == 0
    assert log.collapsed_collinear == 0
    assert log.failures == []


def test_refused_collapse_is_logged():
    # every edge collapse on a tetrahedron violates the link condition,
    # so the short edge must survive with a logged refusal
    e = mpq(1, 1000)
    v = [vec(0, 0, 0), vec(e, 0, 0), vec(0, 1, 0), vec(0, 0, 1)]
    tr = [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)]
    out_v, out_t, _, log = cleanup(v, tr, set())
    lens = edge_lengths(out_v, out_t)
    short = [ed for ed, l in lens.items() if l < DEFAULT_THRESHOLD]
    assert short, "short edge disappeared without a valid collapse"
    assert log.failures, "surviving short edge must carry a logged refusal"
    assert_closed_oriented(out_v, out_t)


def test_small_triangle_needle_is_removed():
    # vertex 6 lies inside face (0, 2, 4) a hair away from edge (0, 2),
    # making the cap triangle (0, 2, 6) a sliver far below threshold^2
    v, tr = octahedron()
    delta = mpq(1, 10 ** 5)
    foot = lerp(v[0], v[2], mpq(2, 5))
    p = lerp(foot, v[4], delta)
    v = v + [p]
    tr = [t for t in tr if t != (0, 2, 4)] + [(0, 2, 6), (2, 4, 6), (4, 0, 6)]
    out_v, out_t, _, log = cleanup(v, tr, set())
    assert (log.collapsed_edges + log.removed_triangles
            + log.collapsed_collinear) >= 1
    assert_closed_oriented(out_v, out_t)
    thr2 = DEFAULT_THRESHOLD * DEFAULT_THRESHOLD
    for t in out_t:
        a, b, c = (to_float(out_v[i]) for i in t)
        ab = [b[k] - a[k] for k in range(3)]
        ac = [c[k] - a[k] for k in range(3)]
        cr = [ab[1] * ac[2] - ab[2] * ac[1],
              ab[2] * ac[0] - ab[0] * ac[2],
              ab[0] * ac[1] - ab[1] * ac[0]]
        assert math.hypot(*cr) / 2 >= thr2
