"""Restricted Voronoi diagrams, their duals, and skeleton construction."""

from itertools import combinations

import numpy as np
import pytest

from msd.mesh import NonManifoldMesh
from msd.skeleton import (
    MedialMesh,
    MedialSkeleton,
    build_rdt,
    build_skeleton,
    compute_rvd,
    decompose,
    fix_components,
    thin_solids,
)


def sheet_medial(n=5):
    """Flat triangulated square sheet in the z = 0 plane."""
    xs = np.linspace(0.0, 1.0, n)
    verts = np.array([[x, y, 0.0] for y in xs for x in xs])
    tris = []
    for j in range(n - 1):
        for i in range(n - 1):
            a = j * n + i
            tris.append((a, a + 1, a + n))
            tris.append((a + 1, a + n + 1, a + n))
    return MedialMesh(NonManifoldMesh(verts, [], tris))


def loop_medial(n=12, radius=1.0):
    """Closed polygonal loop of edges (a curve skeleton)."""
    ang = 2 * np.pi * np.arange(n) / n
    verts = np.stack([radius * np.cos(ang), radius * np.sin(ang),
                      np.zeros(n)], axis=1)
    edges = [(i, (i + 1) % n) for i in range(n)]
    return MedialMesh(NonManifoldMesh(verts, edges, []))


def nearest_site(p, sites):
    return int(np.argmin(np.linalg.norm(sites - p, axis=1)))


def test_rvd_ownership_matches_nearest_site_oracle():
    medial = sheet_medial(5)
    sites = [(0.1, 0.1, 0), (0.9, 0.2, 0), (0.5, 0.9, 0)]
    cells, split = compute_rvd(medial, sites)
    site_arr = np.array([c.site for c in cells])
    for ei, (kind, vids) in enumerate(split.elements):
        bary = split.points[list(vids)].mean(axis=0)
        assert int(split.owner[ei]) == nearest_site(bary, site_arr), (
            f"element {ei} ({kind}) owned by {split.owner[ei]}"
        )


def test_rvd_ownership_on_curve_skeleton():
    medial = loop_medial(16)
    sites = [medial.geometry.vertices[k] for k in (0, 5, 11)]
    cells, split = compute_rvd(medial, sites)
    site_arr = np.array([c.site for c in cells])
    for ei, (kind, vids) in enumerate(split.elements):
        assert kind == "edge"
        bary = split.points[list(vids)].mean(axis=0)
        assert int(split.owner[ei]) == nearest_site(bary, site_arr)


def test_rvd_rejects_duplicate_sites():
    medial = sheet_medial(3)
    with pytest.raises(ValueError):
        compute_rvd(medial, [(0.2, 0.2, 0), (0.2, 0.2, 0)])


def rdt_edge_oracle(cells, split):
    """Brute-force shared-interface scan, independent of the dual build:
    a pair of cells is adjacent when sub-triangles of both owners share a
    split edge, or sub-edges of both owners share a split vertex."""
    edge_owners = {}
    vert_owners = {}
    for ei, (kind, vids) in enumerate(split.elements):
        o = int(split.owner[ei])
        if kind == "tri":
            for e in combinations(sorted(vids), 2):
                edge_owners.setdefault(e, set()).add(o)
        elif kind == "edge":
            for v in vids:
                vert_owners.setdefault(v, set()).add(o)
    pairs = set()
    for owners in list(edge_owners.values()) + list(vert_owners.values()):
        for pair in combinations(sorted(owners), 2):
            pairs.add(pair)
    return pairs


@pytest.mark.parametrize("fixture,sites", [
    ("sheet", [(0.1, 0.1, 0), (0.9, 0.2, 0), (0.5, 0.9, 0), (0.6, 0.5, 0)]),
    ("loop", "auto"),
])
def test_rdt_duality_matches_shared_face_scan(fixture, sites):
    if fixture == "sheet":
        medial = sheet_medial(5)
    else:
        medial = loop_medial(16)
        sites = [medial.geometry.vertices[k] for k in (0, 4, 8, 12)]
    cells, split = compute_rvd(medial, sites)
    skeleton = build_rdt(cells, split)
    assert set(skeleton.geometry.edges) == rdt_edge_oracle(cells, split)


def test_rdt_on_loop_has_cycle_rank_one():
    medial = loop_medial(16)
    sites = [medial.geometry.vertices[k] for k in (0, 4, 8, 12)]
    cells, split = compute_rvd(medial, sites)
    skeleton = build_rdt(cells, split)
    assert skeleton.cycle_rank() == 1
    assert len(skeleton.geometry.edges) == 4


def test_fix_components_leaves_single_component_cells():
    medial = sheet_medial(6)
    sites = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), (0.5, 0.5, 0)]
    cells, split = compute_rvd(medial, sites)
    cells = fix_components(cells, split)
    from msd.skeleton import _components, _element_adjacency

    for cell in cells:
        if not cell.elements:
            continue
        comps = _components(
            cell.elements, _element_adjacency(split, cell.elements)
        )
        assert len(comps) == 1


def test_thin_solids_removes_full_tetrahedra():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    edges = [tuple(e) for e in combinations(range(4), 2)]
    tris = [tuple(t) for t in combinations(range(4), 3)]
    sk = MedialSkeleton(NonManifoldMesh(verts, edges, tris), n_sites=4)
    thinned = thin_solids(sk)
    assert len(thinned.geometry.triangles) == 3
    # all 1-skeleton edges survive
    assert set(thinned.geometry.edges) == set(sk.geometry.edges)


def test_decompose_separates_sheet_from_curve():
    # triangle sheet with a dangling curve edge attached at vertex 0
    verts = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0]], dtype=float
    )
    g = NonManifoldMesh(verts, [(0, 3)], [(0, 1, 2)])
    labels = decompose(MedialSkeleton(g, n_sites=4))
    assert labels[("edge", 0)] != labels[("tri", 0)]


def test_skeleton_vertices_stay_on_medial_mesh(sphere_target):
    medial = sheet_medial(5)
    # shrink the sheet so it fits inside the unit sphere target
    g = medial.geometry
    medial = MedialMesh(
        NonManifoldMesh(
            (g.vertices - 0.5) * 0.8, list(g.edges), list(g.triangles)
        )
    )
    sites = [(-0.3, -0.3, 0), (0.3, -0.3, 0), (0, 0.3, 0)]
    skeleton, cells, split = build_skeleton(medial, sites, target=sphere_target)
    for v in skeleton.geometry.vertices:
        p = medial.project_point(v)
        assert np.linalg.norm(np.asarray(p) - v) < 1e-9
