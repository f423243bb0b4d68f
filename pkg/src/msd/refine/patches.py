"""Redundant-edge removal: triangle surface patches whose geometry is
implied by three projected target edges are re-triangulated without their
interior vertices and edges."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from gmpy2 import mpq

from ..exact import GeometryError, vdot, vsub
from .corefine import CorefinedPrimitive
from .triangulate2d import polygon_area2, triangulate_polygon


def _edge_map(triangles) -> Dict[FrozenSet[int], List[int]]:
    out: Dict[FrozenSet[int], List[int]] = {}
    for t, tri in enumerate(triangles):
        for k in range(3):
            out.setdefault(frozenset((tri[k], tri[(k + 1) % 3])), []).append(t)
    return out


def _regions(coref: CorefinedPrimitive):
    """BFS triangle regions bounded by target-projected edges."""
    tagged = set(coref.tagged_edges)
    edges = _edge_map(coref.triangles)
    region = [-1] * len(coref.triangles)
    n_regions = 0
    for seed in range(len(coref.triangles)):
        if region[seed] >= 0:
            continue
        stack = [seed]
        region[seed] = n_regions
        while stack:
            t = stack.pop()
            tri = coref.triangles[t]
            for k in range(3):
                e = frozenset((tri[k], tri[(k + 1) % 3]))
                if e in tagged:
                    continue
                for t2 in edges[e]:
                    if region[t2] < 0:
                        region[t2] = n_regions
                        stack.append(t2)
        n_regions += 1
    return region, n_regions, edges


def _tags_form_triangle(tags: Set[Tuple[int, int]]) -> bool:
    if len(tags) != 3:
        return False
    verts: Set[int] = set()
    for t in tags:
        verts.update(t)
    return len(verts) == 3


def _boundary_cycle(tri_ids, triangles, boundary_edges):
    """Ordered boundary vertex cycle of a triangle region (region kept on
    the left, following triangle orientation)."""
    directed = {}
    for t in tri_ids:
        tri = triangles[t]
        for k in range(3):
            u, v = tri[k], tri[(k + 1) % 3]
            if frozenset((u, v)) in boundary_edges:
                directed[u] = v
    if not directed:
        raise GeometryError("region has no boundary")
    start = next(iter(directed))
    cycle = [start]
    cur = directed[start]
    while cur != start:
        cycle.append(cur)
        if cur not in directed or len(cycle) > len(directed) + 1:
            raise GeometryError("open or non-manifold region boundary")
        cur = directed[cur]
    if len(cycle) != len(directed):
        raise GeometryError("region boundary is not a single cycle")
    return cycle


@dataclass
class SimplifyReport:
    patches: int = 0
    merged: int = 0
    removed_vertices: int = 0
    skipped: List[str] = field(default_factory=list)


def simplify_patches(
    coref: CorefinedPrimitive,
) -> Tuple[CorefinedPrimitive, SimplifyReport]:
    region, n_regions, edges = _regions(coref)
    report = SimplifyReport()

    # tags on each region's boundary
    region_tags: List[Set] = [set() for _ in range(n_regions)]
    region_tris: List[List[int]] = [[] for _ in range(n_regions)]
    for t, r in enumerate(region):
        region_tris[r].append(t)
    neighbors: List[Set[int]] = [set() for _ in range(n_regions)]
    for e, tags in coref.tagged_edges.items():
        owners = {region[t] for t in edges.get(e, [])}
        for r in owners:
            region_tags[r].update(tags)
            neighbors[r].update(owners - {r})

    is_patch = [
        _tags_form_triangle(region_tags[r]) for r in range(n_regions)
    ]

    def group_boundary(inside: Set[int]):
        """Boundary tagged edges of a region group; tags interior to the
        group (both incident triangles inside) are the removable ones."""
        boundary = set()
        btags: Set = set()
        for e, tags in coref.tagged_edges.items():
            owners = {region[t] for t in edges.get(e, [])}
            if owners and owners.issubset(inside) and len(owners) > 1:
                continue
            if owners & inside:
                boundary.add(e)
                btags.update(tags)
        return boundary, btags

    # merge a patch surrounded by three patches: its boundary target edges
    # are redundant too — but only when the merged union is again a patch
    parent = list(range(n_regions))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r in range(n_regions):
        if not (is_patch[r] and len(neighbors[r]) == 3
                and all(is_patch[s] for s in neighbors[r])):
            continue
        union = set()
        for s in {r} | neighbors[r]:
            root = find(s)
            union.update(
                x for x in range(n_regions) if find(x) == root
            )
        _, btags = group_boundary(union)
        if not _tags_form_triangle(btags):
            continue
        for s in neighbors[r]:
            parent[find(s)] = find(r)
        report.merged += 1

    groups: Dict[int, List[int]] = {}
    for r in range(n_regions):
        groups.setdefault(find(r), []).append(r)

    new_triangles: List[Tuple[int, int, int]] = []
    new_tagged: Dict[FrozenSet[int], Set] = {}

    def keep_tags(edge_set):
        for e in edge_set:
            new_tagged.setdefault(e, set()).update(coref.tagged_edges[e])

    def keep_raw(inside: Set[int], tri_ids):
        """Emit a group unchanged, keeping every tagged edge it touches."""
        for t in tri_ids:
            new_triangles.append(coref.triangles[t])
        keep_tags(
            e for e in coref.tagged_edges
            if {region[t] for t in edges.get(e, [])} & inside
        )

    def retriangulate(inside: Set[int], tri_ids) -> bool:
        boundary, btags = group_boundary(inside)
        if not _tags_form_triangle(btags):
            return False
        try:
            cycle = _boundary_cycle(tri_ids, coref.triangles, boundary)
            tris = _retriangulate_cycle(cycle, coref.cartesian)
        except GeometryError as exc:
            report.skipped.append(str(exc))
            return False
        new_triangles.extend(tris)
        keep_tags(boundary)
        return True

    for root, members in groups.items():
        inside = set(members)
        tri_ids = [t for r in members for t in region_tris[r]]
        if len(members) > 1 and all(is_patch[r] for r in members):
            if retriangulate(inside, tri_ids):
                report.patches += len(members)
                continue
        # fall back to simplifying each member region on its own
        for r in members:
            if is_patch[r] and retriangulate({r}, region_tris[r]):
                report.patches += 1
            else:
                keep_raw({r}, region_tris[r])

    # compact unused vertices
    used = sorted({v for t in new_triangles for v in t})
    remap = {v: i for i, v in enumerate(used)}
    report.removed_vertices = len(coref.cartesian) - len(used)
    out = CorefinedPrimitive(
        [coref.cartesian[v] for v in used],
        [tuple(remap[v] for v in t) for t in new_triangles],
        [coref.provenance[v] for v in used],
        [coref.target_vertex[v] for v in used],
        [coref.owner_edges[v] for v in used],
        [coref.projection[v] for v in used],
        {
            frozenset(remap[v] for v in e): tags
            for e, tags in new_tagged.items()
            if all(v in remap for v in e)
        },
    )
    return out, report


def _retriangulate_cycle(cycle: List[int], cartesian) -> List[Tuple[int, int, int]]:
    """Ear-clip a boundary cycle in the plane spanned by three spread
    corners of the cycle (exact affine chart)."""
    p0 = cartesian[cycle[0]]
    # pick two further cycle vertices giving a non-degenerate basis
    u = v = None
    for i in range(1, len(cycle)):
        cand = vsub(cartesian[cycle[i]], p0)
        if any(x != 0 for x in cand):
            u = cand
            break
    for i in range(1, len(cycle)):
        cand = vsub(cartesian[cycle[i]], p0)
        cr = (
            u[1] * cand[2] - u[2] * cand[1],
            u[2] * cand[0] - u[0] * cand[2],
            u[0] * cand[1] - u[1] * cand[0],
        )
        if any(x != 0 for x in cr):
            v = cand
            break
    if u is None or v is None:
        raise GeometryError("degenerate patch boundary")
    pts2 = []
    for idx in cycle:
        d = vsub(cartesian[idx], p0)
        pts2.append((vdot(d, u), vdot(d, v)))
    local = list(range(len(cycle)))
    flipped = False
    if polygon_area2(local, pts2) < 0:
        local = local[::-1]
        flipped = True
    tris = triangulate_polygon(local, pts2)
    if flipped:
        # keep surface orientation consistent with the boundary cycle
        return [(cycle[c], cycle[b], cycle[a]) for a, b, c in tris]
    return [(cycle[a], cycle[b], cycle[c]) for a, b, c in tris]
