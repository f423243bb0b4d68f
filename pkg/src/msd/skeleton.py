"""Skeleton construction from a medial mesh and candidate sites.

Pipeline: restricted Voronoi diagram with element splitting, connected
component repair, dual triangulation, tetrahedron thinning, genus-aware
edge revision and domain decomposition.
"""

from __future__ import annotations

import heapq
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .mesh import (
    GeometryError,
    NonManifoldMesh,
    TriMesh,
    closest_point_on_element,
    point_inside,
)

SUBDIVISION_CAP = 20


class RevisionError(GeometryError):
    pass


@dataclass
class MedialMesh:
    """Raw or simplified medial axis: a simplicial 2-complex plus an
    informational per-vertex radius."""

    geometry: NonManifoldMesh
    radii: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.radii is not None:
            self.radii = np.asarray(self.radii, dtype=np.float64).ravel()
            if len(self.radii) != len(self.geometry.vertices):
                raise ValueError("radius count must match vertices")
        if self.connected_component_count() != 1:
            raise ValueError("medial mesh must be a single connected component")

    def connected_component_count(self) -> int:
        n = len(self.geometry.vertices)
        if n == 0:
            return 0
        adj = defaultdict(set)
        for u, v in self.geometry.edges:
            adj[u].add(v)
            adj[v].add(u)
        seen = set()
        comps = 0
        for start in range(n):
            if start in seen:
                continue
            comps += 1
            stack = [start]
            seen.add(start)
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
        return comps

    def project_point(self, x) -> np.ndarray:
        """Closest point on any element of the complex."""
        x = np.asarray(x, dtype=np.float64)
        g = self.geometry
        best, bd = None, np.inf
        tri_edges = set()
        for tri in g.triangles:
            p, _ = closest_point_on_element(x, g.vertices[list(tri)])
            d = np.linalg.norm(x - p)
            if d < bd:
                best, bd = p, d
            for e in combinations(sorted(tri), 2):
                tri_edges.add(e)
        for u, v in g.edges:
            if (u, v) in tri_edges:
                continue
            p, _ = closest_point_on_element(x, g.vertices[[u, v]])
            d = np.linalg.norm(x - p)
            if d < bd:
                best, bd = p, d
        for vi in g.isolated_vertices:
            d = np.linalg.norm(x - g.vertices[vi])
            if d < bd:
                best, bd = g.vertices[vi].copy(), d
        if best is None:
            raise GeometryError("empty medial mesh")
        return best


@dataclass
class SplitMesh:
    """Medial mesh after splitting at Voronoi bisectors.

    Elements are ("vertex", (i,)), ("edge", (i, j)) or ("tri", (i, j, k))
    over the split point array; `owner[e]` is the winning site index.
    """

    points: np.ndarray
    elements: List[Tuple[str, Tuple[int, ...]]]
    owner: np.ndarray

    def element_barycenter(self, ei: int) -> np.ndarray:
        return self.points[list(self.elements[ei][1])].mean(axis=0)

    def element_vertices(self, ei: int) -> Tuple[int, ...]:
        return self.elements[ei][1]


@dataclass
class RestrictedVoronoiCell:
    site_index: int
    site: np.ndarray
    elements: List[int] = field(default_factory=list)
    component_id: int = 0


@dataclass
class MedialSkeleton:
    geometry: NonManifoldMesh
    n_sites: int
    interfaces: Dict[Tuple[int, int], List[List[int]]] = field(default_factory=dict)
    added_edges: List[Tuple[int, int]] = field(default_factory=list)
    subdivided_edges: List[Tuple[int, int]] = field(default_factory=list)

    def pure_edges(self) -> List[Tuple[int, int]]:
        """Edges not bounding any triangle."""
        tri_edges = set()
        for a, b, c in self.geometry.triangles:
            tri_edges.update([(a, b), (b, c), (a, c)])
        return [e for e in self.geometry.edges if e not in tri_edges]

    def cycle_rank(self) -> int:
        """First Betti number of the skeleton's 1-skeleton graph."""
        n = len(self.geometry.vertices)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = n
        rank = 0
        for u, v in self.geometry.edges:
            ru, rv = find(u), find(v)
            if ru == rv:
                rank += 1
            else:
                parent[ru] = rv
                comps -= 1
        return rank


# ---------------------------------------------------------------------------
# restricted Voronoi diagram


class _PointBank:
    def __init__(self):
        self.points: List[np.ndarray] = []
        self.index: Dict[Tuple[float, float, float], int] = {}

    def add(self, p) -> int:
        p = np.asarray(p, dtype=np.float64)
        key = tuple(np.round(p, 9))
        if key in self.index:
            return self.index[key]
        idx = len(self.points)
        self.index[key] = idx
        self.points.append(p)
        return idx


def _nearest_site(p, sites: np.ndarray) -> int:
    d = np.linalg.norm(sites - p, axis=1)
    return int(np.argmin(d))


def _split_segment(p0, p1, sites, out, depth=0):
    """Recursively split segment p0-p1 at Voronoi bisector crossings.

    Appends (a, b, owner) subsegments to out.
    """
    s0 = _nearest_site(p0, sites)
    s1 = _nearest_site(p1, sites)
    if s0 == s1 or depth > 40 or np.linalg.norm(p1 - p0) < 1e-12:
        out.append((p0, p1, s0))
        return
    a, b = sites[s0], sites[s1]
    # |x-a|^2 = |x-b|^2 along x = p0 + t (p1-p0)
    d = p1 - p0
    denom = 2.0 * d.dot(b - a)
    if abs(denom) < 1e-15:
        t = 0.5
    else:
        t = (b.dot(b) - a.dot(a) - 2.0 * p0.dot(b - a)) / denom
    if t <= 1e-9 or t >= 1 - 1e-9:
        # bisector grazes an endpoint: no real crossing inside
        out.append((p0, p1, _nearest_site(0.5 * (p0 + p1), sites)))
        return
    mid = p0 + float(t) * d
    _split_segment(p0, mid, sites, out, depth + 1)
    _split_segment(mid, p1, sites, out, depth + 1)


def _clip_polygon_halfspace(poly, normal, offset):
    """Sutherland-Hodgman clip of a 3D convex polygon by n.x <= offset."""
    out = []
    k = len(poly)
    for i in range(k):
        cur, nxt = poly[i], poly[(i + 1) % k]
        dc = normal.dot(cur) - offset
        dn = normal.dot(nxt) - offset
        if dc <= 1e-12:
            out.append(cur)
        if (dc < -1e-12 and dn > 1e-12) or (dc > 1e-12 and dn < -1e-12):
            t = dc / (dc - dn)
            out.append(cur + t * (nxt - cur))
    return out


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    a = np.zeros(3)
    for i in range(1, len(poly) - 1):
        a += np.cross(poly[i] - poly[0], poly[i + 1] - poly[0])
    return 0.5 * float(np.linalg.norm(a))


def compute_rvd(
    medial: MedialMesh, sites: Sequence
) -> Tuple[List[RestrictedVoronoiCell], SplitMesh]:
    """Assign every element of the medial mesh to its nearest site,
    splitting elements that cross Voronoi bisectors."""
    sites = np.asarray(
        [medial.project_point(s) for s in sites], dtype=np.float64
    ).reshape(-1, 3)
    for i, j in combinations(range(len(sites)), 2):
        if np.linalg.norm(sites[i] - sites[j]) < 1e-12:
            raise ValueError(f"duplicate sites {i} and {j}")
    g = medial.geometry
    bank = _PointBank()
    elements: List[Tuple[str, Tuple[int, ...]]] = []
    owners: List[int] = []

    tri_edges = set()
    for tri in g.triangles:
        for e in combinations(sorted(tri), 2):
            tri_edges.add(e)
    tri_verts = set(v for tri in g.triangles for v in tri)
    edge_verts = set(v for e in g.edges for v in e)

    for vi in sorted(set(g.isolated_vertices) - tri_verts - edge_verts):
        elements.append(("vertex", (bank.add(g.vertices[vi]),)))
        owners.append(_nearest_site(g.vertices[vi], sites))

    for u, v in g.edges:
        if (u, v) in tri_edges:
            continue
        segs: List = []
        _split_segment(g.vertices[u], g.vertices[v], sites, segs)
        for a, b, s in segs:
            ia, ib = bank.add(a), bank.add(b)
            if ia != ib:
                elements.append(("edge", (ia, ib)))
                owners.append(s)

    for tri in g.triangles:
        corners = [g.vertices[i] for i in tri]
        area0 = _polygon_area(corners)
        for si in range(len(sites)):
            poly = [c.copy() for c in corners]
            a = sites[si]
            for sj in range(len(sites)):
                if sj == si or not poly:
                    continue
                b = sites[sj]
                normal = b - a
                offset = 0.5 * (b.dot(b) - a.dot(a))
                poly = _clip_polygon_halfspace(poly, normal, offset)
            if _polygon_area(poly) < max(1e-12, 1e-9 * area0):
                continue
            ids = [bank.add(p) for p in poly]
            # drop consecutive duplicates from clipping
            dedup = [ids[k] for k in range(len(ids)) if ids[k] != ids[k - 1]]
            if len(set(dedup)) < 3:
                continue
            for k in range(1, len(dedup) - 1):
                t = (dedup[0], dedup[k], dedup[k + 1])
                if len(set(t)) == 3:
                    elements.append(("tri", t))
                    owners.append(si)

    split = SplitMesh(np.asarray(bank.points), elements, np.asarray(owners))
    cells = [RestrictedVoronoiCell(i, sites[i]) for i in range(len(sites))]
    for ei, s in enumerate(owners):
        cells[s].elements.append(ei)
    return cells, split


# ---------------------------------------------------------------------------
# component repair


def _element_adjacency(split: SplitMesh, element_ids: Sequence[int]):
    by_vertex = defaultdict(list)
    for ei in element_ids:
        for vi in split.element_vertices(ei):
            by_vertex[vi].append(ei)
    adj = defaultdict(set)
    for group in by_vertex.values():
        for a, b in combinations(group, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _components(element_ids: Sequence[int], adj) -> List[List[int]]:
    seen = set()
    comps = []
    for start in sorted(element_ids):
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        comps.append(sorted(comp))
    return comps


def fix_components(
    cells: List[RestrictedVoronoiCell], split: SplitMesh
) -> List[RestrictedVoronoiCell]:
    """Reassign orphan connected components so every cell is a single
    component containing its site."""
    for _round in range(10):
        changed = False
        for cell in cells:
            if not cell.elements:
                continue
            adj = _element_adjacency(split, cell.elements)
            comps = _components(cell.elements, adj)
            if len(comps) <= 1:
                continue
            # the component containing (or nearest to) the site stays
            def comp_site_dist(comp):
                best = np.inf
                for ei in comp:
                    kind, vids = split.elements[ei]
                    p, _ = closest_point_on_element(
                        cell.site, split.points[list(vids)]
                    )
                    best = min(best, float(np.linalg.norm(cell.site - p)))
                return best

            keep = min(range(len(comps)), key=lambda k: comp_site_dist(comps[k]))
            global_by_vertex = defaultdict(set)
            for ei, (_, vids) in enumerate(split.elements):
                for vi in vids:
                    global_by_vertex[vi].add(ei)
            for k, comp in enumerate(comps):
                if k == keep:
                    continue
                bary = np.mean([split.element_barycenter(ei) for ei in comp], axis=0)
                neighbors = set()
                comp_set = set(comp)
                for ei in comp:
                    for vi in split.element_vertices(ei):
                        for ej in global_by_vertex[vi]:
                            o = int(split.owner[ej])
                            if ej not in comp_set and o != cell.site_index:
                                neighbors.add(o)
                if not neighbors:
                    continue
                target = min(
                    sorted(neighbors),
                    key=lambda s: (float(np.linalg.norm(cells[s].site - bary)), s),
                )
                for ei in comp:
                    split.owner[ei] = target
                    cell.elements.remove(ei)
                    cells[target].elements.append(ei)
                changed = True
        if not changed:
            break
    for cell in cells:
        cell.elements.sort()
        cell.component_id = 0
    return cells


# ---------------------------------------------------------------------------
# dual construction


def _interface_items(cells, split):
    """Shared (d-1)-interfaces between cell pairs.

    For 2D portions: split edges shared by sub-triangles of two owners.
    For 1D portions: split vertices shared by sub-edges of two owners.
    Returns {(i, j): list of items}, item = ("e", (u, v)) or ("v", (u,)).
    """
    edge_owners = defaultdict(set)
    vert_edge_owners = defaultdict(set)
    tri_vert_owners = defaultdict(set)
    for ei, (kind, vids) in enumerate(split.elements):
        o = int(split.owner[ei])
        if kind == "tri":
            for e in combinations(sorted(vids), 2):
                edge_owners[e].add(o)
            for v in vids:
                tri_vert_owners[v].add(o)
        elif kind == "edge":
            for v in vids:
                vert_edge_owners[v].add(o)
    interfaces = defaultdict(list)
    for e, os_ in sorted(edge_owners.items()):
        for i, j in combinations(sorted(os_), 2):
            interfaces[(i, j)].append(("e", e))
    for v, os_ in sorted(vert_edge_owners.items()):
        for i, j in combinations(sorted(os_), 2):
            interfaces[(i, j)].append(("v", (v,)))
    return interfaces, tri_vert_owners


def _interface_components(items) -> List[List]:
    """Connected components of interface items under shared split vertices."""
    by_vertex = defaultdict(list)
    for idx, (_, vids) in enumerate(items):
        for v in vids:
            by_vertex[v].append(idx)
    adj = defaultdict(set)
    for group in by_vertex.values():
        for a, b in combinations(group, 2):
            adj[a].add(b)
            adj[b].add(a)
    comps_idx = _components(range(len(items)), adj)
    return [[items[i] for i in comp] for comp in comps_idx]


def build_rdt(
    cells: List[RestrictedVoronoiCell], split: SplitMesh
) -> MedialSkeleton:
    """Dual of the restricted Voronoi diagram: vertex per site, edge per
    shared interface, triangle per triple of cells meeting at a point."""
    interfaces, tri_vert_owners = _interface_items(cells, split)
    edges = sorted(interfaces.keys())
    triangles = set()
    for v, os_ in sorted(tri_vert_owners.items()):
        if len(os_) >= 3:
            for trio in combinations(sorted(os_), 3):
                pairs = combinations(trio, 2)
                if all(p in interfaces for p in pairs):
                    triangles.add(trio)
    sites = np.asarray([c.site for c in cells])
    geom = NonManifoldMesh(sites, list(edges), sorted(triangles))
    comp_map = {
        pair: _interface_components(items) for pair, items in interfaces.items()
    }
    return MedialSkeleton(geom, n_sites=len(cells), interfaces=comp_map)


def thin_solids(skeleton: MedialSkeleton) -> MedialSkeleton:
    """Remove solid tetrahedra (4 mutually adjacent dual vertices with all
    four triangles present) by deleting one face per tetrahedron."""
    tris = set(skeleton.geometry.triangles)
    changed = True
    while changed:
        changed = False
        for tet in sorted(_find_tets(tris)):
            # drop the face opposite the lowest-index vertex
            face = tuple(sorted(tet[1:]))
            tris.discard(face)
            changed = True
            break
    geom = NonManifoldMesh(
        skeleton.geometry.vertices,
        list(skeleton.geometry.edges),
        sorted(tris),
        set(skeleton.geometry.isolated_vertices),
    )
    return MedialSkeleton(
        geom, skeleton.n_sites, skeleton.interfaces,
        skeleton.added_edges, skeleton.subdivided_edges,
    )


def _find_tets(tris: Set[Tuple[int, int, int]]):
    by_edge = defaultdict(set)
    for t in tris:
        for e in combinations(t, 2):
            by_edge[e].add(t)
    tets = set()
    for a, b, c in tris:
        # fourth vertex shared by faces adjacent to all three edges
        cand = set()
        for t in by_edge[(a, b)]:
            cand.update(t)
        for d in sorted(cand - {a, b, c}):
            tet = tuple(sorted((a, b, c, d)))
            faces = list(combinations(tet, 3))
            if all(f in tris for f in faces):
                tets.add(tet)
    return tets


# ---------------------------------------------------------------------------
# genus-aware edge revision


def _split_graph(split: SplitMesh):
    adj = defaultdict(dict)
    for kind, vids in split.elements:
        pairs = (
            [tuple(sorted(vids))]
            if kind == "edge"
            else list(combinations(sorted(vids), 2))
            if kind == "tri"
            else []
        )
        for u, v in pairs:
            w = float(np.linalg.norm(split.points[u] - split.points[v]))
            if v not in adj[u] or w < adj[u][v]:
                adj[u][v] = w
                adj[v][u] = w
    return adj


def _dijkstra(adj, sources: Dict[int, float]):
    dist = dict(sources)
    prev: Dict[int, int] = {}
    heap = [(d, v) for v, d in sources.items()]
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, np.inf):
            continue
        for u, w in adj[v].items():
            nd = d + w
            if nd < dist.get(u, np.inf) - 1e-15:
                dist[u] = nd
                prev[u] = v
                heapq.heappush(heap, (nd, u))
    return dist, prev


def _trace(prev, v) -> List[int]:
    path = [v]
    while v in prev:
        v = prev[v]
        path.append(v)
    return path[::-1]


def _segment_inside(target: TriMesh, a, b, n_samples: int = 9, tol: float = 1e-9) -> bool:
    for t in np.linspace(0.0, 1.0, n_samples):
        p = a + t * (b - a)
        if not point_inside(target, p):
            return False
    return True


def revise_edges(
    skeleton: MedialSkeleton,
    cells: List[RestrictedVoronoiCell],
    target: TriMesh,
    medial: MedialMesh,
    split: SplitMesh,
) -> MedialSkeleton:
    """Add one edge per extra isolated interface of a cell pair, then
    subdivide any skeleton edge that crosses the target surface, with new
    points taken from shortest paths on the medial mesh."""
    g = skeleton.geometry
    verts = [v.copy() for v in g.vertices]
    edges = set(g.edges)
    triangles = set(g.triangles)
    added: List[Tuple[int, int]] = []
    subdivided: List[Tuple[int, int]] = []

    adj = _split_graph(split)
    # virtual site attachment: site i connects to corners of its elements
    site_sources = {}
    for cell in cells:
        src = {}
        for ei in cell.elements:
            for vi in split.element_vertices(ei):
                d = float(np.linalg.norm(split.points[vi] - cell.site))
                if vi not in src or d < src[vi]:
                    src[vi] = d
        site_sources[cell.site_index] = src

    # (1) extra interfaces -> threading edges
    for (i, j), comps in sorted(skeleton.interfaces.items()):
        if len(comps) <= 1:
            continue
        dist_i, prev_i = _dijkstra(adj, site_sources[i])
        dist_j, prev_j = _dijkstra(adj, site_sources[j])
        for comp in comps[1:]:
            iface_verts = sorted({v for _, vids in comp for v in vids})
            best = min(
                iface_verts,
                key=lambda v: (dist_i.get(v, np.inf) + dist_j.get(v, np.inf), v),
            )
            chain = _trace(prev_i, best) + _trace(prev_j, best)[::-1][1:]
            points = [split.points[v] for v in chain]
            # shortcut while staying inside the target
            pts = [cells[i].site] + points + [cells[j].site]
            k = 0
            while k + 2 < len(pts):
                if _segment_inside(target, pts[k], pts[k + 2]):
                    del pts[k + 1]
                else:
                    k += 1
            chain_idx = [i]
            for p in pts[1:-1]:
                verts.append(np.asarray(p, dtype=np.float64))
                chain_idx.append(len(verts) - 1)
            chain_idx.append(j)
            for u, v in zip(chain_idx[:-1], chain_idx[1:]):
                e = tuple(sorted((u, v)))
                edges.add(e)
                added.append(e)

    # (2) subdivide edges that cross the target surface
    def nearest_split_vertex(p):
        d = np.linalg.norm(split.points - p, axis=1)
        return int(np.argmin(d))

    def subdivide(u: int, v: int, depth: int) -> List[int]:
        if _segment_inside(target, verts[u], verts[v]):
            return [u, v]
        if depth >= SUBDIVISION_CAP:
            raise RevisionError(
                f"edge ({u}, {v}) still crosses the surface after "
                f"{SUBDIVISION_CAP} subdivisions"
            )
        su, sv = nearest_split_vertex(verts[u]), nearest_split_vertex(verts[v])
        dist, prev = _dijkstra(adj, {su: 0.0})
        if sv in prev or sv == su:
            path = _trace(prev, sv)
        else:
            path = [su, sv]
        # midpoint of the path by arc length
        if len(path) >= 3:
            lens = np.cumsum(
                [0.0]
                + [
                    float(np.linalg.norm(split.points[a] - split.points[b]))
                    for a, b in zip(path[:-1], path[1:])
                ]
            )
            mid_i = int(np.argmin(np.abs(lens - lens[-1] / 2)))
            mid_i = min(max(mid_i, 1), len(path) - 2)
            mid = split.points[path[mid_i]]
        else:
            mid = medial.project_point(0.5 * (verts[u] + verts[v]))
        verts.append(np.asarray(mid, dtype=np.float64))
        m = len(verts) - 1
        if np.allclose(verts[m], verts[u]) or np.allclose(verts[m], verts[v]):
            raise RevisionError(f"subdivision of edge ({u}, {v}) stalled")
        left = subdivide(u, m, depth + 1)
        right = subdivide(m, v, depth + 1)
        return left[:-1] + right

    chains: Dict[Tuple[int, int], List[int]] = {}
    for u, v in sorted(edges):
        chain = subdivide(u, v, 0)
        if len(chain) > 2:
            chains[(u, v)] = chain
            subdivided.append((u, v))
    for (u, v), chain in chains.items():
        edges.discard((u, v))
        for a, b in zip(chain[:-1], chain[1:]):
            edges.add(tuple(sorted((a, b))))

    # (3) re-triangulate triangles whose edges were subdivided: replace
    # each subdivided boundary edge by its chain and fan the polygon
    new_tris = set()
    for tri in triangles:
        if not any(e in chains for e in combinations(sorted(tri), 2)):
            new_tris.add(tri)
            continue
        a, b, c = tri
        poly: List[int] = []
        for u, v in ((a, b), (b, c), (c, a)):
            e = tuple(sorted((u, v)))
            if e in chains:
                chain = chains[e] if chains[e][0] == u else chains[e][::-1]
            else:
                chain = [u, v]
            poly.extend(chain[:-1])
        for k in range(1, len(poly) - 1):
            t = tuple(sorted((poly[0], poly[k], poly[k + 1])))
            if len(set(t)) == 3:
                new_tris.add(t)

    geom = NonManifoldMesh(
        np.asarray(verts), sorted(edges), sorted(new_tris),
        set(skeleton.geometry.isolated_vertices),
    )
    return MedialSkeleton(
        geom, skeleton.n_sites, skeleton.interfaces, added, subdivided
    )


# ---------------------------------------------------------------------------
# domain decomposition


def decompose(skeleton: MedialSkeleton) -> Dict[Tuple[str, int], int]:
    """Label skeleton elements with connected-domain ids, cutting at
    vertices with a dimensional change or non-manifold incidence."""
    g = skeleton.geometry
    pure = skeleton.pure_edges()
    pure_idx = {e: i for i, e in enumerate(pure)}
    tri_by_edge = g.edge_triangles()

    vert_pure = defaultdict(list)
    for e in pure:
        vert_pure[e[0]].append(e)
        vert_pure[e[1]].append(e)
    vert_tris = defaultdict(list)
    for ti, tri in enumerate(g.triangles):
        for v in tri:
            vert_tris[v].append(ti)

    cut = set()
    for v in range(len(g.vertices)):
        if vert_pure[v] and vert_tris[v]:
            cut.add(v)  # dimensional change
        if len(vert_pure[v]) > 2:
            cut.add(v)  # curve junction
    for e, ts in tri_by_edge.items():
        if len(ts) > 2:
            cut.update(e)  # non-manifold sheet junction

    nodes = [("edge", i) for i in range(len(pure))] + [
        ("tri", i) for i in range(len(g.triangles))
    ]
    adj = defaultdict(set)
    for v, es in vert_pure.items():
        if v in cut:
            continue
        for e1, e2 in combinations(es, 2):
            a, b = ("edge", pure_idx[e1]), ("edge", pure_idx[e2])
            adj[a].add(b)
            adj[b].add(a)
    for e, ts in tri_by_edge.items():
        if len(ts) == 2:
            a, b = ("tri", ts[0]), ("tri", ts[1])
            adj[a].add(b)
            adj[b].add(a)

    labels: Dict[Tuple[str, int], int] = {}
    next_label = 0
    for node in nodes:
        if node in labels:
            continue
        queue = deque([node])
        labels[node] = next_label
        while queue:
            x = queue.popleft()
            for y in sorted(adj[x]):
                if y not in labels:
                    labels[y] = next_label
                    queue.append(y)
        next_label += 1
    return labels


# ---------------------------------------------------------------------------
# convenience driver


def build_skeleton(
    medial: MedialMesh, sites: Sequence, target: Optional[TriMesh] = None
) -> Tuple[MedialSkeleton, List[RestrictedVoronoiCell], SplitMesh]:
    cells, split = compute_rvd(medial, sites)
    cells = fix_components(cells, split)
    skeleton = build_rdt(cells, split)
    skeleton = thin_solids(skeleton)
    if target is not None:
        skeleton = revise_edges(skeleton, cells, target, medial, split)
    return skeleton, cells, split
