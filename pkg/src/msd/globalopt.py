"""Global candidate-vertex optimization: coverage + centrality + count
energies minimized by Nelder-Mead with projection onto the medial mesh
and incremental insertion at uncovered regions.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .elements import (
    DiscretizedPrimitive,
    MedialElement,
    build_canonical,
    evaluate_implicit_batch,
    medial_edge,
    medial_triangle,
    medial_vertex,
)
from .fitting import progressive_fit
from .mesh import GeometryError, TriMesh
from .skeleton import (
    MedialMesh,
    MedialSkeleton,
    RestrictedVoronoiCell,
    SplitMesh,
    build_skeleton,
)


@dataclass
class OptimConfig:
    delta: float = 0.01
    c1: float = 1.0
    c2: float = 1e-3
    stall_window: int = 5
    check_period: int = 30
    first_check: int = 50
    n_insert: int = 3
    max_iterations: int = 300
    init_count: int = 10
    fit_resolution: str = "low"
    simplex_scale: float = 0.05

    def __post_init__(self):
        if min(
            self.delta, self.c1, self.c2, self.stall_window, self.check_period,
            self.first_check, self.n_insert, self.max_iterations,
            self.init_count, self.simplex_scale,
        ) <= 0:
            raise ValueError("config values must be positive")


@dataclass
class EnergyBreakdown:
    coverage: float
    centrality: float
    count: float
    covered: np.ndarray
    c1: float = 1.0
    c2: float = 1e-3

    @property
    def total(self) -> float:
        return self.coverage + self.c1 * self.centrality + self.c2 * self.count


@dataclass
class Evaluation:
    energy: EnergyBreakdown
    skeleton: Optional[MedialSkeleton]
    primitives: List[DiscretizedPrimitive]
    cells: List[RestrictedVoronoiCell]
    split: Optional[SplitMesh]
    candidates: np.ndarray


# ---------------------------------------------------------------------------
# initial candidates


def _medial_graph(medial: MedialMesh):
    adj = defaultdict(dict)
    g = medial.geometry
    for u, v in g.edges:
        w = float(np.linalg.norm(g.vertices[u] - g.vertices[v]))
        adj[u][v] = w
        adj[v][u] = w
    return adj


def _graph_distances(adj, n: int, source: int) -> np.ndarray:
    import heapq

    dist = np.full(n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u, w in adj[v].items():
            if d + w < dist[u]:
                dist[u] = d + w
                heapq.heappush(heap, (d + w, u))
    return dist


def init_candidates(medial: MedialMesh, k: int) -> np.ndarray:
    """Greedy farthest-point sampling under graph shortest-path distance;
    seeded at the vertex with maximum total distance to all others."""
    n = len(medial.geometry.vertices)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds medial vertex count {n}")
    adj = _medial_graph(medial)
    all_dists = np.array([_graph_distances(adj, n, s) for s in range(n)])
    finite = np.where(np.isfinite(all_dists), all_dists, 0.0)
    seed = int(np.argmax(finite.sum(axis=1)))
    chosen = [seed]
    mind = all_dists[seed].copy()
    while len(chosen) < k:
        nxt = int(np.argmax(np.where(np.isfinite(mind), mind, -1.0)))
        if nxt in chosen:
            remaining = [i for i in range(n) if i not in chosen]
            nxt = remaining[0]
        chosen.append(nxt)
        mind = np.minimum(mind, all_dists[nxt])
    return medial.geometry.vertices[chosen].copy()


# ---------------------------------------------------------------------------
# energy evaluation


def skeleton_elements(skeleton: MedialSkeleton) -> List[MedialElement]:
    g = skeleton.geometry
    elems: List[MedialElement] = [medial_vertex(v) for v in g.vertices]
    for u, v in skeleton.pure_edges():
        elems.append(medial_edge(g.vertices[u], g.vertices[v]))
    for a, b, c in g.triangles:
        elems.append(medial_triangle(g.vertices[a], g.vertices[b], g.vertices[c]))
    return elems


def fit_skeleton_primitives(
    skeleton: MedialSkeleton, target: TriMesh, resolution: str = "low",
    epsilon: float = 0.1,
) -> List[DiscretizedPrimitive]:
    prims = []
    for el in skeleton_elements(skeleton):
        boundary = build_canonical(el, epsilon, resolution)
        prim = DiscretizedPrimitive(el, boundary, np.full(boundary.n_vertices, 1e-3))
        prims.append(progressive_fit(prim, target))
    return prims


def coverage_test(
    vertex: np.ndarray, primitives: Sequence[DiscretizedPrimitive], delta: float
) -> bool:
    """True iff some primitive's implicit value at the vertex is below delta."""
    v = np.asarray(vertex, dtype=np.float64)[None, :]
    return any(float(evaluate_implicit_batch(p, v)[0]) < delta for p in primitives)


def covered_bitmap(
    target: TriMesh, primitives: Sequence[DiscretizedPrimitive], delta: float
) -> np.ndarray:
    vals = np.full(len(target.vertices), np.inf)
    for p in primitives:
        vals = np.minimum(vals, evaluate_implicit_batch(p, target.vertices))
    return vals < delta


def centrality_energy(
    cells: Sequence[RestrictedVoronoiCell], split: SplitMesh
) -> float:
    """Sum of squared distances from each site to its cell's
    measure-weighted centroid."""
    total = 0.0
    for cell in cells:
        if not cell.elements:
            continue
        wsum = 0.0
        acc = np.zeros(3)
        for ei in cell.elements:
            kind, vids = split.elements[ei]
            pts = split.points[list(vids)]
            if kind == "tri":
                w = 0.5 * float(
                    np.linalg.norm(np.cross(pts[1] - pts[0], pts[2] - pts[0]))
                )
            elif kind == "edge":
                w = float(np.linalg.norm(pts[1] - pts[0]))
            else:
                w = 1.0
            wsum += w
            acc += w * pts.mean(axis=0)
        if wsum > 0:
            centroid = acc / wsum
            total += float(np.sum((cell.site - centroid) ** 2))
    return total


def evaluate(
    medial: MedialMesh,
    target: TriMesh,
    candidates: np.ndarray,
    config: OptimConfig,
) -> Evaluation:
    """Full pipeline evaluation: project, build skeleton, fit, score."""
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 3)
    projected = np.array([medial.project_point(c) for c in candidates])
    try:
        skeleton, cells, split = build_skeleton(medial, projected, target=target)
        prims = fit_skeleton_primitives(
            skeleton, target, config.fit_resolution
        )
    except (GeometryError, ValueError):
        energy = EnergyBreakdown(
            coverage=0.0, centrality=np.inf, count=0.0,
            covered=np.zeros(len(target.vertices), dtype=bool),
            c1=config.c1, c2=config.c2,
        )
        return Evaluation(energy, None, [], [], None, projected)
    covered = covered_bitmap(target, prims, config.delta)
    areas = target.vertex_areas(normalized=True)
    coverage = -float(areas[covered].sum())
    centrality = centrality_energy(cells, split)
    count = float(abs(len(skeleton.geometry.vertices) - len(projected)))
    energy = EnergyBreakdown(
        coverage, centrality, count, covered, c1=config.c1, c2=config.c2
    )
    return Evaluation(energy, skeleton, prims, cells, split, projected)


# ---------------------------------------------------------------------------
# Nelder-Mead

NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5


class NelderMead:
    """Step-wise Nelder-Mead simplex over flattened coordinates."""

    def __init__(self, f: Callable[[np.ndarray], float], x0: np.ndarray, scale: float):
        self.f = f
        n = len(x0)
        self.points = [x0.copy()]
        for i in range(n):
            p = x0.copy()
            p[i] += scale
            self.points.append(p)
        self.values = [f(p) for p in self.points]
        self._sort()

    def _sort(self):
        order = np.argsort(self.values, kind="stable")
        self.points = [self.points[i] for i in order]
        self.values = [self.values[i] for i in order]

    @property
    def best(self) -> Tuple[np.ndarray, float]:
        return self.points[0], self.values[0]

    def step(self):
        f = self.f
        pts, vals = self.points, self.values
        centroid = np.mean(pts[:-1], axis=0)
        worst = pts[-1]
        xr = centroid + NM_REFLECT * (centroid - worst)
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + NM_EXPAND * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + NM_CONTRACT * (xr - centroid)
            else:
                xc = centroid - NM_CONTRACT * (centroid - worst)
            fc = f(xc)
            if fc < min(fr, vals[-1]):
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, len(pts)):
                    pts[i] = pts[0] + NM_SHRINK * (pts[i] - pts[0])
                    vals[i] = f(pts[i])
        self._sort()


# ---------------------------------------------------------------------------
# uncovered-region insertion


def uncovered_regions(target: TriMesh, covered: np.ndarray) -> List[List[int]]:
    """Connected components of uncovered target vertices, largest area
    first."""
    uncovered = np.nonzero(~covered)[0]
    unset = set(int(i) for i in uncovered)
    areas = target.vertex_areas(normalized=True)
    comps = []
    seen = set()
    for start in sorted(unset):
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in sorted(target.vertex_neighbors(x)):
                if y in unset and y not in seen:
                    seen.add(y)
                    queue.append(y)
        comps.append(comp)
    comps.sort(key=lambda c: (-float(areas[c].sum()), c[0]))
    return comps


# ---------------------------------------------------------------------------
# driver


@dataclass
class TraceRecord:
    iteration: int
    coverage: float
    centrality: float
    count: float
    total: float
    best_total: float
    n_candidates: int


@dataclass
class OptimResult:
    candidates: np.ndarray
    evaluation: Evaluation
    trace: List[TraceRecord]
    iterations: int
    stopped_by: str


def _quantize_key(coords: np.ndarray) -> bytes:
    return np.round(coords / 1e-7).astype(np.int64).tobytes()


def optimize(
    medial: MedialMesh,
    target: TriMesh,
    config: Optional[OptimConfig] = None,
    initial: Optional[np.ndarray] = None,
    energy_fn: Optional[Callable[[np.ndarray], float]] = None,
) -> OptimResult:
    """Nelder-Mead over free candidates with freezing, projection, and
    periodic insertion at uncovered regions; returns the best-so-far.

    `energy_fn` replaces the pipeline energy for surrogate testing; it
    receives the (n, 3) candidate array.
    """
    config = config or OptimConfig()
    if initial is None:
        initial = init_candidates(medial, config.init_count)
    candidates = np.asarray(initial, dtype=np.float64).reshape(-1, 3).copy()

    bbox = target.vertices.max(axis=0) - target.vertices.min(axis=0)
    scale = config.simplex_scale * float(np.linalg.norm(bbox))

    cache: Dict[bytes, Evaluation] = {}

    def full_eval(cands: np.ndarray) -> Evaluation:
        key = _quantize_key(cands)
        if key not in cache:
            cache[key] = evaluate(medial, target, cands, config)
        return cache[key]

    frozen = np.zeros(len(candidates), dtype=bool)
    best_eval: Optional[Evaluation] = None
    best_total = np.inf
    best_candidates = candidates.copy()
    trace: List[TraceRecord] = []
    stopped_by = "max-iterations"

    def make_objective(frozen_mask):
        fixed = candidates[frozen_mask]

        def f(x: np.ndarray) -> float:
            free = x.reshape(-1, 3)
            cands = (
                np.vstack([fixed, free]) if len(fixed) else free
            )
            if energy_fn is not None:
                return float(energy_fn(cands))
            return full_eval(cands).energy.total

        return f

    def assemble(frozen_mask, x):
        free = x.reshape(-1, 3)
        fixed = candidates[frozen_mask]
        return np.vstack([fixed, free]) if len(fixed) else free

    nm = NelderMead(
        make_objective(frozen), candidates[~frozen].ravel(), scale
    )
    stall = 0
    it = 0
    next_check = config.first_check
    while it < config.max_iterations:
        it += 1
        nm.step()
        x, fx = nm.best
        cands = assemble(frozen, x)
        if energy_fn is not None:
            cur_cov = 0.0
            cur = EnergyBreakdown(fx, 0.0, 0.0, np.zeros(0, dtype=bool))
            improved = fx < best_total - 1e-12
            if improved:
                best_total = fx
                best_candidates = cands
        else:
            ev = full_eval(cands)
            cur = ev.energy
            improved = cur.total < best_total - 1e-12
            if improved:
                best_total = cur.total
                best_eval = ev
                best_candidates = ev.candidates.copy()
        stall = 0 if improved else stall + 1
        trace.append(
            TraceRecord(
                it, cur.coverage, cur.centrality, cur.count, cur.total,
                best_total, len(cands),
            )
        )
        if energy_fn is None and best_eval is not None:
            if best_eval.energy.covered.all():
                stopped_by = "full-coverage"
                break
        if stall >= config.stall_window:
            stopped_by = "stall"
            break
        if energy_fn is None and it >= next_check:
            next_check += config.check_period
            if best_eval is None:
                continue
            regions = uncovered_regions(target, best_eval.energy.covered)
            if not regions:
                continue
            new_pts = []
            for comp in regions[: config.n_insert]:
                center = target.vertices[comp].mean(axis=0)
                new_pts.append(medial.project_point(center))
            candidates = np.vstack([best_candidates, new_pts])
            frozen = np.zeros(len(candidates), dtype=bool)
            frozen[: len(best_candidates)] = True
            nm = NelderMead(
                make_objective(frozen), candidates[~frozen].ravel(), scale
            )
            stall = 0

    if energy_fn is not None:
        final_eval = Evaluation(
            EnergyBreakdown(best_total, 0.0, 0.0, np.zeros(0, dtype=bool)),
            None, [], [], None, best_candidates,
        )
    else:
        final_eval = best_eval if best_eval is not None else full_eval(best_candidates)
    return OptimResult(best_candidates, final_eval, trace, it, stopped_by)
