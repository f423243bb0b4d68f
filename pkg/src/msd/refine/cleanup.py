"""Mesh cleanup: collapse small edges, eliminate small triangles through
a projected split vertex, and remove exactly collinear vertices — every
operation validated (link condition, no orientation flip, no destruction
of the protected target tessellation) and every refusal logged."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from gmpy2 import mpq

from ..exact import (
    GeometryError,
    Vec3,
    collinear,
    lerp,
    to_float,
    triangle_normal,
    vdot,
    vnorm2,
    vsub,
)

DEFAULT_THRESHOLD = 5e-3


@dataclass
class CleanupLog:
    collapsed_edges: int = 0
    removed_triangles: int = 0
    collapsed_collinear: int = 0
    failures: List[Tuple[Tuple[int, int], str]] = field(default_factory=list)


class EditableMesh:
    """Small editable exact triangle mesh with protected-edge tags."""

    def __init__(self, vertices: List[Vec3],
                 triangles: List[Tuple[int, int, int]],
                 protected: Set[FrozenSet[int]]):
        self.verts: List[Optional[Vec3]] = list(vertices)
        self.tris: Dict[int, Tuple[int, int, int]] = dict(enumerate(triangles))
        self.protected: Set[FrozenSet[int]] = set(protected)
        self._next = len(triangles)

    # -- queries ------------------------------------------------------------

    def vertex_tris(self, v: int) -> List[int]:
        return [t for t, tri in self.tris.items() if v in tri]

    def edge_tris(self, u: int, v: int) -> List[int]:
        return [t for t, tri in self.tris.items() if u in tri and v in tri]

    def edges(self) -> Set[FrozenSet[int]]:
        out = set()
        for tri in self.tris.values():
            for k in range(3):
                out.add(frozenset((tri[k], tri[(k + 1) % 3])))
        return out

    def neighbors(self, v: int) -> Set[int]:
        out = set()
        for tri in self.tris.values():
            if v in tri:
                out.update(tri)
        out.discard(v)
        return out

    def edge_length(self, u: int, v: int) -> float:
        return math.dist(to_float(self.verts[u]), to_float(self.verts[v]))

    def tri_area(self, t: int) -> float:
        a, b, c = (to_float(self.verts[i]) for i in self.tris[t])
        ab = [b[k] - a[k] for k in range(3)]
        ac = [c[k] - a[k] for k in range(3)]
        cr = [
            ab[1] * ac[2] - ab[2] * ac[1],
            ab[2] * ac[0] - ab[0] * ac[2],
            ab[0] * ac[1] - ab[1] * ac[0],
        ]
        return 0.5 * math.sqrt(sum(x * x for x in cr))

    def euler_characteristic(self) -> int:
        vs = {v for tri in self.tris.values() for v in tri}
        return len(vs) - len(self.edges()) + len(self.tris)

    # -- validations --------------------------------------------------------

    def link_condition(self, u: int, v: int) -> bool:
        lk_u = self._vertex_link(u)
        lk_v = self._vertex_link(v)
        lk_uv = self._edge_link(u, v)
        return lk_u & lk_v == lk_uv

    def _vertex_link(self, v: int) -> Set:
        out = set()
        for tri in self.tris.values():
            if v in tri:
                rest = [x for x in tri if x != v]
                out.add(frozenset(rest))
                out.update(rest)
        return out

    def _edge_link(self, u: int, v: int) -> Set:
        out = set()
        for tri in self.tris.values():
            if u in tri and v in tri:
                out.update(x for x in tri if x not in (u, v))
        return out

    def _collapse_flips(self, removed: int, kept: int) -> bool:
        """Would moving `removed` onto `kept` flip any surviving triangle?"""
        target = self.verts[kept]
        for t in self.vertex_tris(removed):
            tri = self.tris[t]
            if kept in tri:
                continue  # triangle disappears
            pts_before = [self.verts[i] for i in tri]
            pts_after = [
                target if i == removed else self.verts[i] for i in tri
            ]
            n0 = triangle_normal(*pts_before)
            n1 = triangle_normal(*pts_after)
            if n1 == (0, 0, 0):
                return True
            if vdot(n0, n1) <= 0:
                return True
        return False

    def _protected_incident(self, v: int) -> List[FrozenSet[int]]:
        return [e for e in self.protected if v in e]

    def validate_collapse(self, removed: int, kept: int,
                          allow_chain: bool = False) -> Optional[str]:
        e = frozenset((removed, kept))
        if e in self.protected and not allow_chain:
            return "edge is protected"
        inc = [x for x in self._protected_incident(removed) if x != e]
        if inc:
            if not allow_chain:
                return "removed endpoint carries protected edges"
            # chain exception: exactly straight pass-through
            others = {next(iter(x - {removed})) for x in inc} | (
                {kept} if e in self.protected else set()
            )
            if len(others) != 2:
                return "protected edges at endpoint do not form a chain"
            p, q = sorted(others)
            if not collinear(self.verts[p], self.verts[removed],
                             self.verts[q]):
                return "protected chain is not exactly collinear"
            if kept not in (p, q):
                return "chain collapse must move along the chain"
        if not self.link_condition(removed, kept):
            return "link condition fails"
        if self._collapse_flips(removed, kept):
            return "collapse would flip or degenerate a triangle"
        return None

    # -- edits --------------------------------------------------------------

    def collapse(self, removed: int, kept: int):
        for t in self.vertex_tris(removed):
            tri = self.tris.pop(t)
            if kept in tri:
                continue
            self.tris[t] = tuple(kept if i == removed else i for i in tri)
        new_protected = set()
        for e in self.protected:
            if removed in e:
                other = next(iter(e - {removed}))
                if other != kept:
                    new_protected.add(frozenset((kept, other)))
            else:
                new_protected.add(e)
        self.protected = new_protected
        self.verts[removed] = None

    def split_edge(self, u: int, v: int, point: Vec3) -> int:
        """Insert `point` on edge (u, v), splitting the incident triangles."""
        w = len(self.verts)
        self.verts.append(point)
        for t in self.edge_tris(u, v):
            a, b, c = self.tris.pop(t)
            # rotate so the split edge is (a, b)
            for _ in range(3):
                if {a, b} == {u, v}:
                    break
                a, b, c = b, c, a
            self.tris[self._next] = (a, w, c)
            self._next += 1
            self.tris[self._next] = (w, b, c)
            self._next += 1
        e = frozenset((u, v))
        if e in self.protected:
            self.protected.discard(e)
            self.protected.add(frozenset((u, w)))
            self.protected.add(frozenset((w, v)))
        return w

    def compact(self):
        used = sorted({v for tri in self.tris.values() for v in tri})
        remap = {v: i for i, v in enumerate(used)}
        verts = [self.verts[v] for v in used]
        tris = [tuple(remap[i] for i in tri) for tri in self.tris.values()]
        protected = {
            frozenset(remap[i] for i in e)
            for e in self.protected
            if all(i in remap for i in e)
        }
        return verts, tris, protected


def _try_collapse(mesh: EditableMesh, u: int, v: int, log: CleanupLog,
                  allow_chain: bool = False) -> bool:
    """Collapse edge (u, v) into whichever endpoint validates, preferring
    to keep an endpoint that carries protected edges."""
    pu = len(mesh._protected_incident(u))
    pv = len(mesh._protected_incident(v))
    order = [(u, v), (v, u)] if pv >= pu else [(v, u), (u, v)]
    reasons = []
    for removed, kept in order:
        reason = mesh.validate_collapse(removed, kept, allow_chain)
        if reason is None:
            mesh.collapse(removed, kept)
            return True
        reasons.append(reason)
    log.failures.append(((u, v), "; ".join(reasons)))
    return False


def _small_edge_pass(mesh: EditableMesh, threshold: float,
                     log: CleanupLog) -> bool:
    changed = False
    attempted: Set[FrozenSet[int]] = set()
    while True:
        candidate = None
        for e in sorted(mesh.edges(), key=sorted):
            if e in mesh.protected or e in attempted:
                continue
            u, v = sorted(e)
            if mesh.edge_length(u, v) < threshold:
                candidate = (u, v)
                break
        if candidate is None:
            return changed
        attempted.add(frozenset(candidate))
        if _try_collapse(mesh, *candidate, log):
            log.collapsed_edges += 1
            changed = True


def _small_triangle_pass(mesh: EditableMesh, threshold: float,
                         log: CleanupLog) -> bool:
    area_thr = threshold * threshold
    changed = False
    attempted: Set[Tuple[int, int, int]] = set()
    while True:
        target = None
        for t in sorted(mesh.tris):
            tri = tuple(sorted(mesh.tris[t]))
            if tri in attempted:
                continue
            if mesh.tri_area(t) < area_thr:
                target = (t, tri)
                break
        if target is None:
            return changed
        t, tri_key = target
        attempted.add(tri_key)
        tri = mesh.tris[t]
        handled = False
        for k in range(3):
            vtx = tri[k]
            a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
            if frozenset((a, b)) in mesh.protected:
                continue
            pa, pb, pv = mesh.verts[a], mesh.verts[b], mesh.verts[vtx]
            d = vsub(pb, pa)
            n2 = vnorm2(d)
            if n2 == 0:
                continue
            w = vdot(vsub(pv, pa), d) / n2
            if not (0 < w < 1):
                continue
            foot = lerp(pa, pb, w)
            small_before = {
                tt for tt in mesh.tris if mesh.tri_area(tt) < area_thr
            }
            saved = (list(mesh.verts), dict(mesh.tris), set(mesh.protected),
                     mesh._next)
            new_v = mesh.split_edge(a, b, foot)
            reason = mesh.validate_collapse(vtx, new_v)
            if reason is None:
                mesh.collapse(vtx, new_v)
                grown = [
                    tt for tt in mesh.tris
                    if tt not in small_before and mesh.tri_area(tt) < area_thr
                ]
                # allow strictly fewer small triangles, never new ones
                n_small_now = sum(
                    1 for tt in mesh.tris if mesh.tri_area(tt) < area_thr
                )
                if n_small_now < len(small_before):
                    log.removed_triangles += 1
                    changed = True
                    handled = True
                    break
                reason = "collapse would introduce new small triangles"
            mesh.verts, mesh.tris, mesh.protected, mesh._next = saved
            log.failures.append(((vtx, new_v), reason))
        if handled:
            continue
    return changed


def _collinear_pass(mesh: EditableMesh, log: CleanupLog) -> bool:
    changed = False
    progress = True
    while progress:
        progress = False
        for v in sorted({x for tri in mesh.tris.values() for x in tri}):
            nbrs = sorted(mesh.neighbors(v))
            done = False
            for i in range(len(nbrs)):
                for j in range(i + 1, len(nbrs)):
                    p, q = nbrs[i], nbrs[j]
                    if not collinear(mesh.verts[p], mesh.verts[v],
                                     mesh.verts[q]):
                        continue
                    # v sits exactly between p and q: collapse along line
                    d = vsub(mesh.verts[q], mesh.verts[p])
                    t = vdot(vsub(mesh.verts[v], mesh.verts[p]), d)
                    if not (0 < t < vnorm2(d)):
                        continue
                    for kept in (p, q):
                        if mesh.validate_collapse(v, kept,
                                                  allow_chain=True) is None:
                            mesh.collapse(v, kept)
                            log.collapsed_collinear += 1
                            changed = True
                            progress = True
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
            if done:
                break
    return changed


def cleanup(
    vertices: List[Vec3],
    triangles: List[Tuple[int, int, int]],
    protected: Set[FrozenSet[int]],
    threshold: float = DEFAULT_THRESHOLD,
) -> Tuple[List[Vec3], List[Tuple[int, int, int]], Set[FrozenSet[int]],
           CleanupLog]:
    mesh = EditableMesh(vertices, triangles, protected)
    log = CleanupLog()
    _small_edge_pass(mesh, threshold, log)
    _small_triangle_pass(mesh, threshold, log)
    _collinear_pass(mesh, log)
    verts, tris, prot = mesh.compact()
    return verts, tris, prot, log
