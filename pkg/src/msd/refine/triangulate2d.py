"""Exact-rational constrained triangulation inside a single triangle.

Points are 2D tuples of gmpy2.mpq.  Input contract: points[0..2] form the
CCW base triangle, every further point lies inside it or on its boundary,
no point lies strictly inside a constraint segment, and no two constraint
segments cross properly (the caller splits segments at all such points
beforehand).
"""

from __future__ import annotations

from typing import Dict, FrozenSet, List, Sequence, Set, Tuple

from gmpy2 import mpq

from ..exact import GeometryError, orient2d


def _closed_in_triangle(p, a, b, c) -> bool:
    """Point within the closed triangle abc (CCW)."""
    return (
        orient2d(a, b, p) >= 0
        and orient2d(b, c, p) >= 0
        and orient2d(c, a, p) >= 0
    )


def polygon_area2(poly: Sequence, pts: Sequence) -> mpq:
    s = mpq(0)
    for k in range(len(poly)):
        x0, y0 = pts[poly[k]]
        x1, y1 = pts[poly[(k + 1) % len(poly)]]
        s += x0 * y1 - x1 * y0
    return s


def triangulate_polygon(poly: Sequence[int], pts: Sequence) -> List[Tuple[int, int, int]]:
    """Ear-clip a weakly simple CCW polygon given by point indices."""
    idx = list(poly)
    tris: List[Tuple[int, int, int]] = []
    while len(idx) > 3:
        n = len(idx)
        clipped = False
        for k in range(n):
            ia, ib, ic = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            a, b, c = pts[ia], pts[ib], pts[ic]
            if orient2d(a, b, c) <= 0:
                continue
            blocked = False
            for im in idx:
                m = pts[im]
                if m == a or m == b or m == c:
                    continue
                if _closed_in_triangle(m, a, b, c):
                    blocked = True
                    break
            if blocked:
                continue
            tris.append((ia, ib, ic))
            del idx[k]
            clipped = True
            break
        if not clipped:
            raise GeometryError("ear clipping failed: degenerate polygon")
    a, b, c = idx
    if orient2d(pts[a], pts[b], pts[c]) <= 0:
        raise GeometryError("degenerate final ear")
    tris.append((a, b, c))
    return tris


class ConstrainedTriangulation:
    def __init__(self, pts: Sequence):
        if orient2d(pts[0], pts[1], pts[2]) <= 0:
            raise GeometryError("base triangle must be CCW and non-degenerate")
        self.pts = list(pts)
        self.tris: List[Tuple[int, int, int]] = [(0, 1, 2)]
        self.alive: List[bool] = [True]

    # -- helpers ------------------------------------------------------------

    def _edges(self) -> Dict[FrozenSet[int], List[int]]:
        out: Dict[FrozenSet[int], List[int]] = {}
        for t, (a, b, c) in enumerate(self.tris):
            if not self.alive[t]:
                continue
            for e in ((a, b), (b, c), (c, a)):
                out.setdefault(frozenset(e), []).append(t)
        return out

    def _add(self, tri: Tuple[int, int, int]):
        a, b, c = tri
        if orient2d(self.pts[a], self.pts[b], self.pts[c]) <= 0:
            raise GeometryError("attempted to add a non-CCW triangle")
        self.tris.append(tri)
        self.alive.append(True)

    def _kill(self, t: int):
        self.alive[t] = False

    # -- point insertion ----------------------------------------------------

    def insert_point(self, i: int):
        p = self.pts[i]
        for t, (a, b, c) in enumerate(self.tris):
            if not self.alive[t]:
                continue
            pa, pb, pc = self.pts[a], self.pts[b], self.pts[c]
            o1 = orient2d(pa, pb, p)
            o2 = orient2d(pb, pc, p)
            o3 = orient2d(pc, pa, p)
            if o1 < 0 or o2 < 0 or o3 < 0:
                continue
            zeros = [o1 == 0, o2 == 0, o3 == 0]
            nz = sum(zeros)
            if nz >= 2:  # coincides with an existing vertex
                return
            if nz == 0:
                self._kill(t)
                self._add((a, b, i))
                self._add((b, c, i))
                self._add((c, a, i))
                return
            # on one edge: split every triangle sharing that edge
            if zeros[0]:
                u, v = a, b
            elif zeros[1]:
                u, v = b, c
            else:
                u, v = c, a
            for t2 in self._edges()[frozenset((u, v))]:
                a2, b2, c2 = self.tris[t2]
                # rotate so the split edge is (a2, b2)
                for _ in range(3):
                    if {a2, b2} == {u, v}:
                        break
                    a2, b2, c2 = b2, c2, a2
                self._kill(t2)
                self._add((a2, i, c2))
                self._add((i, b2, c2))
            return
        raise GeometryError("point outside the base triangle")

    # -- constraint enforcement --------------------------------------------

    def has_edge(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self._edges()

    def insert_constraint(self, i: int, j: int):
        if i == j:
            return
        if self.has_edge(i, j):
            return
        pi, pj = self.pts[i], self.pts[j]
        # find the first crossed triangle incident to i
        edges = self._edges()
        start = None
        for t, tri in enumerate(self.tris):
            if not self.alive[t] or i not in tri:
                continue
            a, b, c = tri
            while a != i:
                a, b, c = b, c, a
            ob = orient2d(pi, pj, self.pts[b])
            oc = orient2d(pi, pj, self.pts[c])
            if ob < 0 and oc > 0:
                # j must be on the far side of edge (b, c)
                if orient2d(self.pts[b], self.pts[c], pj) <= 0:
                    start = (t, c, b)
                    break
        if start is None:
            raise GeometryError("constraint walk failed to start")
        crossed = [start[0]]
        left = [start[1]]   # vertices left of i->j
        right = [start[2]]
        u, v = start[1], start[2]
        while True:
            nxt = [t for t in self._edges()[frozenset((u, v))] if t not in crossed]
            if not nxt:
                raise GeometryError("constraint walk left the triangulation")
            t = nxt[0]
            a, b, c = self.tris[t]
            w = next(x for x in (a, b, c) if x not in (u, v))
            crossed.append(t)
            if w == j:
                break
            ow = orient2d(pi, pj, self.pts[w])
            if ow == 0:
                raise GeometryError(
                    "constraint passes through a vertex: pre-split required"
                )
            if ow > 0:
                left.append(w)
                u = w
            else:
                right.append(w)
                v = w
        for t in crossed:
            self._kill(t)
        poly_left = [i] + left + [j]
        if polygon_area2(poly_left, self.pts) < 0:
            poly_left = poly_left[::-1]
        poly_right = [i] + right + [j]
        if polygon_area2(poly_right, self.pts) < 0:
            poly_right = poly_right[::-1]
        for tri in triangulate_polygon(poly_left, self.pts):
            self._add(tri)
        for tri in triangulate_polygon(poly_right, self.pts):
            self._add(tri)

    def triangles(self) -> List[Tuple[int, int, int]]:
        return [t for t, ok in zip(self.tris, self.alive) if ok]


def triangulate_constrained(
    pts: Sequence, constraints: Sequence[Tuple[int, int]]
) -> List[Tuple[int, int, int]]:
    ct = ConstrainedTriangulation(pts)
    for i in range(3, len(pts)):
        ct.insert_point(i)
    for i, j in constraints:
        ct.insert_constraint(i, j)
    return ct.triangles()
