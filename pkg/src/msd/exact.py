"""Exact rational arithmetic and geometric predicates.

Rationals are gmpy2.mpq values (arbitrary-precision, always reduced,
positive denominator).  Points are 3-tuples of mpq; no rounding happens
anywhere in this module.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence, Tuple

import gmpy2
from gmpy2 import mpq

Q = mpq
Vec3 = Tuple[mpq, mpq, mpq]


class GeometryError(ValueError):
    pass


class PrecisionError(ValueError):
    pass


def rational(x) -> mpq:
    """Exact rational of x.  Floats convert via their exact binary value."""
    if isinstance(x, float):
        return mpq(*x.as_integer_ratio())
    return mpq(x)


def round_to_precision(x: float, precision_bits: int) -> mpq:
    """The exact rational that the float x represents when rounded to a
    significand of `precision_bits` bits (round-to-nearest-even)."""
    if precision_bits < 53:
        return mpq(gmpy2.mpfr(x, precision_bits))
    return mpq(*x.as_integer_ratio())


def vec(x, y, z) -> Vec3:
    return (rational(x), rational(y), rational(z))


def vsub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vadd(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vscale(a: Vec3, s) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vdot(a: Vec3, b: Vec3) -> mpq:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vnorm2(a: Vec3) -> mpq:
    return vdot(a, a)


def lerp(a: Vec3, b: Vec3, t: mpq) -> Vec3:
    return (
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    )


def to_float(p: Vec3) -> Tuple[float, float, float]:
    return (float(p[0]), float(p[1]), float(p[2]))


# ---------------------------------------------------------------------------
# predicates

def orient3d(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> int:
    """Sign of the signed volume of tetrahedron (a, b, c, d)."""
    det = vdot(vcross(vsub(b, a), vsub(c, a)), vsub(d, a))
    return (det > 0) - (det < 0)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of 2D triangle (a, b, c)."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (det > 0) - (det < 0)


def collinear(a: Vec3, b: Vec3, c: Vec3) -> bool:
    return vcross(vsub(b, a), vsub(c, a)) == (0, 0, 0)


def triangle_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3:
    return vcross(vsub(b, a), vsub(c, a))


def point_in_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool:
    """True iff p lies in the closed triangle abc.  p must be coplanar."""
    n = triangle_normal(a, b, c)
    if n == (0, 0, 0):
        raise GeometryError("degenerate triangle")
    for u, v in ((a, b), (b, c), (c, a)):
        if vdot(n, vcross(vsub(v, u), vsub(p, u))) < 0:
            return False
    return True


def barycentric_in_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Tuple[mpq, mpq, mpq]:
    """Exact barycentric coordinates of a coplanar point p in triangle abc."""
    n = triangle_normal(a, b, c)
    nn = vnorm2(n)
    if nn == 0:
        raise GeometryError("degenerate triangle")
    wa = vdot(n, vcross(vsub(c, b), vsub(p, b)))
    wb = vdot(n, vcross(vsub(a, c), vsub(p, c)))
    wc = vdot(n, vcross(vsub(b, a), vsub(p, a)))
    return (wa / nn, wb / nn, wc / nn)


# ---------------------------------------------------------------------------
# intersections

def segment_plane_param(p0: Vec3, p1: Vec3, origin: Vec3, normal: Vec3) -> Optional[mpq]:
    """Parameter t with p0 + t (p1 - p0) on the plane, or None if parallel.

    Returns t unrestricted; the caller clips to [0, 1].
    """
    denom = vdot(normal, vsub(p1, p0))
    if denom == 0:
        return None
    return vdot(normal, vsub(origin, p0)) / denom


def segment_triangle_intersect(
    p0: Vec3, p1: Vec3, a: Vec3, b: Vec3, c: Vec3
):
    """Exact segment/triangle intersection.

    Returns ("empty", None), ("point", p) or ("segment", (q0, q1)) with
    exact rational coordinates.  Coplanar overlap yields the clipped segment.
    """
    if p0 == p1:
        raise GeometryError("zero-length segment")
    n = triangle_normal(a, b, c)
    if n == (0, 0, 0):
        raise GeometryError("degenerate triangle")
    d0 = vdot(n, vsub(p0, a))
    d1 = vdot(n, vsub(p1, a))
    if d0 == 0 and d1 == 0:
        # coplanar: clip the segment by the three edge half-planes
        lo, hi = mpq(0), mpq(1)
        direction = vsub(p1, p0)
        for u, v in ((a, b), (b, c), (c, a)):
            inward = vcross(n, vsub(v, u))  # points into the triangle
            num = vdot(inward, vsub(p0, u))
            den = vdot(inward, direction)
            if den == 0:
                if num < 0:
                    return ("empty", None)
            else:
                t = -num / den
                if den > 0:
                    lo = max(lo, t)
                else:
                    hi = min(hi, t)
        if lo > hi:
            return ("empty", None)
        q0, q1 = lerp(p0, p1, lo), lerp(p0, p1, hi)
        if q0 == q1:
            return ("point", q0)
        return ("segment", (q0, q1))
    if (d0 > 0 and d1 > 0) or (d0 < 0 and d1 < 0):
        return ("empty", None)
    t = d0 / (d0 - d1)
    p = lerp(p0, p1, t)
    if point_in_triangle(p, a, b, c):
        return ("point", p)
    return ("empty", None)


def triangle_triangle_segment(
    t1: Sequence[Vec3], t2: Sequence[Vec3]
) -> Optional[Tuple[Vec3, Vec3]]:
    """Intersection segment of two non-coplanar triangles, or None.

    Degenerate touching (a single point) also returns None.
    """
    n1 = triangle_normal(*t1)
    n2 = triangle_normal(*t2)
    pts = []
    for tri_a, tri_b in ((t1, t2), (t2, t1)):
        for i in range(3):
            p0, p1 = tri_a[i], tri_a[(i + 1) % 3]
            if p0 == p1:
                continue
            kind, payload = segment_triangle_intersect(p0, p1, *tri_b)
            if kind == "point":
                pts.append(payload)
            elif kind == "segment":
                pts.extend(payload)
    uniq = []
    for p in pts:
        if p not in uniq:
            uniq.append(p)
    if len(uniq) < 2:
        return None
    if len(uniq) == 2:
        return (uniq[0], uniq[1])
    # collinear chain: take the extreme pair along the common line
    d = vsub(uniq[1], uniq[0])
    params = [(vdot(vsub(p, uniq[0]), d), p) for p in uniq]
    params.sort(key=lambda x: x[0])
    return (params[0][1], params[-1][1])


def convex_polygon_triangle_clip(
    poly: Sequence[Vec3], tri: Sequence[Vec3]
) -> Optional[Tuple[Vec3, Vec3]]:
    """Intersection segment between a planar convex polygon and a triangle
    lying in a different plane.  Exact; None when they do not cross."""
    np_ = vcross(vsub(poly[1], poly[0]), vsub(poly[2], poly[0]))
    nt = triangle_normal(*tri)
    if np_ == (0, 0, 0) or nt == (0, 0, 0):
        raise GeometryError("degenerate input")
    pts = []
    k = len(poly)
    for i in range(k):
        p0, p1 = poly[i], poly[(i + 1) % k]
        if p0 == p1:
            continue
        kind, payload = segment_triangle_intersect(p0, p1, *tri)
        if kind == "point":
            pts.append(payload)
        elif kind == "segment":
            pts.extend(payload)
    for i in range(3):
        p0, p1 = tri[i], tri[(i + 1) % 3]
        t = segment_plane_param(p0, p1, poly[0], np_)
        if t is None or t < 0 or t > 1:
            continue
        p = lerp(p0, p1, t)
        if point_in_convex_polygon(p, poly, np_):
            pts.append(p)
    uniq = []
    for p in pts:
        if p not in uniq:
            uniq.append(p)
    if len(uniq) < 2:
        return None
    d = vsub(uniq[1], uniq[0])
    params = [(vdot(vsub(p, uniq[0]), d), p) for p in uniq]
    params.sort(key=lambda x: x[0])
    return (params[0][1], params[-1][1])


def point_in_convex_polygon(p: Vec3, poly: Sequence[Vec3], normal: Vec3) -> bool:
    """True iff coplanar point p lies in the closed convex polygon."""
    k = len(poly)
    sign = 0
    for i in range(k):
        u, v = poly[i], poly[(i + 1) % k]
        if u == v:
            continue
        s = vdot(normal, vcross(vsub(v, u), vsub(p, u)))
        if s == 0:
            continue
        cur = 1 if s > 0 else -1
        if sign == 0:
            sign = cur
        elif sign != cur:
            return False
    return True


def segment_segment_intersect_2d(a0, a1, b0, b1):
    """Proper or touching intersection point of two 2D exact segments.

    Returns (t_a, point) with point = a0 + t_a (a1 - a0), or None when the
    segments do not meet in a single point (disjoint or collinear overlap).
    """
    d1 = (a1[0] - a0[0], a1[1] - a0[1])
    d2 = (b1[0] - b0[0], b1[1] - b0[1])
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if denom == 0:
        return None
    dx, dy = b0[0] - a0[0], b0[1] - a0[1]
    t = (dx * d2[1] - dy * d2[0]) / denom
    s = (dx * d1[1] - dy * d1[0]) / denom
    if t < 0 or t > 1 or s < 0 or s > 1:
        return None
    return (t, (a0[0] + t * d1[0], a0[1] + t * d1[1]))
