"""Exact cylindrical charts for edge-aligned refinement.

A chart places the medial edge on the longitudinal axis with its first
endpoint at the origin.  Axial coordinates are exact rationals (barycentric
weight of the orthogonal projection onto the edge); radius and azimuth are
rationalized from multiple-precision floats through a bijective lookup
table so that forward + backward conversion is the exact identity.

Two charts are kept per edge; chart 1 is chart 0 rotated by the fixed
rational PI_R, so cross-chart identification of the same vertex is an exact
azimuth shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import gmpy2
from gmpy2 import mpfr, mpq

from ..exact import (
    GeometryError,
    PrecisionError,
    Vec3,
    lerp,
    rational,
    to_float,
    vadd,
    vcross,
    vdot,
    vnorm2,
    vscale,
    vsub,
)

# 20-digit rational stand-in for pi used for cross-chart azimuth shifts.
PI_R = mpq(314159265358979323846, 10 ** 20)

DEFAULT_PRECISION_BITS = 120

CylCoord = Tuple[mpq, mpq, mpq]  # (rho, phi, z) with z the axial weight


def shift_azimuth(phi: mpq) -> mpq:
    """Azimuth of the same point expressed in the rotated chart."""
    return phi + PI_R if phi < 0 else phi - PI_R


def to_chart(c: CylCoord, chart_id: int) -> CylCoord:
    """Chart-0 coordinates -> coordinates in the requested chart."""
    if chart_id == 0:
        return c
    return (c[0], shift_azimuth(c[1]), c[2])


def to_chart0(c: CylCoord, chart_id: int) -> CylCoord:
    """Coordinates in `chart_id` -> chart-0 coordinates."""
    if chart_id == 0:
        return c
    return (c[0], shift_azimuth(c[1]), c[2])


class CylFrame:
    """Cylindrical chart pair for one medial edge (exact endpoints)."""

    def __init__(self, v1: Vec3, v2: Vec3, reference: Optional[Vec3] = None,
                 precision_bits: int = DEFAULT_PRECISION_BITS):
        self.v1 = v1
        self.v2 = v2
        self.u = vsub(v2, v1)
        self.len2 = vnorm2(self.u)
        if self.len2 == 0:
            raise GeometryError("degenerate axis: edge endpoints coincide")
        self.precision_bits = precision_bits
        # exact reference direction (when rational): radial vectors exactly
        # parallel to it get azimuth 0 / pi exactly, making region borders
        # aligned with the reference bitwise-consistent across charts
        self.reference = reference
        # multiple-precision orthonormal azimuth basis
        with gmpy2.context(precision=precision_bits):
            uf = [mpfr(x) for x in to_float(self.u)]
            un = gmpy2.sqrt(uf[0] ** 2 + uf[1] ** 2 + uf[2] ** 2)
            uf = [x / un for x in uf]
            if reference is not None:
                rf = [mpfr(x) for x in to_float(reference)]
            else:
                rf = [mpfr(1), mpfr(0), mpfr(0)]
                if abs(uf[0]) > mpfr("0.9"):
                    rf = [mpfr(0), mpfr(1), mpfr(0)]
            # e1 = normalize(ref - (ref.u)u), e2 = u x e1
            d = sum(r * u_ for r, u_ in zip(rf, uf))
            e1 = [r - d * u_ for r, u_ in zip(rf, uf)]
            n1 = gmpy2.sqrt(sum(x * x for x in e1))
            if n1 == 0:
                raise GeometryError("azimuth reference parallel to the axis")
            e1 = [x / n1 for x in e1]
            e2 = [
                uf[1] * e1[2] - uf[2] * e1[1],
                uf[2] * e1[0] - uf[0] * e1[2],
                uf[0] * e1[1] - uf[1] * e1[0],
            ]
        self._e1 = e1
        self._e2 = e2

    # -- exact pieces -------------------------------------------------------

    def axial(self, p: Vec3) -> mpq:
        """Exact axial coordinate: barycentric weight along the edge."""
        return vdot(vsub(p, self.v1), self.u) / self.len2

    def radial_vector(self, p: Vec3) -> Vec3:
        z = self.axial(p)
        return vsub(vsub(p, self.v1), vscale(self.u, z))

    def axis_point(self, z: mpq) -> Vec3:
        return vadd(self.v1, vscale(self.u, z))

    def orthogonal_plane_intersection(self, a: Vec3, b: Vec3, p: Vec3) -> Vec3:
        """Intersection of segment (a, b) with the plane through p orthogonal
        to the medial edge (exact)."""
        den = vdot(vsub(b, a), self.u)
        if den == 0:
            raise GeometryError("segment parallel to the orthogonal plane")
        t = vdot(vsub(p, a), self.u) / den
        return lerp(a, b, t)

    def radial_plane_intersection(self, a: Vec3, b: Vec3, p: Vec3) -> Vec3:
        """Intersection of segment (a, b) with the half-plane bounded by the
        axis containing p (exact).  Used when (a, b) is axially constant, so
        the azimuth — not the axial coordinate — identifies the point."""
        w = self.radial_vector(p)
        if w == (0, 0, 0):
            raise GeometryError("point on the medial axis: azimuth undefined")
        n = vcross(self.u, w)
        den = vdot(vsub(b, a), n)
        if den == 0:
            raise GeometryError("segment lies in the radial plane")
        t = -vdot(vsub(a, self.v1), n) / den
        q = lerp(a, b, t)
        if vdot(self.radial_vector(q), w) <= 0:
            raise GeometryError("segment crosses the opposite half-plane")
        return q

    # -- rationalized chart coordinates -------------------------------------

    def cylindrical(self, p: Vec3) -> CylCoord:
        """Chart-0 coordinates of p; rho/phi rationalized at the chart's
        precision, z exact."""
        z = self.axial(p)
        w = self.radial_vector(p)
        if vnorm2(w) == 0:
            raise GeometryError(
                "point lies exactly on the medial axis: azimuth undefined"
            )
        if self.reference is not None and \
                vcross(w, self.reference) == (0, 0, 0):
            phi0 = mpq(0) if vdot(w, self.reference) > 0 else PI_R
            with gmpy2.context(precision=self.precision_bits):
                wf = [mpfr(x) for x in to_float(w)]
                rho = gmpy2.sqrt(wf[0] ** 2 + wf[1] ** 2 + wf[2] ** 2)
            return (mpq(rho), phi0, z)
        with gmpy2.context(precision=self.precision_bits):
            wf = [mpfr(x) for x in to_float(w)]
            rho = gmpy2.sqrt(wf[0] ** 2 + wf[1] ** 2 + wf[2] ** 2)
            y1 = sum(a * b for a, b in zip(wf, self._e1))
            y2 = sum(a * b for a, b in zip(wf, self._e2))
            phi = gmpy2.atan2(y2, y1)
        return (mpq(rho), mpq(phi), z)


@dataclass
class V1Table:
    """Bijective Cartesian <-> chart-0 cylindrical table for tracked
    vertices (primitive mesh vertices and projected target endpoints)."""

    frame: CylFrame
    cart_to_cyl: Dict[Vec3, CylCoord] = field(default_factory=dict)
    cyl_to_cart: Dict[CylCoord, Vec3] = field(default_factory=dict)

    def add(self, p: Vec3) -> CylCoord:
        if p in self.cart_to_cyl:
            return self.cart_to_cyl[p]
        c = self.frame.cylindrical(p)
        if c in self.cyl_to_cart and self.cyl_to_cart[c] != p:
            raise PrecisionError(
                "indistinguishable vertex pair at chart precision: "
                f"{to_float(p)} vs {to_float(self.cyl_to_cart[c])}"
            )
        self.cart_to_cyl[p] = c
        self.cyl_to_cart[c] = p
        return c

    def forward(self, p: Vec3) -> CylCoord:
        return self.cart_to_cyl[p]

    def backward(self, c: CylCoord) -> Vec3:
        return self.cyl_to_cart[c]

    def contains_cyl(self, c: CylCoord) -> bool:
        return c in self.cyl_to_cart


def build_v1_table(frame: CylFrame, points: Sequence[Vec3]) -> V1Table:
    table = V1Table(frame)
    for p in points:
        table.add(p)
    return table


def cylindrical_transform(
    vertices: Sequence, frame: CylFrame, direction: str,
    table: Optional[V1Table] = None, chart_id: int = 0,
):
    """Bulk tracked-vertex conversion; round trips are exact identities."""
    if table is None:
        if direction != "forward":
            raise GeometryError("backward conversion requires the chart table")
        table = V1Table(frame)
    if direction == "forward":
        return [to_chart(table.add(p), chart_id) for p in vertices]
    if direction == "backward":
        out = []
        for c in vertices:
            c0 = to_chart0(c, chart_id)
            if not table.contains_cyl(c0):
                raise GeometryError(
                    "backward conversion of an untracked vertex; use the "
                    "intersection-vertex procedure instead"
                )
            out.append(table.backward(c0))
        return out
    raise ValueError("direction must be 'forward' or 'backward'")


def barycentric_weight_cyl(c: CylCoord, a: CylCoord, b: CylCoord) -> mpq:
    """Exact weight w with c = (1-w) a + w b, on a chart-space segment."""
    for k in (2, 0, 1):  # prefer the exact axial coordinate
        if a[k] != b[k]:
            return (c[k] - a[k]) / (b[k] - a[k])
    raise GeometryError("degenerate chart-space segment")


def intersection_vertex_backward(
    frame: CylFrame,
    v_cld: CylCoord,
    edge_cld: Tuple[CylCoord, CylCoord],
    edge_cts: Tuple[Vec3, Vec3],
    target_edge: Optional[Tuple[Vec3, Vec3]] = None,
) -> Tuple[Vec3, Optional[Vec3]]:
    """Cartesian recovery of a corefinement intersection vertex.

    Steps: exact barycentric weight of v on its containing chart-space
    edge; the same weight applied to the edge's Cartesian endpoints; and,
    when the owning target edge is supplied, the exact intersection of
    that edge with the axis-orthogonal plane through the recovered point.
    Returns (v_cartesian, target_point_or_None).
    """
    w = barycentric_weight_cyl(v_cld, edge_cld[0], edge_cld[1])
    v_cts = lerp(edge_cts[0], edge_cts[1], w)
    if target_edge is None:
        return v_cts, None
    v_hat = frame.orthogonal_plane_intersection(
        target_edge[0], target_edge[1], v_cts
    )
    return v_cts, v_hat
