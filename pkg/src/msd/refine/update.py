"""Vertex update: move corefined vertices onto the exact target geometry.

Projected target endpoints take the target vertex position bitwise.
Corefinement intersection vertices move to the exact point of their
owning target edge reached by the element's projection rule (radial line
for skeletal vertices, axis-orthogonal plane for skeletal edges, normal
line for flat slab regions)."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from ..exact import (
    GeometryError,
    Vec3,
    lerp,
    vcross,
    vsub,
)
from .corefine import (
    PROV_ENDPOINT,
    PROV_INTERSECTION,
    CorefinedPrimitive,
)
from .frames import CylFrame
from .trajectory import SubSurface


class CorrespondenceError(RuntimeError):
    pass


def _line_direction_intersection(p: Vec3, d: Vec3, a: Vec3, b: Vec3) -> Vec3:
    """Exact point of segment (a, b) on the line through p with direction d
    (requires the configuration to be coplanar, as projection guarantees)."""
    c0 = vcross(vsub(a, p), d)
    c1 = vcross(vsub(b, a), d)
    t = None
    for k in range(3):
        if c1[k] != 0:
            t = -c0[k] / c1[k]
            break
    if t is None:
        raise GeometryError("projection line parallel to the target edge")
    # consistency across all components (exact coplanarity check)
    for k in range(3):
        if c0[k] + t * c1[k] != 0:
            raise GeometryError("projection line misses the target edge")
    return lerp(a, b, t)


def update_vertices(
    coref: CorefinedPrimitive,
    sub: SubSurface,
    frames: Optional[Dict[int, CylFrame]] = None,
) -> List[Vec3]:
    """New exact vertex positions after the update step."""
    out: List[Vec3] = []
    for i, p in enumerate(coref.cartesian):
        prov = coref.provenance[i]
        if prov == PROV_ENDPOINT:
            tv = coref.target_vertex[i]
            if tv is None or tv not in sub.target_vertices:
                raise CorrespondenceError(
                    f"projected endpoint {i} lacks a target correspondence"
                )
            out.append(sub.target_vertices[tv])
            continue
        if prov == PROV_INTERSECTION:
            if not coref.owner_edges[i]:
                raise CorrespondenceError(
                    f"intersection vertex {i} lacks an owning target edge"
                )
            tag = sorted(coref.owner_edges[i])[0]
            a = sub.target_vertices[tag[0]]
            b = sub.target_vertices[tag[1]]
            rule = coref.projection[i]
            if rule is None:
                raise CorrespondenceError(
                    f"intersection vertex {i} lacks a projection rule"
                )
            kind = rule[0]
            if kind == "radial":
                m = rule[1]
                out.append(_line_direction_intersection(m, vsub(p, m), a, b))
            elif kind == "plane":
                out.append(_line_direction_intersection(p, rule[1], a, b))
            elif kind == "axis":
                if frames is None:
                    raise CorrespondenceError("axis rule requires charts")
                frame = frames[rule[1]]
                try:
                    out.append(frame.orthogonal_plane_intersection(a, b, p))
                except GeometryError:
                    # axially constant target edge: identify by azimuth
                    out.append(frame.radial_plane_intersection(a, b, p))
            else:
                raise CorrespondenceError(f"unknown projection rule {kind}")
            continue
        out.append(p)
    return out
