"""End-to-end feature-preserving refinement of one fitted primitive."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from ..elements import DiscretizedPrimitive
from ..exact import Vec3, to_float
from ..mesh import ExactTriMesh, TriMesh
from .cleanup import DEFAULT_THRESHOLD, CleanupLog, cleanup
from .corefine import (
    CorefinedPrimitive,
    WorkMesh,
    build_work_mesh,
    corefine_primitive,
)
from .patches import SimplifyReport, simplify_patches
from .trajectory import SubSurface, select_subsurface
from .update import update_vertices


@dataclass
class RefinedPrimitive:
    vertices: List[Vec3]
    triangles: List[Tuple[int, int, int]]
    protected_edges: Set[FrozenSet[int]]
    subsurface: SubSurface
    corefined: CorefinedPrimitive
    simplify_report: SimplifyReport
    cleanup_log: CleanupLog

    def shadow(self) -> TriMesh:
        """float64 copy for rendering and approximate queries."""
        return TriMesh(
            np.array([to_float(v) for v in self.vertices], dtype=np.float64),
            np.asarray(self.triangles, dtype=np.int64),
        )

    def exact_mesh(self) -> ExactTriMesh:
        return ExactTriMesh(
            list(self.vertices), [tuple(t) for t in self.triangles]
        )


def refine_primitive(
    prim: DiscretizedPrimitive,
    target: ExactTriMesh,
    delta: float = 0.01,
    threshold: float = DEFAULT_THRESHOLD,
    precision_bits: int = 120,
    parallel: bool = True,
    run_cleanup: bool = True,
) -> RefinedPrimitive:
    work = build_work_mesh(prim, precision_bits=precision_bits)
    sub = select_subsurface(
        target, prim, delta, frames=work.frames, tables=work.tables
    )
    trajectories = [sub.trajectories[e] for e in sub.edges]
    coref = corefine_primitive(work, trajectories, parallel=parallel)
    simplified, simp_report = simplify_patches(coref)
    new_positions = update_vertices(simplified, sub, frames=work.frames)
    protected = set(simplified.tagged_edges)
    if run_cleanup:
        verts, tris, protected, log = cleanup(
            new_positions, simplified.triangles, protected, threshold
        )
    else:
        verts, tris, log = new_positions, simplified.triangles, CleanupLog()
    return RefinedPrimitive(
        verts, [tuple(t) for t in tris], protected, sub, coref,
        simp_report, log,
    )
