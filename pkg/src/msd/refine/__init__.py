"""Exact feature-preserving refinement of fitted primitives."""

from .cleanup import CleanupLog, cleanup
from .corefine import (
    CorefinedPrimitive,
    build_work_mesh,
    corefine_primitive,
    corefined_equal,
)
from .driver import RefinedPrimitive, refine_primitive
from .frames import (
    PI_R,
    CylFrame,
    V1Table,
    build_v1_table,
    cylindrical_transform,
    intersection_vertex_backward,
)
from .patches import simplify_patches
from .trajectory import SubSurface, Trajectory, build_trajectory, select_subsurface
from .update import update_vertices

__all__ = [
    "CleanupLog",
    "cleanup",
    "CorefinedPrimitive",
    "build_work_mesh",
    "corefine_primitive",
    "corefined_equal",
    "RefinedPrimitive",
    "refine_primitive",
    "PI_R",
    "CylFrame",
    "V1Table",
    "build_v1_table",
    "cylindrical_transform",
    "intersection_vertex_backward",
    "simplify_patches",
    "SubSurface",
    "Trajectory",
    "build_trajectory",
    "select_subsurface",
    "update_vertices",
]
