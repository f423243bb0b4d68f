"""Pipeline orchestration: target + medial mesh in, MSD document out.

`run_pipeline` chains global optimization (which itself builds skeletons
and fits primitives per evaluation) and optional per-primitive exact
refinement, then assembles and saves an MsdDocument.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .document import (
    MsdDocument,
    PrimitiveRecord,
    exact_mesh_to_record,
    file_hash,
    save_document,
    skeleton_to_record,
)
from .elements import (
    DiscretizedPrimitive,
    MedialElement,
    build_canonical,
    medial_edge,
    medial_triangle,
    medial_vertex,
)
from .exact import GeometryError
from .fitting import progressive_fit
from .globalopt import OptimConfig, OptimResult, optimize, skeleton_elements
from .mesh import TriMesh, load_mesh, load_nonmanifold_off, to_exact
from .refine import refine_primitive
from .skeleton import MedialMesh

ProgressFn = Callable[[str, float, Optional[Dict]], None]


@dataclass
class PipelineConfig:
    mesh_path: str
    medial_path: str
    out_path: Optional[str] = None
    normalize: bool = False
    delta: float = 0.01
    init_count: int = 10
    n_insert: int = 3
    max_iterations: int = 300
    fit_resolution: str = "low"
    refine: bool = False
    refine_threshold: float = 5e-3
    seeds: Optional[Sequence[Sequence[float]]] = None

    def optim_config(self) -> OptimConfig:
        return OptimConfig(
            delta=self.delta,
            init_count=self.init_count,
            n_insert=self.n_insert,
            max_iterations=self.max_iterations,
            fit_resolution=self.fit_resolution,
        )


def element_record_fields(element: MedialElement) -> Tuple[str, List[List[float]]]:
    corners = [[float(x) for x in c] for c in element.corner_array()]
    return element.kind, corners


_CORNER_COUNTS = {"vertex": 1, "edge": 2, "triangle": 3}


def element_from_record(kind: str, corners: Sequence[Sequence[float]]) -> MedialElement:
    expected = _CORNER_COUNTS.get(kind)
    if expected is not None and len(corners) != expected:
        raise ValueError(
            f"{kind} element needs {expected} corners, got {len(corners)}"
        )
    if kind == "vertex":
        return medial_vertex(corners[0])
    if kind == "edge":
        return medial_edge(corners[0], corners[1])
    if kind == "triangle":
        return medial_triangle(corners[0], corners[1], corners[2])
    raise ValueError(f"unknown element kind {kind!r}")


def primitive_to_record(prim: DiscretizedPrimitive) -> PrimitiveRecord:
    kind, corners = element_record_fields(prim.element)
    b = prim.boundary
    slab = None
    if kind == "triangle" and b.meta.get("n") is not None:
        slab = [int(b.meta["n"]), int(b.meta["n_phi"])]
    return PrimitiveRecord(
        kind, corners, b.resolution, float(b.epsilon),
        [float(r) for r in prim.radii], slab_grid=slab,
    )


def primitive_from_record(rec: PrimitiveRecord) -> DiscretizedPrimitive:
    element = element_from_record(rec.element_kind, rec.corners)
    boundary = build_canonical(
        element, rec.epsilon, rec.resolution,
        slab_grid=tuple(rec.slab_grid) if rec.slab_grid else None,
    )
    radii = np.asarray(rec.radii, dtype=np.float64)
    if len(radii) != boundary.n_vertices:
        raise ValueError(
            f"radius count {len(radii)} does not match canonical boundary "
            f"({boundary.n_vertices} vertices)"
        )
    return DiscretizedPrimitive(element, boundary, radii)


def document_primitives(doc: MsdDocument) -> List[DiscretizedPrimitive]:
    return [primitive_from_record(rec) for rec in doc.primitives]


def fit_single_element(
    element: MedialElement, target: TriMesh, resolution: str = "low",
    epsilon: float = 0.1,
) -> DiscretizedPrimitive:
    boundary = build_canonical(element, epsilon, resolution)
    prim = DiscretizedPrimitive(
        element, boundary, np.full(boundary.n_vertices, 1e-3)
    )
    return progressive_fit(prim, target)


def _document_from_result(
    config: PipelineConfig, result: OptimResult, timings: Dict[str, float]
) -> MsdDocument:
    ev = result.evaluation
    if ev is None or ev.skeleton is None:
        raise GeometryError("optimization produced no valid skeleton")
    metadata = {
        "config": {
            "delta": config.delta,
            "init_count": config.init_count,
            "n_insert": config.n_insert,
            "max_iterations": config.max_iterations,
            "fit_resolution": config.fit_resolution,
            "normalize": config.normalize,
        },
        "energies": {
            "coverage": ev.energy.coverage,
            "centrality": ev.energy.centrality,
            "count": ev.energy.count,
            "total": ev.energy.total,
        },
        "optimization": {
            "iterations": result.iterations,
            "stopped_by": result.stopped_by,
        },
        "timings": timings,
    }
    return MsdDocument(
        config.mesh_path, file_hash(config.mesh_path),
        skeleton_to_record(ev.skeleton.geometry),
        [primitive_to_record(p) for p in ev.primitives],
        metadata,
    )


def run_pipeline(
    config: PipelineConfig, progress: Optional[ProgressFn] = None
) -> MsdDocument:
    """Full pipeline: optimize a skeleton on the medial mesh, fit its
    primitives, optionally refine them, and write the document."""

    def report(phase: str, fraction: float, extra: Optional[Dict] = None):
        if progress is not None:
            progress(phase, fraction, extra)

    t0 = time.time()
    report("skeleton", 0.0)
    target = load_mesh(config.mesh_path, normalize=config.normalize)
    medial = MedialMesh(load_nonmanifold_off(config.medial_path))
    timings: Dict[str, float] = {"load": time.time() - t0}

    report("optimizing", 0.0)
    t1 = time.time()
    oc = config.optim_config()
    oc.init_count = min(oc.init_count, len(medial.geometry.vertices))

    initial = None
    if config.seeds is not None:
        initial = np.asarray(config.seeds, dtype=np.float64).reshape(-1, 3)

    result = optimize(medial, target, oc, initial=initial)
    for rec in result.trace:
        report(
            "optimizing", min(1.0, rec.iteration / oc.max_iterations),
            {"iteration": rec.iteration, "total": rec.total,
             "best_total": rec.best_total, "coverage": rec.coverage},
        )
    timings["optimize"] = time.time() - t1

    doc = _document_from_result(config, result, timings)

    if config.refine:
        t2 = time.time()
        report("refining", 0.0)
        refine_document_primitives(
            doc, target, delta=config.delta,
            threshold=config.refine_threshold, progress=progress,
        )
        doc.metadata["timings"]["refine"] = time.time() - t2

    if config.out_path:
        save_document(doc, config.out_path)
    report("done", 1.0)
    return doc


def refine_document_primitives(
    doc: MsdDocument,
    target: Optional[TriMesh] = None,
    delta: float = 0.01,
    threshold: float = 5e-3,
    progress: Optional[ProgressFn] = None,
) -> Dict[str, List]:
    """Exact refinement of every primitive in the document (in place).

    Primitives whose tessellation the exact stage rejects (e.g. sampled
    slabs with region-bridging faces) are recorded as skipped, not fatal.
    """
    if target is None:
        target = load_mesh(doc.target_path)
    exact_target = to_exact(target)
    refined, skipped = [], []
    for k, rec in enumerate(doc.primitives):
        if progress is not None:
            progress("refining", k / max(1, len(doc.primitives)), None)
        prim = primitive_from_record(rec)
        try:
            result = refine_primitive(
                prim, exact_target, delta=delta, threshold=threshold
            )
        except (GeometryError, ValueError) as exc:
            skipped.append([k, str(exc)])
            continue
        rec.refined = exact_mesh_to_record(result.exact_mesh())
        refined.append(k)
    doc.metadata["refinement"] = {
        "refined": refined, "skipped": skipped,
        "delta": delta, "threshold": threshold,
    }
    return doc.metadata["refinement"]
