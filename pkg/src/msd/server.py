"""HTTP service backing the interactive skeleton editor.

Read endpoints serve float geometry for rendering; mutating work goes
through a single-flight job queue (one heavy pipeline at a time), except
single-element fit requests, which run synchronously.

Binary mesh payloads are base64-wrapped little-endian arrays laid out as
u32 vertex count, u32 triangle count, f64 positions (3 per vertex), u32
indices (3 per triangle).
"""

from __future__ import annotations

import base64
import os
import struct
import threading
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .document import dumps_document, load_document
from .elements import realized_mesh
from .exact import GeometryError
from .mesh import TriMesh, load_mesh, load_nonmanifold_off
from .metrics import UnionField, extract_union_mesh
from .pipeline import (
    PipelineConfig,
    document_primitives,
    element_from_record,
    fit_single_element,
    run_pipeline,
)

JOB_PHASES = ["skeleton", "fitting", "optimizing", "refining", "done", "failed"]


def pack_mesh(mesh: TriMesh) -> str:
    verts = np.ascontiguousarray(mesh.vertices, dtype="<f8")
    tris = np.ascontiguousarray(mesh.triangles, dtype="<u4")
    blob = (
        struct.pack("<II", mesh.n_vertices, mesh.n_triangles)
        + verts.tobytes()
        + tris.tobytes()
    )
    return base64.b64encode(blob).decode("ascii")


def unpack_mesh(payload: str) -> TriMesh:
    blob = base64.b64decode(payload)
    nv, nt = struct.unpack_from("<II", blob, 0)
    off = 8
    verts = np.frombuffer(blob, dtype="<f8", count=3 * nv, offset=off)
    off += verts.nbytes
    tris = np.frombuffer(blob, dtype="<u4", count=3 * nt, offset=off)
    return TriMesh(verts.reshape(nv, 3).copy(), tris.reshape(nt, 3).astype(np.int64))


@dataclass
class JobStatus:
    job_id: str
    phase: str = "skeleton"
    progress: float = 0.0
    trace: List[Dict] = field(default_factory=list)
    error: Optional[str] = None

    def advance(self, phase: str, progress: float,
                extra: Optional[Dict] = None):
        # phases only move forward
        if JOB_PHASES.index(phase) >= JOB_PHASES.index(self.phase):
            self.phase = phase
            self.progress = max(self.progress, progress) \
                if phase == self.phase else progress
        if extra is not None:
            self.trace.append({"phase": phase, **extra})

    def to_dict(self) -> Dict:
        out = {
            "id": self.job_id,
            "phase": self.phase,
            "progress": self.progress,
            "trace": self.trace[-200:],
        }
        if self.error is not None:
            out["error"] = self.error
        return out


class ElementPayload(BaseModel):
    kind: str
    corners: List[List[float]]


class FitRequest(BaseModel):
    element: ElementPayload
    resolution: str = "low"


class SkeletonDraft(BaseModel):
    vertices: List[List[float]] = []
    edges: List[List[int]] = []
    triangles: List[List[int]] = []


class OptimizeRequest(BaseModel):
    seeds: List[List[float]]
    delta: float = 0.01
    max_iterations: int = 300
    fit_resolution: str = "low"
    refine: bool = False


class ServerState:
    def __init__(self, state_dir: str, mesh_path: Optional[str] = None,
                 medial_path: Optional[str] = None):
        os.makedirs(state_dir, exist_ok=True)
        self.state_dir = state_dir
        self.mesh_path = mesh_path or self._find(("target.obj", "target.off"))
        self.medial_path = medial_path or self._find(("medial.off",))
        self.target: Optional[TriMesh] = (
            load_mesh(self.mesh_path) if self.mesh_path else None
        )
        self.medial = (
            load_nonmanifold_off(self.medial_path) if self.medial_path else None
        )
        self.jobs: Dict[str, JobStatus] = {}
        self.job_lock = threading.Lock()
        self.active_job: Optional[str] = None

    def _find(self, names) -> Optional[str]:
        for n in names:
            p = os.path.join(self.state_dir, n)
            if os.path.exists(p):
                return p
        return None

    @property
    def document_path(self) -> str:
        return os.path.join(self.state_dir, "document.msd")


def create_app(state_dir: str, mesh_path: Optional[str] = None,
               medial_path: Optional[str] = None) -> FastAPI:
    state = ServerState(state_dir, mesh_path, medial_path)
    app = FastAPI(title="msd-service")
    app.state.msd = state

    def require_target() -> TriMesh:
        if state.target is None:
            raise HTTPException(404, "no target mesh loaded")
        return state.target

    @app.get("/mesh")
    def get_mesh():
        mesh = require_target()
        return {
            "n_vertices": mesh.n_vertices,
            "n_triangles": mesh.n_triangles,
            "mesh": pack_mesh(mesh),
        }

    @app.get("/medial")
    def get_medial():
        if state.medial is None:
            raise HTTPException(404, "no medial mesh loaded")
        g = state.medial
        return {
            "vertices": [[float(x) for x in v] for v in g.vertices],
            "edges": [list(e) for e in g.edges],
            "triangles": [list(t) for t in g.triangles],
        }

    @app.post("/skeleton")
    def post_skeleton(draft: SkeletonDraft):
        n = len(draft.vertices)
        for e in draft.edges:
            if not all(0 <= v < n for v in e):
                raise HTTPException(422, "edge references a missing vertex")
        for t in draft.triangles:
            if not all(0 <= v < n for v in t):
                raise HTTPException(422, "triangle references a missing vertex")
        path = os.path.join(state.state_dir, "draft.json")
        with open(path, "w") as f:
            f.write(draft.model_dump_json())
        return {"stored": True, "vertices": n,
                "edges": len(draft.edges), "triangles": len(draft.triangles)}

    @app.post("/fit")
    def post_fit(req: FitRequest):
        mesh = require_target()
        try:
            element = element_from_record(req.element.kind, req.element.corners)
            prim = fit_single_element(element, mesh, req.resolution)
        except (GeometryError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        shadow = realized_mesh(prim)
        radii = prim.radii
        return {
            "n_vertices": shadow.n_vertices,
            "mesh": pack_mesh(shadow),
            "radii": {
                "min": float(radii.min()),
                "max": float(radii.max()),
                "mean": float(radii.mean()),
            },
        }

    @app.post("/optimize")
    def post_optimize(req: OptimizeRequest):
        mesh = require_target()
        if state.medial_path is None:
            raise HTTPException(404, "no medial mesh loaded")
        if not req.seeds:
            raise HTTPException(422, "at least one seed vertex required")
        with state.job_lock:
            if state.active_job is not None and \
                    state.jobs[state.active_job].phase not in ("done", "failed"):
                raise HTTPException(409, "a job is already running")
            job = JobStatus(uuid.uuid4().hex[:12])
            state.jobs[job.job_id] = job
            state.active_job = job.job_id

        config = PipelineConfig(
            mesh_path=state.mesh_path,
            medial_path=state.medial_path,
            out_path=state.document_path,
            delta=req.delta,
            init_count=max(1, len(req.seeds)),
            max_iterations=req.max_iterations,
            fit_resolution=req.fit_resolution,
            refine=req.refine,
            seeds=req.seeds,
        )

        def work():
            try:
                run_pipeline(config, progress=job.advance)
            except Exception as exc:  # surfaced through job status
                job.error = f"{job.phase}: {exc}"
                job.phase = "failed"

        threading.Thread(target=work, daemon=True).start()
        return {"job": job.job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        return job.to_dict()

    @app.get("/msd")
    def get_msd():
        if not os.path.exists(state.document_path):
            raise HTTPException(404, "no document yet")
        doc = load_document(state.document_path, verify_target=False)
        import json

        return json.loads(dumps_document(doc))

    @app.get("/reconstruction")
    def get_reconstruction(grid: int = 64):
        if not os.path.exists(state.document_path):
            raise HTTPException(404, "no document yet")
        doc = load_document(state.document_path, verify_target=False)
        field_ = UnionField(document_primitives(doc))
        mesh = extract_union_mesh(field_, grid)
        return {
            "n_vertices": mesh.n_vertices,
            "n_triangles": mesh.n_triangles,
            "mesh": pack_mesh(mesh),
        }

    return app


def serve(bind: str, port: int, state_dir: str,
          mesh_path: Optional[str] = None,
          medial_path: Optional[str] = None) -> None:
    import uvicorn

    app = create_app(state_dir, mesh_path, medial_path)
    uvicorn.run(app, host=bind, port=port)
