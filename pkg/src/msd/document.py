"""MSD document persistence.

A document bundles the target-mesh reference (path + content hash), the
medial skeleton, one primitive record per skeletal element, and pipeline
metadata.  The on-disk form is canonical JSON (sorted keys, fixed
separators) so identical documents are byte-identical; exact refined
meshes keep their rational coordinates as "num/den" strings.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from gmpy2 import mpq

from .mesh import ExactTriMesh, NonManifoldMesh

FORMAT_VERSION = 1


class DocumentError(ValueError):
    pass


class MigrationError(DocumentError):
    pass


def rational_str(q: mpq) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(s: str) -> mpq:
    num, _, den = s.partition("/")
    return mpq(int(num), int(den)) if den else mpq(int(num))


def exact_mesh_to_record(mesh: ExactTriMesh) -> Dict:
    return {
        "vertices": [[rational_str(c) for c in v] for v in mesh.vertices],
        "triangles": [list(t) for t in mesh.triangles],
        "provenance": list(mesh.provenance),
    }


def exact_mesh_from_record(rec: Dict) -> ExactTriMesh:
    verts = [tuple(parse_rational(c) for c in v) for v in rec["vertices"]]
    return ExactTriMesh(verts, rec["triangles"], rec.get("provenance"))


def file_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


@dataclass
class PrimitiveRecord:
    """One skeletal element with its fitted radii and optional exact
    refined mesh."""

    element_kind: str                  # vertex | edge | triangle
    corners: List[List[float]]
    resolution: str
    epsilon: float
    radii: List[float]
    slab_grid: Optional[List[int]] = None
    refined: Optional[Dict] = None     # exact mesh record

    def to_dict(self) -> Dict:
        out = {
            "element_kind": self.element_kind,
            "corners": self.corners,
            "resolution": self.resolution,
            "epsilon": self.epsilon,
            "radii": self.radii,
        }
        if self.slab_grid is not None:
            out["slab_grid"] = list(self.slab_grid)
        if self.refined is not None:
            out["refined"] = self.refined
        return out

    @staticmethod
    def from_dict(d: Dict) -> "PrimitiveRecord":
        return PrimitiveRecord(
            d["element_kind"], d["corners"], d["resolution"],
            d["epsilon"], d["radii"], d.get("slab_grid"), d.get("refined"),
        )


def skeleton_to_record(geometry: NonManifoldMesh) -> Dict:
    return {
        "vertices": [[float(x) for x in v] for v in geometry.vertices],
        "edges": [list(e) for e in geometry.edges],
        "triangles": [list(t) for t in geometry.triangles],
        "isolated_vertices": sorted(geometry.isolated_vertices),
    }


def skeleton_from_record(rec: Dict) -> NonManifoldMesh:
    return NonManifoldMesh(
        np.asarray(rec["vertices"], dtype=np.float64),
        [tuple(e) for e in rec["edges"]],
        [tuple(t) for t in rec["triangles"]],
        set(rec.get("isolated_vertices", [])),
    )


def _pure_edge_count(geometry: NonManifoldMesh) -> int:
    tri_edges = set()
    for a, b, c in geometry.triangles:
        tri_edges.update([(a, b), (b, c), (a, c)])
    return sum(1 for e in geometry.edges if e not in tri_edges)


@dataclass
class MsdDocument:
    target_path: str
    target_hash: str
    skeleton: Dict
    primitives: List[PrimitiveRecord]
    metadata: Dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.validate()

    def skeleton_geometry(self) -> NonManifoldMesh:
        return skeleton_from_record(self.skeleton)

    def element_count(self) -> int:
        g = self.skeleton_geometry()
        return len(g.vertices) + _pure_edge_count(g) + len(g.triangles)

    def validate(self) -> None:
        n = self.element_count()
        if n != len(self.primitives):
            raise DocumentError(
                f"{n} skeletal elements but {len(self.primitives)} "
                "primitive records: every element needs exactly one"
            )

    def to_dict(self) -> Dict:
        return {
            "format_version": self.format_version,
            "target_path": self.target_path,
            "target_hash": self.target_hash,
            "skeleton": self.skeleton,
            "primitives": [p.to_dict() for p in self.primitives],
            "metadata": self.metadata,
        }

    @staticmethod
    def from_dict(d: Dict) -> "MsdDocument":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise MigrationError(
                f"document format version {version!r}; this build reads "
                f"version {FORMAT_VERSION} only"
            )
        return MsdDocument(
            d["target_path"], d["target_hash"], d["skeleton"],
            [PrimitiveRecord.from_dict(p) for p in d["primitives"]],
            d.get("metadata", {}), version,
        )


def dumps_document(doc: MsdDocument) -> str:
    return json.dumps(
        doc.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False
    )


def save_document(doc: MsdDocument, path: str) -> None:
    text = dumps_document(doc)
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def load_document(path: str, verify_target: bool = True) -> MsdDocument:
    with open(path) as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"document parse error at offset {exc.pos}: {exc.msg}"
        ) from exc
    doc = MsdDocument.from_dict(data)
    if verify_target:
        tpath = doc.target_path
        if not os.path.isabs(tpath):
            tpath = os.path.join(os.path.dirname(os.path.abspath(path)), tpath)
        if os.path.exists(tpath) and file_hash(tpath) != doc.target_hash:
            raise DocumentError(
                f"target mesh {doc.target_path} does not match the "
                "document's recorded hash"
            )
    return doc
