"""Triangle meshes, exact meshes, non-manifold complexes, and mesh I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import exact
from .exact import GeometryError, PrecisionError, Q, Vec3, mpq


class MeshFormatError(ValueError):
    pass


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# float mesh


class TriMesh:
    """Closed or open triangle mesh with float64 vertices.

    Immutable after construction; derived adjacency is computed lazily and
    cached.
    """

    def __init__(self, vertices, triangles, closed: Optional[bool] = None):
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValidationError("triangle index out of range")
        self._closed = closed
        self._edges = None
        self._edge_faces = None
        self._vertex_faces = None

    def __len__(self):
        return len(self.vertices)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edge_key(self, u: int, v: int) -> Tuple[int, int]:
        return (u, v) if u < v else (v, u)

    @property
    def edge_faces(self) -> Dict[Tuple[int, int], List[int]]:
        if self._edge_faces is None:
            ef: Dict[Tuple[int, int], List[int]] = {}
            for fi, (a, b, c) in enumerate(self.triangles):
                for u, v in ((a, b), (b, c), (c, a)):
                    ef.setdefault(self.edge_key(int(u), int(v)), []).append(fi)
            self._edge_faces = ef
        return self._edge_faces

    @property
    def edges(self) -> List[Tuple[int, int]]:
        if self._edges is None:
            self._edges = sorted(self.edge_faces.keys())
        return self._edges

    @property
    def vertex_faces(self) -> Dict[int, List[int]]:
        if self._vertex_faces is None:
            vf: Dict[int, List[int]] = {}
            for fi, tri in enumerate(self.triangles):
                for v in tri:
                    vf.setdefault(int(v), []).append(fi)
            self._vertex_faces = vf
        return self._vertex_faces

    def vertex_neighbors(self, v: int) -> Set[int]:
        out: Set[int] = set()
        for fi in self.vertex_faces.get(v, []):
            out.update(int(x) for x in self.triangles[fi])
        out.discard(v)
        return out

    def is_closed(self) -> bool:
        if self._closed is None:
            self._closed = bool(self.triangles.size) and all(
                len(fs) == 2 for fs in self.edge_faces.values()
            )
        return self._closed

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def vertex_areas(self, normalized: bool = True) -> np.ndarray:
        """One third of incident triangle areas per vertex."""
        tri_a = self.triangle_areas() / 3.0
        va = np.zeros(len(self.vertices))
        for k in range(3):
            np.add.at(va, self.triangles[:, k], tri_a)
        if normalized:
            total = va.sum()
            if total > 0:
                va = va / total
        return va

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_triangles


def normalize_to_unit_cube(vertices: np.ndarray) -> np.ndarray:
    """Scale/translate so the bounding box fits [0,1]^3, filling the longest axis."""
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    scale = (hi - lo).max()
    if scale <= 0:
        raise ValidationError("degenerate bounding box")
    return (vertices - lo) / scale


# ---------------------------------------------------------------------------
# I/O


def _parse_obj(text: str):
    vertices, faces = [], []
    for ln, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError as e:
                raise MeshFormatError(f"OBJ parse error at line {ln}: {e}")
        elif parts[0] == "f":
            try:
                idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            except ValueError as e:
                raise MeshFormatError(f"OBJ parse error at line {ln}: {e}")
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    return vertices, faces


def _parse_off(text: str):
    lines = [
        ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines or not lines[0].strip().upper().startswith("OFF"):
        raise MeshFormatError("OFF parse error at line 1: missing OFF header")
    header = lines[0].strip()
    body = lines[1:]
    if header.upper() != "OFF":  # counts on the header line
        counts = header[3:].split()
    else:
        counts = body[0].split()
        body = body[1:]
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError) as e:
        raise MeshFormatError(f"OFF parse error at line 2: {e}")
    vertices, faces = [], []
    for i in range(nv):
        try:
            vertices.append([float(x) for x in body[i].split()[:3]])
        except (ValueError, IndexError) as e:
            raise MeshFormatError(f"OFF parse error at line {i + 3}: {e}")
    for i in range(nf):
        parts = body[nv + i].split()
        try:
            k = int(parts[0])
            idx = [int(x) for x in parts[1 : 1 + k]]
        except (ValueError, IndexError) as e:
            raise MeshFormatError(f"OFF parse error at line {nv + i + 3}: {e}")
        for j in range(1, len(idx) - 1):
            faces.append([idx[0], idx[j], idx[j + 1]])
    return vertices, faces


def _parse_ply(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshFormatError("PLY parse error at line 1: missing ply header")
    nv = nf = 0
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if parts[:2] == ["element", "vertex"]:
            nv = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            nf = int(parts[2])
        elif parts and parts[0] == "format" and parts[1] != "ascii":
            raise MeshFormatError(f"PLY parse error at line {i + 1}: binary PLY unsupported")
        elif parts == ["end_header"]:
            i += 1
            break
        i += 1
    vertices, faces = [], []
    try:
        for j in range(nv):
            vertices.append([float(x) for x in lines[i + j].split()[:3]])
        for j in range(nf):
            parts = lines[i + nv + j].split()
            k = int(parts[0])
            idx = [int(x) for x in parts[1 : 1 + k]]
            for m in range(1, len(idx) - 1):
                faces.append([idx[0], idx[m], idx[m + 1]])
    except (ValueError, IndexError) as e:
        raise MeshFormatError(f"PLY parse error near line {i + 1}: {e}")
    return vertices, faces


_PARSERS = {"obj": _parse_obj, "off": _parse_off, "ply": _parse_ply}


def load_mesh(
    path: str,
    fmt: Optional[str] = None,
    normalize: bool = False,
    require_closed: bool = False,
) -> TriMesh:
    """Load an ASCII OBJ/OFF/PLY triangle mesh.

    Degenerate triangles (zero area under exact evaluation) are rejected.
    """
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    if fmt not in _PARSERS:
        raise MeshFormatError(f"unsupported format: {fmt}")
    with open(path) as f:
        text = f.read()
    vertices, faces = _PARSERS[fmt](text)
    try:
        verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    except ValueError as e:
        raise MeshFormatError(f"malformed vertex data: {e}") from e
    if normalize:
        verts = normalize_to_unit_cube(verts)
    mesh = TriMesh(verts, faces)
    for fi, (a, b, c) in enumerate(mesh.triangles):
        pa, pb, pc = (exact_point(verts[i]) for i in (a, b, c))
        if exact.triangle_normal(pa, pb, pc) == (0, 0, 0):
            raise ValidationError(f"degenerate triangle {fi}")
    if require_closed and not mesh.is_closed():
        raise ValidationError("mesh is not closed")
    return mesh


def save_mesh(mesh: TriMesh, path: str, fmt: Optional[str] = None) -> None:
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    lines = []
    # repr(float(x)) is the shortest string that round-trips the double
    if fmt == "obj":
        for v in mesh.vertices:
            lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for t in mesh.triangles:
            lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    elif fmt == "off":
        lines.append("OFF")
        lines.append(f"{mesh.n_vertices} {mesh.n_triangles} 0")
        for v in mesh.vertices:
            lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for t in mesh.triangles:
            lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    elif fmt == "ply":
        lines += [
            "ply",
            "format ascii 1.0",
            f"element vertex {mesh.n_vertices}",
            "property float x",
            "property float y",
            "property float z",
            f"element face {mesh.n_triangles}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        for v in mesh.vertices:
            lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for t in mesh.triangles:
            lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    else:
        raise MeshFormatError(f"unsupported format: {fmt}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# exact mesh


def exact_point(v) -> Vec3:
    return (exact.rational(float(v[0])), exact.rational(float(v[1])), exact.rational(float(v[2])))


PROVENANCE_ORIGINAL = "original"
PROVENANCE_PROJECTED = "projected-target"
PROVENANCE_INTERSECTION = "intersection"


class ExactTriMesh:
    """Triangle mesh with exact rational vertex coordinates.

    Vertex identity is exact coordinate equality.  `provenance[i]` records
    how vertex i came to be.
    """

    def __init__(self, vertices: Sequence[Vec3], triangles, provenance=None):
        self.vertices: List[Vec3] = list(vertices)
        self.triangles: List[Tuple[int, int, int]] = [
            (int(a), int(b), int(c)) for a, b, c in triangles
        ]
        self.provenance: List[str] = (
            list(provenance)
            if provenance is not None
            else [PROVENANCE_ORIGINAL] * len(self.vertices)
        )
        self._index: Optional[Dict[Vec3, int]] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def vertex_index(self) -> Dict[Vec3, int]:
        if self._index is None or len(self._index) != len(self.vertices):
            self._index = {v: i for i, v in enumerate(self.vertices)}
        return self._index

    def edges(self) -> Set[Tuple[int, int]]:
        out: Set[Tuple[int, int]] = set()
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                out.add((u, v) if u < v else (v, u))
        return out

    def euler_characteristic(self) -> int:
        used = {v for t in self.triangles for v in t}
        return len(used) - len(self.edges()) + len(self.triangles)

    def to_float_mesh(self) -> TriMesh:
        return TriMesh(
            [exact.to_float(v) for v in self.vertices], self.triangles
        )


def to_exact(mesh: TriMesh, precision_bits: int = 53) -> ExactTriMesh:
    """Convert a float mesh to exact rationals at the given precision.

    Raises PrecisionError when two distinct mesh vertices become identical
    rationals (precision too low to separate the pair).
    """
    if precision_bits < 53:
        raise ValueError("precision_bits must be >= 53")
    verts = []
    for v in mesh.vertices:
        verts.append(
            tuple(exact.round_to_precision(float(x), precision_bits) for x in v)
        )
    seen: Dict[Vec3, int] = {}
    for i, v in enumerate(verts):
        if v in seen:
            raise PrecisionError(
                f"precision {precision_bits} cannot separate vertices {seen[v]} and {i}"
            )
        seen[v] = i
    return ExactTriMesh(verts, mesh.triangles)


# ---------------------------------------------------------------------------
# non-manifold complexes


@dataclass
class NonManifoldMesh:
    """Simplicial 2-complex: isolated vertices, dangling edges, triangles."""

    vertices: np.ndarray
    edges: List[Tuple[int, int]] = field(default_factory=list)
    triangles: List[Tuple[int, int, int]] = field(default_factory=list)
    isolated_vertices: Set[int] = field(default_factory=set)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.edges = [tuple(sorted((int(u), int(v)))) for u, v in self.edges]
        self.triangles = [
            tuple(sorted((int(a), int(b), int(c)))) for a, b, c in self.triangles
        ]
        n = len(self.vertices)
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError("edge endpoint out of range")
        for t in self.triangles:
            if not all(0 <= x < n for x in t):
                raise ValidationError("triangle corner out of range")
        edge_set = set(self.edges)
        for a, b, c in self.triangles:
            for e in ((a, b), (b, c), (a, c)):
                ek = tuple(sorted(e))
                if ek not in edge_set:
                    self.edges.append(ek)
                    edge_set.add(ek)

    def element_count(self) -> int:
        return len(self.vertices) + len(self.edges) + len(self.triangles)

    def vertex_edges(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for ei, (u, v) in enumerate(self.edges):
            out.setdefault(u, []).append(ei)
            out.setdefault(v, []).append(ei)
        return out

    def edge_triangles(self) -> Dict[Tuple[int, int], List[int]]:
        out: Dict[Tuple[int, int], List[int]] = {}
        for ti, (a, b, c) in enumerate(self.triangles):
            for e in ((a, b), (b, c), (a, c)):
                out.setdefault(tuple(sorted(e)), []).append(ti)
        return out


def load_nonmanifold_off(path: str) -> NonManifoldMesh:
    """Extended OFF dialect: faces with 2 indices are dangling edges, faces
    with 1 index are isolated vertices."""
    with open(path) as f:
        lines = [
            ln
            for ln in f.read().splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
    if not lines or not lines[0].strip().upper().startswith("OFF"):
        raise MeshFormatError("OFF parse error at line 1: missing OFF header")
    counts = lines[1].split()
    nv, nf = int(counts[0]), int(counts[1])
    vertices = [[float(x) for x in lines[2 + i].split()[:3]] for i in range(nv)]
    edges: List[Tuple[int, int]] = []
    triangles: List[Tuple[int, int, int]] = []
    isolated: Set[int] = set()
    for i in range(nf):
        parts = lines[2 + nv + i].split()
        k = int(parts[0])
        idx = [int(x) for x in parts[1 : 1 + k]]
        if k == 1:
            isolated.add(idx[0])
        elif k == 2:
            edges.append((idx[0], idx[1]))
        else:
            for j in range(1, k - 1):
                triangles.append((idx[0], idx[j], idx[j + 1]))
    return NonManifoldMesh(np.asarray(vertices), edges, triangles, isolated)


def save_nonmanifold_off(mesh: NonManifoldMesh, path: str) -> None:
    lines = ["OFF"]
    nf = len(mesh.triangles) + len(mesh.edges) + len(mesh.isolated_vertices)
    lines.append(f"{len(mesh.vertices)} {nf} 0")
    for v in mesh.vertices:
        lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    for e in mesh.edges:
        lines.append(f"2 {e[0]} {e[1]}")
    for v in sorted(mesh.isolated_vertices):
        lines.append(f"1 {v}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# queries


def ray_first_hit(mesh: TriMesh, origin, direction, eps: float = 1e-12):
    """First hit (t, face) of the ray against the mesh, or None.

    Ties at identical t break to the lowest face index.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    n = np.linalg.norm(direction)
    if abs(n - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    v0 = mesh.vertices[mesh.triangles[:, 0]]
    e1 = mesh.vertices[mesh.triangles[:, 1]] - v0
    e2 = mesh.vertices[mesh.triangles[:, 2]] - v0
    h = np.cross(direction[None, :], e2)
    a = np.einsum("ij,ij->i", e1, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(np.abs(a) > eps, 1.0 / a, 0.0)
        s = origin[None, :] - v0
        u = f * np.einsum("ij,ij->i", s, h)
        q = np.cross(s, e1)
        v = f * np.einsum("ij,j->i", q, direction)
        t = f * np.einsum("ij,ij->i", e2, q)
    hit = (
        (np.abs(a) > eps)
        & (u >= -eps)
        & (v >= -eps)
        & (u + v <= 1 + eps)
        & (t > eps)
    )
    if not hit.any():
        return None
    idx = np.nonzero(hit)[0]
    tmin = t[idx].min()
    best = idx[t[idx] == tmin]
    return float(tmin), int(best.min())


def ray_all_hits_brute(mesh: TriMesh, origin, direction, eps: float = 1e-12):
    """Reference all-triangle scan; returns sorted list of (t, face)."""
    hits = []
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    for fi, (a, b, c) in enumerate(mesh.triangles):
        v0, v1, v2 = mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]
        e1, e2 = v1 - v0, v2 - v0
        h = np.cross(direction, e2)
        det = e1.dot(h)
        if abs(det) <= eps:
            continue
        f = 1.0 / det
        s = origin - v0
        u = f * s.dot(h)
        if u < -eps or u > 1 + eps:
            continue
        q = np.cross(s, e1)
        v = f * direction.dot(q)
        if v < -eps or u + v > 1 + eps:
            continue
        t = f * e2.dot(q)
        if t > eps:
            hits.append((float(t), fi))
    hits.sort()
    return hits


def ray_first_hits_batch(
    mesh: TriMesh, origins: np.ndarray, directions: np.ndarray, eps: float = 1e-12,
    chunk: int = 256,
) -> np.ndarray:
    """First-hit distances for many rays at once; inf where a ray misses."""
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    v0 = mesh.vertices[mesh.triangles[:, 0]]
    e1 = mesh.vertices[mesh.triangles[:, 1]] - v0
    e2 = mesh.vertices[mesh.triangles[:, 2]] - v0
    out = np.empty(len(origins))
    for lo in range(0, len(origins), chunk):
        o = origins[lo : lo + chunk]
        d = directions[lo : lo + chunk]
        h = np.cross(d[:, None, :], e2[None, :, :])
        a = np.einsum("fj,qfj->qf", e1, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(np.abs(a) > eps, 1.0 / a, 0.0)
            s = o[:, None, :] - v0[None, :, :]
            u = f * np.einsum("qfj,qfj->qf", s, h)
            q = np.cross(s, e1[None, :, :])
            v = f * np.einsum("qfj,qj->qf", q, d)
            t = f * np.einsum("fj,qfj->qf", e2, q)
        hit = (
            (np.abs(a) > eps)
            & (u >= -eps)
            & (v >= -eps)
            & (u + v <= 1 + eps)
            & (t > eps)
        )
        out[lo : lo + len(o)] = np.where(hit, t, np.inf).min(axis=1)
    return out


def point_mesh_distance(mesh: TriMesh, x) -> float:
    """Unsigned distance from x to the mesh surface (exact per-triangle)."""
    x = np.asarray(x, dtype=np.float64)
    best = np.inf
    for tri in mesh.triangles:
        p, _ = closest_point_on_element(x, mesh.vertices[tri])
        best = min(best, float(np.linalg.norm(x - p)))
    return best


def point_inside(mesh: TriMesh, point, direction=(0.577350269189626, 0.577350269189626, 0.577350269189626)) -> bool:
    """Parity test: odd number of crossings along a fixed ray direction."""
    hits = ray_all_hits_brute(mesh, point, np.asarray(direction) / np.linalg.norm(direction))
    # collapse duplicate t values from shared-edge hits
    ts = []
    for t, _ in hits:
        if not ts or abs(t - ts[-1]) > 1e-9:
            ts.append(t)
    return len(ts) % 2 == 1


def closest_point_on_element(x, corners):
    """Closest point on a vertex/segment/triangle element.

    Returns (point, barycentric weights over the 1-3 corners).
    """
    x = np.asarray(x, dtype=np.float64)
    corners = [np.asarray(c, dtype=np.float64) for c in corners]
    if len(corners) == 1:
        return corners[0].copy(), np.array([1.0])
    if len(corners) == 2:
        a, b = corners
        d = b - a
        denom = d.dot(d)
        if denom == 0:
            raise GeometryError("zero-length edge element")
        t = np.clip((x - a).dot(d) / denom, 0.0, 1.0)
        return a + t * d, np.array([1.0 - t, t])
    a, b, c = corners
    # project onto plane, then clamp to the triangle (Ericson-style regions)
    ab, ac, ap = b - a, c - a, x - a
    d1, d2 = ab.dot(ap), ac.dot(ap)
    if d1 <= 0 and d2 <= 0:
        return a.copy(), np.array([1.0, 0.0, 0.0])
    bp = x - b
    d3, d4 = ab.dot(bp), ac.dot(bp)
    if d3 >= 0 and d4 <= d3:
        return b.copy(), np.array([0.0, 1.0, 0.0])
    vc = d1 * d4 - d3 * d2
    if vc <= 0 <= d1 and d3 <= 0:
        t = d1 / (d1 - d3)
        return a + t * ab, np.array([1.0 - t, t, 0.0])
    cp = x - c
    d5, d6 = ab.dot(cp), ac.dot(cp)
    if d6 >= 0 and d5 <= d6:
        return c.copy(), np.array([0.0, 0.0, 1.0])
    vb = d5 * d2 - d1 * d6
    if vb <= 0 <= d2 and d6 <= 0:
        t = d2 / (d2 - d6)
        return a + t * ac, np.array([1.0 - t, 0.0, t])
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + t * (c - b), np.array([0.0, 1.0 - t, t])
    denom = va + vb + vc
    v = vb / denom
    w = vc / denom
    return a + ab * v + ac * w, np.array([1.0 - v - w, v, w])


# ---------------------------------------------------------------------------
# link condition


def vertex_link(mesh: TriMesh, v: int) -> Set[frozenset]:
    """Link of a vertex: opposite edges and their vertices."""
    link: Set[frozenset] = set()
    for fi in mesh.vertex_faces.get(v, []):
        others = [int(x) for x in mesh.triangles[fi] if int(x) != v]
        link.add(frozenset(others))
        for o in others:
            link.add(frozenset((o,)))
    return link


def edge_link(mesh: TriMesh, u: int, v: int) -> Set[frozenset]:
    link: Set[frozenset] = set()
    for fi in mesh.edge_faces.get(mesh.edge_key(u, v), []):
        w = [int(x) for x in mesh.triangles[fi] if int(x) not in (u, v)]
        if w:
            link.add(frozenset((w[0],)))
    return link


def link_condition(mesh: TriMesh, u: int, v: int) -> bool:
    """True iff lk(u) & lk(v) == lk(uv) (collapse preserves topology)."""
    if mesh.edge_key(u, v) not in mesh.edge_faces:
        raise ValueError(f"edge ({u}, {v}) not in mesh")
    return vertex_link(mesh, u) & vertex_link(mesh, v) == edge_link(mesh, u, v)


def link_condition_fast(mesh: TriMesh, u: int, v: int) -> bool:
    """Optimized check: common neighbors must be exactly the edge's apexes."""
    key = mesh.edge_key(u, v)
    if key not in mesh.edge_faces:
        raise ValueError(f"edge ({u}, {v}) not in mesh")
    common = mesh.vertex_neighbors(u) & mesh.vertex_neighbors(v)
    apexes = {
        int(x)
        for fi in mesh.edge_faces[key]
        for x in mesh.triangles[fi]
        if int(x) not in (u, v)
    }
    if common != apexes:
        return False
    # any shared link edge must be the opposite edge of a tetrahedron-like
    # configuration; it only exists if two apexes are themselves connected
    # and both triangles exist at u and v
    for a in apexes:
        for b in apexes:
            if a < b and mesh.edge_key(a, b) in mesh.edge_faces:
                uab = any(
                    {u, a, b} == {int(x) for x in mesh.triangles[fi]}
                    for fi in mesh.edge_faces[mesh.edge_key(a, b)]
                )
                vab = any(
                    {v, a, b} == {int(x) for x in mesh.triangles[fi]}
                    for fi in mesh.edge_faces[mesh.edge_key(a, b)]
                )
                if uab and vab:
                    return False
    return True
