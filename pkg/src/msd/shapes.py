"""Procedural test shapes: spheres, tori, boxes, capsules."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def unit_cube() -> TriMesh:
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    )
    f = [
        [0, 2, 1], [0, 3, 2],
        [4, 5, 6], [4, 6, 7],
        [0, 1, 5], [0, 5, 4],
        [1, 2, 6], [1, 6, 5],
        [2, 3, 7], [2, 7, 6],
        [3, 0, 4], [3, 4, 7],
    ]
    return TriMesh(v, f, closed=True)


def tetrahedron() -> TriMesh:
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float64
    )
    f = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return TriMesh(v, f, closed=True)


def icosphere(subdivisions: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ]
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    cache = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new_faces
    v = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriMesh(v, faces, closed=True)


def torus(
    major_radius: float = 1.0,
    minor_radius: float = 0.35,
    n_major: int = 32,
    n_minor: int = 16,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    verts = []
    for i in range(n_major):
        a = 2 * np.pi * i / n_major
        ca, sa = np.cos(a), np.sin(a)
        for j in range(n_minor):
            b = 2 * np.pi * j / n_minor
            r = major_radius + minor_radius * np.cos(b)
            verts.append([r * ca, r * sa, minor_radius * np.sin(b)])
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = i * n_minor + (j + 1) % n_minor
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = ((i + 1) % n_major) * n_minor + j
            faces += [[a, b, c], [a, c, d]]
    v = np.asarray(verts) + np.asarray(center, dtype=np.float64)
    return TriMesh(v, faces, closed=True)


def capsule(
    p0, p1, radius: float, n_phi: int = 16, n_z: int = 8, n_cap: int = 4
) -> TriMesh:
    """Cylinder with hemispherical caps around segment p0-p1."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    axis = axis / length
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis.dot(ref)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    verts, rows = [], []
    # bottom cap rows (pole to equator), wall rows, top cap rows
    def ring(center, r, z_offset_dir=None):
        row = []
        for k in range(n_phi):
            ang = 2 * np.pi * k / n_phi
            p = center + r * (np.cos(ang) * u + np.sin(ang) * w)
            row.append(len(verts))
            verts.append(p)
        return row

    verts.append(p0 - radius * axis)
    bottom_pole = 0
    for i in range(1, n_cap + 1):
        alpha = (np.pi / 2) * i / n_cap
        rows.append(
            ring(p0 - radius * np.cos(alpha) * axis, radius * np.sin(alpha))
        )
    for i in range(1, n_z):
        rows.append(ring(p0 + axis * (length * i / n_z), radius))
    for i in range(n_cap, 0, -1):
        alpha = (np.pi / 2) * i / n_cap
        rows.append(
            ring(p1 + radius * np.cos(alpha) * axis, radius * np.sin(alpha))
        )
    verts.append(p1 + radius * axis)
    top_pole = len(verts) - 1
    faces = []
    for k in range(n_phi):
        faces.append([bottom_pole, rows[0][(k + 1) % n_phi], rows[0][k]])
    for r0, r1 in zip(rows[:-1], rows[1:]):
        for k in range(n_phi):
            k1 = (k + 1) % n_phi
            faces += [[r0[k], r0[k1], r1[k1]], [r0[k], r1[k1], r1[k]]]
    for k in range(n_phi):
        faces.append([top_pole, rows[-1][k], rows[-1][(k + 1) % n_phi]])
    return TriMesh(np.asarray(verts), faces, closed=True)
