import numpy as np
import pytest
from gmpy2 import mpq

from msd.exact import vec
from msd.mesh import ExactTriMesh
from msd.shapes import icosphere, torus, unit_cube


@pytest.fixture(scope="session")
def sphere_target():
    return icosphere(2)


@pytest.fixture(scope="session")
def coarse_sphere_target():
    return icosphere(1)


@pytest.fixture(scope="session")
def cube_target():
    return unit_cube()


@pytest.fixture(scope="session")
def torus_target():
    return torus(major_radius=1.0, minor_radius=0.35, n_major=24, n_minor=12)


def exact_box(corners):
    """Closed exact box mesh from 8 corners ordered by (z, y, x) bits."""
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1),
             (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = []
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return ExactTriMesh(corners, faces)


def axis_box(lo, hi):
    """Axis-aligned exact box: lo/hi are (x, y, z) rational triples."""
    corners = [
        vec(hi[0] if sx else lo[0], hi[1] if sy else lo[1],
            hi[2] if sz else lo[2])
        for sz in (0, 1) for sy in (0, 1) for sx in (0, 1)
    ]
    return exact_box(corners)


def tilted_box(center, half_extents, cos_t=mpq(4, 5), sin_t=mpq(3, 5)):
    """Exact box rotated about z by a rational-cosine angle."""
    cx, cy, cz = (mpq(c) for c in center)
    X, Y, Z = (mpq(h) for h in half_extents)
    corners = [
        vec(cx + cos_t * (sx * X) - sin_t * (sy * Y),
            cy + sin_t * (sx * X) + cos_t * (sy * Y),
            cz + sz * Z)
        for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)
    ]
    return exact_box(corners)
