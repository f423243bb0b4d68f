"""Reconstruction error metrics and the union implicit field."""

import numpy as np
import pytest

from msd.elements import (
    DiscretizedPrimitive,
    build_canonical,
    medial_vertex,
    realized_mesh,
)
from msd.metrics import (
    UnionField,
    error_metrics,
    extract_union_mesh,
    point_triangles_distance,
    reconstruction_samples,
    union_value,
)


def sphere_prim(center=(0.0, 0.0, 0.0), r=0.4, resolution="high"):
    el = medial_vertex(center)
    b = build_canonical(el, resolution=resolution)
    return DiscretizedPrimitive(el, b, np.full(b.n_vertices, r))


def test_identical_surfaces_give_zero_error():
    prim = sphere_prim(resolution="low")
    field = UnionField([prim])
    rep = error_metrics(realized_mesh(prim), field)
    assert abs(rep.eps1) <= 1e-12
    assert abs(rep.eps2) <= 1e-12
    assert abs(rep.eps) <= 1e-12
    assert abs(rep.hausdorff) <= 1e-12


def test_concentric_spheres_measure_the_offset():
    inner = sphere_prim(r=0.4)
    outer = sphere_prim(r=0.5)  # same epsilon-boundary, radius +0.1
    field = UnionField([inner])
    rep = error_metrics(realized_mesh(outer), field, combine="mean")
    assert abs(rep.eps1 - 0.1) <= 1e-3
    assert abs(rep.eps2 - 0.1) <= 1e-3
    assert abs(rep.eps - 0.1) <= 1e-3
    assert abs(rep.hausdorff - 0.1) <= 2e-3


def test_combine_modes():
    prim = sphere_prim(resolution="min")
    field = UnionField([sphere_prim(r=0.45, resolution="min")])
    target = realized_mesh(prim)
    s = error_metrics(target, field, combine="sum")
    m = error_metrics(target, field, combine="mean")
    assert s.eps == pytest.approx(s.eps1 + s.eps2)
    assert m.eps == pytest.approx(0.5 * (s.eps1 + s.eps2))
    with pytest.raises(ValueError):
        error_metrics(target, field, combine="max")


def test_union_values_accelerated_matches_brute():
    field = UnionField([
        sphere_prim((0.0, 0.0, 0.0), 0.3, "min"),
        sphere_prim((0.5, 0.0, 0.0), 0.25, "min"),
    ])
    rng = np.random.default_rng(7)
    X = rng.uniform(-1.0, 1.5, size=(200, 3))
    fast = field.values(X, accelerated=True)
    brute = field.values(X, accelerated=False)
    np.testing.assert_allclose(fast, brute, rtol=0, atol=1e-12)


def test_union_value_signs():
    field = UnionField([sphere_prim(r=0.4, resolution="mid")])
    assert union_value(field, (0.0, 0.0, 0.0)) < 0  # inside
    assert union_value(field, (2.0, 0.0, 0.0)) > 0  # outside


def test_union_field_rejects_empty():
    with pytest.raises(ValueError):
        UnionField([])


def test_overlapping_samples_drop_interior_vertices():
    a = sphere_prim((0.0, 0.0, 0.0), 0.3, "min")
    b = sphere_prim((0.2, 0.0, 0.0), 0.3, "min")
    samples = reconstruction_samples(UnionField([a, b]))
    total = a.boundary.n_vertices + b.boundary.n_vertices
    assert 0 < len(samples) < total


def test_extract_union_mesh_topology_and_accuracy():
    field = UnionField([sphere_prim(r=0.4, resolution="mid")])
    mesh = extract_union_mesh(field, grid_resolution=48)
    assert mesh.euler_characteristic() == 2
    vals = field.values(mesh.vertices)
    assert np.abs(vals).max() < 0.02  # vertices track the iso-surface
    with pytest.raises(ValueError):
        extract_union_mesh(field, grid_resolution=8)


def test_point_triangles_distance_exact_cases():
    tri = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    pts = np.array([
        [0.25, 0.25, 1.0],   # above the interior
        [2.0, 0.0, 0.0],     # beyond a corner
        [0.5, -1.0, 0.0],    # beside an edge
        [0.2, 0.3, 0.0],     # on the triangle
    ])
    d = point_triangles_distance(pts, tri)
    np.testing.assert_allclose(d, [1.0, 1.0, 1.0, 0.0], atol=1e-12)
