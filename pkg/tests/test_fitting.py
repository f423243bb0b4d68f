"""Radius fitting: alternating active-set solver and progressive growth."""

import numpy as np
import pytest
import scipy.sparse as sp

from msd.elements import (
    DiscretizedPrimitive,
    build_canonical,
    medial_edge,
    medial_vertex,
)
from msd.fitting import (
    DEFAULT_W,
    DEFAULT_W_HAT,
    MAX_ITERATIONS,
    FitProblem,
    boundary_laplacian,
    compute_rmax,
    progressive_fit,
    solve_fit,
)
from msd.mesh import GeometryError
from msd.shapes import icosphere


def ring_laplacian(n):
    rows = np.arange(n)
    A = sp.coo_matrix(
        (np.ones(2 * n),
         (np.concatenate([rows, rows]),
          np.concatenate([(rows + 1) % n, (rows - 1) % n]))),
        shape=(n, n),
    ).tocsr()
    return (sp.diags(np.full(n, 2.0)) - A).tocsr()


def full_objective(L, r, r_tgt, r_max, w, w_hat):
    Lr = L @ r
    over = np.maximum(r - r_max, 0.0)
    return float(Lr @ Lr + w * np.sum((r - r_tgt) ** 2)
                 + w_hat * np.sum(over ** 2))


def projected_gradient_oracle(L, r_tgt, r_max, w, w_hat, r0,
                              iters=200000, tol=1e-16):
    """Independent first-order minimizer of the fitting energy."""
    LtL = (L.T @ L).tocsr()
    r = r0.copy()
    f = full_objective(L, r, r_tgt, r_max, w, w_hat)
    step = 1.0 / (w + w_hat + sp.linalg.norm(LtL))
    for _ in range(iters):
        g = 2 * (LtL @ r) + 2 * w * (r - r_tgt) \
            + 2 * w_hat * np.maximum(r - r_max, 0.0)
        r_new = r - step * g
        f_new = full_objective(L, r_new, r_tgt, r_max, w, w_hat)
        while f_new > f and step > 1e-18:
            step *= 0.5
            r_new = r - step * g
            f_new = full_objective(L, r_new, r_tgt, r_max, w, w_hat)
        if f - f_new < tol * max(1.0, f):
            r, f = r_new, f_new
            break
        r, f = r_new, f_new
        step *= 1.3
    return r, f


def test_solver_matches_gradient_oracle_100_dof():
    n = 100
    L = ring_laplacian(n)
    rng = np.random.default_rng(7)
    r_max = 0.5 + rng.random(n)
    r_tgt = 0.8 + 0.5 * rng.random(n)
    r0 = np.full(n, 0.1)
    problem = FitProblem(L, r_max, r_tgt, r0)
    r, report = solve_fit(problem)
    f_solver = full_objective(L, r, r_tgt, r_max, DEFAULT_W, DEFAULT_W_HAT)
    _, f_oracle = projected_gradient_oracle(
        L, r_tgt, r_max, DEFAULT_W, DEFAULT_W_HAT, r0
    )
    assert f_solver <= f_oracle + 1e-6
    assert abs(f_solver - f_oracle) <= 1e-6 * max(1.0, f_oracle)


def test_iteration_cap_is_always_respected():
    rng = np.random.default_rng(3)
    for trial in range(5):
        n = 40
        L = ring_laplacian(n)
        problem = FitProblem(
            L, 0.2 + rng.random(n), 0.1 + rng.random(n), rng.random(n)
        )
        _, report = solve_fit(problem)
        assert report.iterations <= MAX_ITERATIONS == 15


def test_centered_sphere_fixed_point():
    """Constant radii on a symmetric problem reach the closed-form blend
    of target and cap radius in one active-set pass."""
    el = medial_vertex((0, 0, 0))
    b = build_canonical(el, resolution="low")
    n = b.n_vertices
    L = boundary_laplacian(b)
    R, T = 0.9, 1.2  # cap below target: contact active everywhere
    problem = FitProblem(L, np.full(n, R), np.full(n, T), np.full(n, T))
    r, report = solve_fit(problem)
    expected = (DEFAULT_W * T + DEFAULT_W_HAT * R) / (DEFAULT_W + DEFAULT_W_HAT)
    assert np.abs(r - expected).max() < 1e-9
    assert report.iterations <= 15
    assert report.converged


def test_boundary_laplacian_rows_sum_to_zero():
    b = build_canonical(medial_edge((0, 0, 0), (1, 0, 0)), resolution="min")
    L = boundary_laplacian(b)
    assert np.abs(L.sum(axis=1)).max() == 0
    assert (L.diagonal() > 0).all()


def test_compute_rmax_sphere_distances():
    target = icosphere(2)
    b = build_canonical(medial_vertex((0, 0, 0)), resolution="low")
    r_max = compute_rmax(b, target)
    assert r_max.shape == (b.n_vertices,)
    # rays start at epsilon and stop on the unit sphere's facets
    assert (r_max > 0.8).all() and (r_max < 0.95).all()


def test_compute_rmax_rejects_outside_element():
    target = icosphere(1)
    b = build_canonical(medial_vertex((5, 0, 0)), resolution="min")
    with pytest.raises(GeometryError):
        compute_rmax(b, target)


def test_progressive_fit_fills_sphere_without_penetration():
    target = icosphere(2)
    el = medial_vertex((0, 0, 0))
    b = build_canonical(el, resolution="low")
    prim = DiscretizedPrimitive(el, b, np.full(b.n_vertices, 1e-3))
    fit = progressive_fit(prim, target)
    r_max = compute_rmax(b, target)
    assert (fit.radii <= r_max + 1e-12).all()
    assert fit.radii.mean() > 0.85  # nearly fills the sphere
