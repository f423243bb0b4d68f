"""Global candidate optimization: energies, Nelder-Mead, insertion."""

import numpy as np
import pytest

from msd.elements import (
    DiscretizedPrimitive,
    build_canonical,
    medial_vertex,
)
from msd.fitting import progressive_fit
from msd.globalopt import (
    NelderMead,
    OptimConfig,
    coverage_test,
    covered_bitmap,
    evaluate,
    init_candidates,
    optimize,
    skeleton_elements,
    uncovered_regions,
)
from msd.mesh import NonManifoldMesh
from msd.shapes import icosphere
from msd.skeleton import MedialMesh


def loop_medial(n=12, radius=1.0):
    ang = 2 * np.pi * np.arange(n) / n
    verts = np.stack([radius * np.cos(ang), radius * np.sin(ang),
                      np.zeros(n)], axis=1)
    return MedialMesh(
        NonManifoldMesh(verts, [(i, (i + 1) % n) for i in range(n)], [])
    )


def point_medial():
    return MedialMesh(NonManifoldMesh(np.zeros((1, 3)), [], [], {0}))


def test_init_candidates_are_distinct_mesh_vertices():
    medial = loop_medial(12)
    for k in (1, 3, 6):
        cands = init_candidates(medial, k)
        assert cands.shape == (k, 3)
        assert len({tuple(np.round(c, 12)) for c in cands}) == k
        verts = {tuple(v) for v in medial.geometry.vertices}
        for c in cands:
            assert tuple(c) in verts


def test_init_candidates_validates_k():
    medial = loop_medial(4)
    with pytest.raises(ValueError):
        init_candidates(medial, 0)
    with pytest.raises(ValueError):
        init_candidates(medial, 5)


def test_nelder_mead_minimizes_quadratic():
    opt = NelderMead(lambda x: float(np.sum((x - 3.0) ** 2)),
                     np.zeros(4), scale=0.5)
    for _ in range(400):
        opt.step()
    x, fx = opt.best
    assert fx < 1e-10
    assert np.allclose(x, 3.0, atol=1e-5)


def test_incumbent_energy_never_increases():
    medial = loop_medial(8)
    target_pt = np.array([0.3, -0.2, 0.1])

    def surrogate(cands):
        return float(np.sum((cands - target_pt) ** 2))

    result = optimize(
        medial, icosphere(1),
        OptimConfig(max_iterations=60, init_count=3),
        energy_fn=surrogate,
    )
    best = [rec.best_total for rec in result.trace]
    assert all(b <= a + 1e-12 for a, b in zip(best[:-1], best[1:]))
    assert best[-1] <= best[0]


def test_coverage_bitmap_and_pointwise_agree(sphere_target):
    el = medial_vertex((0, 0, 0))
    b = build_canonical(el, resolution="low")
    prim = progressive_fit(
        DiscretizedPrimitive(el, b, np.full(b.n_vertices, 1e-3)), sphere_target
    )
    delta = 0.02
    bitmap = covered_bitmap(sphere_target, [prim], delta)
    for k in range(0, sphere_target.n_vertices, 17):
        assert bitmap[k] == coverage_test(
            sphere_target.vertices[k], [prim], delta
        )


def test_uncovered_regions_order_and_partition(sphere_target):
    covered = np.ones(sphere_target.n_vertices, dtype=bool)
    # two uncovered patches of different sizes
    covered[[0]] = False
    nb = sorted(sphere_target.vertex_neighbors(50))[:4] + [50]
    covered[nb] = False
    regions = uncovered_regions(sphere_target, covered)
    assert sorted(len(r) for r in regions) == [1, 5]
    assert len(regions[0]) == 5  # largest area first
    assert sorted(v for r in regions for v in r) == sorted([0] + nb)


def test_evaluate_sphere_energy_components(sphere_target):
    medial = point_medial()
    config = OptimConfig(init_count=1, fit_resolution="low")
    ev = evaluate(medial, sphere_target, np.zeros((1, 3)), config)
    assert ev.skeleton is not None
    assert len(ev.primitives) == 1
    assert -1.0 <= ev.energy.coverage <= 0.0
    assert ev.energy.count == 0.0
    assert len(skeleton_elements(ev.skeleton)) == 1


def test_optimize_single_site_sphere_stops(sphere_target):
    medial = point_medial()
    config = OptimConfig(
        init_count=1, max_iterations=8, fit_resolution="low", stall_window=3
    )
    result = optimize(medial, sphere_target, config)
    assert result.iterations <= 8
    assert result.evaluation.skeleton is not None
    assert result.stopped_by in ("stall", "max-iterations", "full-coverage")
    best = [rec.best_total for rec in result.trace]
    assert all(b <= a + 1e-12 for a, b in zip(best[:-1], best[1:]))
