"""Cylindrical charts: exact round trips and intersection recovery."""

import pytest
from gmpy2 import mpq

from msd.exact import GeometryError, collinear, lerp, vec, vsub, vcross
from msd.mesh import PrecisionError
from msd.refine.frames import (
    PI_R,
    CylFrame,
    V1Table,
    barycentric_weight_cyl,
    build_v1_table,
    cylindrical_transform,
    intersection_vertex_backward,
    shift_azimuth,
    to_chart,
    to_chart0,
)

FIXTURE_POINTS = [
    vec(mpq(1, 3), mpq(1, 7), mpq(1, 2)),
    vec(-1, 2, mpq(3, 4)),
    vec(mpq(2, 5), mpq(-3, 5), 0),
    vec(1, 1, 1),
    vec(mpq(-7, 11), mpq(5, 13), mpq(9, 4)),
    vec(0, mpq(1, 1000), mpq(-1, 3)),
]


def unit_z_frame():
    return CylFrame(vec(0, 0, 0), vec(0, 0, 1))


def test_forward_backward_is_exact_identity():
    frame = unit_z_frame()
    table = build_v1_table(frame, FIXTURE_POINTS)
    for chart in (0, 1):
        cyl = cylindrical_transform(
            FIXTURE_POINTS, frame, "forward", table, chart_id=chart
        )
        back = cylindrical_transform(
            cyl, frame, "backward", table, chart_id=chart
        )
        assert back == FIXTURE_POINTS  # bitwise rational equality


def test_axial_coordinate_is_exact():
    frame = CylFrame(vec(1, 2, 3), vec(3, 2, 7))
    p = lerp(vec(1, 2, 3), vec(3, 2, 7), mpq(5, 17))
    q = vec(p[0] + 4, p[1] - 1, p[2])  # shifted in the orthogonal plane?
    assert frame.axial(p) == mpq(5, 17)


def test_chart_shift_is_an_involution_inside_canonical_range():
    # bitwise involution holds strictly inside (-pi, pi); the boundary
    # +/-pi pair is identified rather than fixed
    for phi in (mpq(0), mpq(1, 3), -mpq(311, 100), mpq(3)):
        assert -PI_R < phi < PI_R
        c = (mpq(1), phi, mpq(1, 2))
        assert to_chart0(to_chart(c, 1), 1) == c
        assert shift_azimuth(shift_azimuth(phi)) == phi
    # boundary identification: +pi and -pi name the same azimuth
    assert shift_azimuth(shift_azimuth(PI_R)) == -PI_R


def test_reference_parallel_gets_exact_azimuth():
    ref = vec(1, 0, 0)
    frame = CylFrame(vec(0, 0, 0), vec(0, 0, 1), reference=ref)
    assert frame.cylindrical(vec(2, 0, mpq(1, 3)))[1] == 0
    assert frame.cylindrical(vec(-5, 0, mpq(1, 4)))[1] == PI_R


def test_table_rejects_indistinguishable_pair():
    frame = CylFrame(vec(0, 0, 0), vec(0, 0, 1), precision_bits=60)
    table = V1Table(frame)
    base = vec(mpq(1, 3), mpq(1, 7), 0)
    table.add(base)
    tiny = mpq(1, 2 ** 90)  # below the chart's precision
    with pytest.raises(PrecisionError):
        table.add(vec(mpq(1, 3) + tiny, mpq(1, 7), 0))


def test_backward_requires_tracked_vertex():
    frame = unit_z_frame()
    table = build_v1_table(frame, FIXTURE_POINTS[:2])
    with pytest.raises(GeometryError):
        cylindrical_transform(
            [(mpq(1), mpq(1, 9), mpq(1, 2))], frame, "backward", table
        )


def test_barycentric_weight_prefers_axial():
    a = (mpq(1), mpq(0), mpq(0))
    b = (mpq(2), mpq(1), mpq(1))
    c = (mpq(99), mpq(99), mpq(1, 4))  # only the axial entry is consistent
    assert barycentric_weight_cyl(c, a, b) == mpq(1, 4)


def test_intersection_recovery_lands_exactly_on_target_edge():
    frame = unit_z_frame()
    # target edge crossing the cylinder region at general position
    t0 = vec(mpq(1, 2), mpq(-1, 3), mpq(1, 5))
    t1 = vec(mpq(-1, 4), mpq(2, 3), mpq(4, 5))
    # chart-space edge: projections of two tracked mesh vertices
    e0 = vec(mpq(1, 2), mpq(1, 2), mpq(1, 10))
    e1 = vec(mpq(1, 3), mpq(-2, 5), mpq(9, 10))
    table = build_v1_table(frame, [e0, e1])
    c0, c1 = table.forward(e0), table.forward(e1)
    v_cld = tuple(
        a + mpq(3, 7) * (b - a) for a, b in zip(c0, c1)
    )  # synthetic intersection on the chart-space segment
    v_cts, v_hat = intersection_vertex_backward(
        frame, v_cld, (c0, c1), (e0, e1), target_edge=(t0, t1)
    )
    # recovered chart vertex is the exact lerp of the Cartesian endpoints
    assert v_cts == lerp(e0, e1, mpq(3, 7))
    # the target point lies exactly on the target edge: cross product zero
    assert vcross(vsub(v_hat, t0), vsub(t1, t0)) == (0, 0, 0)
    # and shares the exact axial coordinate with the recovered vertex
    assert frame.axial(v_hat) == frame.axial(v_cts)


def test_orthogonal_plane_intersection_exact():
    frame = CylFrame(vec(0, 0, 0), vec(0, 0, 2))
    a, b = vec(1, 0, 0), vec(1, 0, 1)
    p = vec(5, 5, mpq(1, 3))
    q = frame.orthogonal_plane_intersection(a, b, p)
    assert q == vec(1, 0, mpq(1, 3))
    with pytest.raises(GeometryError):
        frame.orthogonal_plane_intersection(vec(0, 0, 0), vec(1, 0, 0), p)


def test_radial_plane_intersection_exact():
    frame = unit_z_frame()
    p = vec(1, 0, mpq(1, 2))  # azimuth 0 half-plane
    a, b = vec(2, -1, 0), vec(2, 1, 0)
    q = frame.radial_plane_intersection(a, b, p)
    assert q == vec(2, 0, 0)
    # segment on the opposite side never crosses this half-plane
    with pytest.raises(GeometryError):
        frame.radial_plane_intersection(vec(-2, -1, 0), vec(-2, 1, 0), p)
