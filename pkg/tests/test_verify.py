import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbannuli.errors import Degenerate, GridTooCoarse
from fbannuli.params import derive_spectral
from fbannuli.surface import build_chart, build_data
from fbannuli.verify import (OracleChart, boundary_angles, catenoid_deviation,
                             critical_catenoid, critical_catenoid_t0, fit_sphere, flat_disk,
                             grid_triangles, mean_curvature, planar_curvature, probe_chart,
                             self_intersections, symmetry_residuals, verify_chart,
                             winding_number)


def sphere_points(center, radius, count, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(count, 3))
    return center + radius * x / np.linalg.norm(x, axis=1, keepdims=True)


@given(st.floats(0.1, 10.0), st.integers(0, 2 ** 31))
def test_fit_sphere_recovers_sphere(radius, seed):
    c = np.array([0.3, -1.0, 2.0])
    fit = fit_sphere(sphere_points(c, radius, 50, seed))
    assert abs(fit.radius - radius) < 1e-9 * radius
    assert np.max(np.abs(fit.center - c)) < 1e-9 * radius
    assert fit.residual < 1e-12


def test_fit_sphere_noise():
    rng = np.random.default_rng(1)
    p = sphere_points(np.zeros(3), 1.0, 200, 2)
    p += 1e-9 * rng.uniform(-1, 1, size=p.shape)
    assert fit_sphere(p).residual <= 1e-8


def test_fit_sphere_circle_on_known_sphere():
    # circle of radius 2 on a sphere of radius 3 about the origin
    th = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    z = math.sqrt(5.0)
    p = np.stack([2 * np.cos(th), 2 * np.sin(th), np.full_like(th, z)], axis=1)
    known = fit_sphere(p, center=np.zeros(3))
    assert abs(known.radius - 3.0) < 1e-14 and known.residual < 1e-15
    free = fit_sphere(p)
    assert free.is_plane
    assert abs(abs(free.plane_normal[2]) - 1) < 1e-14
    assert abs(abs(free.plane_offset) - z) < 1e-14
    assert abs(free.circle_radius - 2.0) < 1e-12
    assert np.max(np.abs(free.circle_center - [0, 0, z])) < 1e-12


def test_fit_sphere_degenerate():
    t = np.linspace(0, 1, 10)[:, None]
    with pytest.raises(Degenerate):
        fit_sphere(t * np.array([[1.0, 2.0, 3.0]]))
    with pytest.raises(Degenerate):
        fit_sphere(np.eye(3))


def test_critical_catenoid_oracle():
    t0 = critical_catenoid_t0()
    assert abs(t0 * math.tanh(t0) - 1) < 1e-15
    chart = critical_catenoid()
    for row in (0, -1):
        assert np.max(np.abs(np.linalg.norm(chart.psi[row], axis=-1) - 1)) < 1e-14
        ang = boundary_angles(chart, row)
        assert np.max(np.abs(ang - math.pi / 2)) < 1e-9
    rep = verify_chart(chart, {"m": 1, "n": 1, "angle": math.pi / 2, "winding": 1},
                       run_probe=False)
    assert rep.winding_number == 1
    assert rep.central_curve["strictly_convex"]
    assert all(rep.passed.values()), rep.passed


def test_mean_curvature_second_order():
    errs = [float(np.max(np.abs(mean_curvature(critical_catenoid(nu, 4 * (nu - 1) + 1)))))
            for nu in (33, 65, 129)]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 < a / b < 4.5


def test_flat_disk():
    chart = flat_disk()
    assert np.max(np.abs(mean_curvature(chart))) == 0.0
    assert np.max(np.abs(boundary_angles(chart, -1) - math.pi / 2)) < 1e-15
    assert catenoid_deviation(critical_catenoid().psi, 1.0) > 0


def test_catenoid_deviation_exact():
    t = np.linspace(-1, 1, 11)
    psi = np.stack([2 * np.cosh(t / 2), np.zeros_like(t), t], axis=1)
    assert catenoid_deviation(psi, 2.0) < 1e-15


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        verify_chart(critical_catenoid(17, 65))


def test_winding_and_curvature():
    th = np.linspace(0, 2 * math.pi, 101)
    circle = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert abs(winding_number(circle) - 1) < 1e-12
    assert abs(winding_number(np.stack([np.cos(3 * th), -np.sin(3 * th)], axis=1)) + 3) < 1e-12
    k = planar_curvature(np.column_stack([2 * circle, np.zeros(101)]))
    assert np.max(np.abs(k - 0.5)) < 1e-3


def test_symmetry_of_catenoid():
    res = symmetry_residuals(critical_catenoid(33, 257), 1, 4)
    assert set(res) == {"reflect_x3", "reflect_x2", "rotate_1/4", "rotate_2/4", "rotate_3/4"}
    assert max(res.values()) < 1e-14


@pytest.mark.parametrize("nu,nv,closed,n_tri", [(3, 3, False, 8), (4, 5, True, 24),
                                                 (2, 9, False, 16)])
def test_grid_triangles(nu, nv, closed, n_tri):
    tri = grid_triangles(nu, nv, closed)
    assert len(tri) == n_tri
    n_vert = nu * (nv - 1) if closed else nu * nv
    assert tri.max() == n_vert - 1
    assert len(np.unique(tri)) == n_vert


def test_triangle_probe():
    a = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    b = np.array([[0.2, 0.2, -1], [0.3, 0.2, 1], [0.2, 0.3, 1]], dtype=float)
    V = np.vstack([a, b])
    crossing = self_intersections(V, np.array([[0, 1, 2], [3, 4, 5]]))
    assert crossing["hits"] == 1
    disjoint = self_intersections(np.vstack([a, b + [5, 0, 0]]), np.array([[0, 1, 2], [3, 4, 5]]))
    assert disjoint["hits"] == 0
    # neighbours sharing a vertex are not counted
    adj = self_intersections(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.]]),
                             np.array([[0, 1, 2], [1, 3, 2]]))
    assert adj["hits"] == 0


def test_probe_embedded_and_immersed():
    assert probe_chart(critical_catenoid(33, 129))["hits"] == 0
    # a doubly covered catenoid intersects itself everywhere
    th = np.linspace(0, 4 * math.pi, 257)
    t = np.linspace(-1, 1, 17)
    T, TH = np.meshgrid(t, th, indexing="ij")
    psi = np.stack([np.cosh(T) * np.cos(TH) + 0.01 * np.cos(TH / 2),
                    np.cosh(T) * np.sin(TH), T], axis=-1)
    chart = OracleChart(t, th, psi, np.zeros_like(psi), closed=True, n_periods=2)
    assert probe_chart(chart)["hits"] > 0


def test_central_row_is_planar():
    sp = derive_spectral(-2.0, -0.5)
    data = build_data(sp)
    chart = build_chart(data, 0.8 * sp.lattice.omega1, 33, data.period_v, 257)
    fit = fit_sphere(chart.psi[16])
    assert fit.is_plane
    assert abs(abs(fit.plane_normal[2]) - 1) < 1e-12 and abs(fit.plane_offset) < 1e-12
