import math

import numpy as np
import pytest

from fbannuli.errors import PoleProximity
from fbannuli.flow import FlowConstants, find_tau, integrate_ab, gamma0_state, state_at
from fbannuli.params import derive_spectral
from fbannuli.pipeline import c3_from_ab
from fbannuli.elliptic import wp_all
from fbannuli.surface import (build_chart, build_data, c3_at_beta_zero, eval_immersion,
                              extract_ab_c3, sphere_from_ab)
from fbannuli.verify import fit_sphere

R_HAT = (-8.222455900535973, -0.22245590053597297)


@pytest.fixture(scope="module")
def ref():
    sp = derive_spectral(-2.0, -0.5)
    return sp, build_data(sp)


@pytest.fixture(scope="module")
def ref_chart(ref):
    sp, data = ref
    return build_chart(data, 0.8 * sp.lattice.omega1, 33, data.period_v, 257)


def test_gauss_map_closed_form_vs_quadrature(ref):
    _, data = ref
    for z in (0.3, 0.2 + 0.4j, -0.5 + 1.1j, 0.7 - 0.3j):
        assert abs(data.g(z) - data.g_quadrature(z)) < 1e-9 * abs(data.g(z))
    assert abs(data.g(0.0) - 1.0) < 1e-14


def test_phi_satisfies_cubic(ref):
    sp, data = ref
    z = np.array([0.3 + 0.2j, -0.6 + 1.0j, 0.1 - 0.7j])
    f, df = data.phi_and_prime(z)
    q = -(f - sp.r1) * (f - sp.r2) * (f - sp.r3)
    assert np.max(np.abs(df ** 2 - q) / (1 + np.abs(q))) < 1e-10


def test_mu_conditions(ref):
    sp, data = ref
    p, dp = wp_all(data.mu, sp.lattice)
    assert abs(4 * p - sp.b) < 1e-12
    assert abs(abs(dp) - 0.25) < 1e-12


def test_gauss_map_on_imaginary_axis(ref):
    _, data = ref
    v = np.linspace(0, 2 * data.period_v, 17)
    assert np.max(np.abs(np.abs(data.g(1j * v)) - 1)) < 1e-12


def test_integral_of_phi_two_routes(ref):
    sp, data = ref
    for u in (0.2, 0.5, 0.9):
        assert abs(data.integral_phi(u) - data.integral_phi_alt(u)) < 1e-12
        x = np.linspace(0, u, 2001)
        y = data.phi(x + 0j).real
        trap = np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2
        assert abs(data.integral_phi(u).real - trap) < 1e-6


def test_chart_matches_pointwise_immersion(ref, ref_chart):
    _, data = ref
    ch = ref_chart
    for i, j in ((0, 0), (5, 100), (32, 256), (20, 31)):
        z = ch.u_grid[i] + 1j * ch.v_grid[j]
        assert np.max(np.abs(eval_immersion(data, z)["psi"] - ch.psi[i, j])) < 1e-11
    # the middle row is the planar curve x3 = 0
    mid = fit_sphere(ch.psi[16])
    assert mid.is_plane and abs(abs(mid.plane_normal[2]) - 1) < 1e-12


def test_kappa_closes_with_gauss_map_shift(ref):
    _, data = ref
    v = 0.3 + 0.2j
    ratio = data.g(v + 1j * data.period_v) / data.g(v)
    assert abs(abs(ratio) - 1) < 1e-12
    ang = (np.angle(ratio) / (2 * math.pi)) % 1.0
    k = data.kappa()
    assert min(abs(ang - k), abs(ang - (1 - k)), abs(abs(ang - k) - 1)) < 1e-10


def test_vlines_are_spherical_and_match_closed_form(ref, ref_chart):
    sp, data = ref
    ch = ref_chart
    c = FlowConstants.from_spectral(sp)
    centers = []
    for i in list(range(0, 14)) + list(range(19, 33)):
        fit = fit_sphere(ch.psi[i])
        assert fit.residual < 1e-6
        u = ch.u_grid[i]
        y = state_at(c, abs(u))
        rec = sphere_from_ab(data, abs(u), y[0], y[1])
        center = rec.center * [1, 1, np.sign(u)]
        assert np.linalg.norm(fit.center - center) < 1e-6 * rec.R
        assert abs(fit.radius - rec.R) < 1e-6 * rec.R
        centers.append(fit.center)
    centers = np.array(centers)
    # centres on a common vertical line
    assert np.max(np.abs(centers[:, :2] - centers[:, :2].mean(axis=0))) < 1e-7
    assert abs(centers[0, 0] + 0.5) < 1e-8


def test_center_height_derivative(ref):
    sp, data = ref
    c = FlowConstants.from_spectral(sp)
    us = np.linspace(0.2, 1.2, 6)
    h = 1e-4
    for u in us:
        vals = []
        for x in (u - h, u + h):
            y = state_at(c, x)
            vals.append(c3_from_ab(data, x, y[0], y[1]))
        dc3 = (vals[1] - vals[0]) / (2 * h)
        a = state_at(c, u)[0]
        # centre moves along the axis with speed 2/alpha^2, downward
        assert abs(dc3 * a ** 2 + 2) < 1e-5


def test_closed_form_record_agrees_with_flow(ref):
    sp, data = ref
    c = FlowConstants.from_spectral(sp)
    rec = extract_ab_c3(data, 0.6)
    y = state_at(c, 0.6)
    assert abs(rec.alpha - y[0]) < 1e-8 and abs(rec.beta - y[1]) < 1e-8
    assert abs(rec.c3 - c3_from_ab(data, 0.6, y[0], y[1])) < 1e-7
    assert math.isclose(rec.theta, math.atan2(2, rec.beta))


def test_height_at_beta_zero_two_routes():
    sp = derive_spectral(-1.3, -1.1)
    data = build_data(sp)
    tau = find_tau(sp)
    y = state_at(FlowConstants.from_spectral(sp), tau["tau"])
    assert abs(y[1]) < 1e-10
    assert abs(c3_at_beta_zero(data, tau["tau"]) - c3_from_ab(data, tau["tau"], y[0], y[1])) < 1e-9


def test_beta_and_height_at_four_fifths():
    data = build_data(derive_spectral(*R_HAT))
    rec = extract_ab_c3(data, 0.8)
    assert abs(rec.beta - 0.615) < 0.02
    assert abs(rec.c3 + 5.1) < 0.2


def test_chart_guards_flat_ends(ref):
    sp, data = ref
    with pytest.raises(PoleProximity):
        build_chart(data, sp.lattice.omega1, 33, 1.0, 129)


def test_transform_is_homothety(ref_chart):
    t = ref_chart.transformed(0.5, [1.0, 0.0, -2.0])
    np.testing.assert_allclose(t.psi, 0.5 * (ref_chart.psi + [1.0, 0.0, -2.0]))
    assert t.shape == ref_chart.shape


def test_flow_trajectory_keeps_alpha_positive_before_omega1(ref):
    sp, _ = ref
    c = FlowConstants.from_spectral(sp)
    tr = integrate_ab(c, gamma0_state(c), 0.99 * sp.lattice.omega1)
    assert np.all(tr.alpha[1:] > 0)
