"""Height map, free-boundary and capillary annuli, and ball normalisation.

Along a level curve ``Per = m/n`` the free-boundary condition is the
vanishing of ``beta`` at the zero ``u*`` of the centre height ``c3``:
there the two boundary spheres coincide and are met orthogonally. The
curve is sampled from the diagonal outward, a sign change of
``beta(u*)`` is bracketed, and the curve parameter ``d = r1 - r2`` is
bisected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .config import get_settings
from .errors import (ConservationBreach, DegenerateV0, DomainError, FBAnnuliError, NoBracket,
                     NoSignChange, NotOmega0, PoleProximity)
from .flow import ABState, FlowConstants, _integrate, find_tau, gamma0_state, state_at
from .params import derive_spectral
from .period import level_point, per, r_of_c, trace_level
from .surface import (build_chart, build_data, c3_at_beta_zero, extract_ab_c3,
                      sphere_from_ab)


class Kind(str, Enum):
    FREE_BOUNDARY = "FreeBoundary"
    CAPILLARY = "Capillary"
    STRIP = "Strip"


@dataclass(frozen=True)
class HeightSample:
    r1: float
    r2: float
    tau: float
    h_value: float
    beta_sign_checked: bool | None = None


@dataclass(frozen=True)
class NodalSample:
    """``u*`` with ``c3(u*) = 0`` and the curvatures there."""

    r1: float
    r2: float
    d: float
    u_star: float
    alpha: float
    beta: float


@dataclass
class AnnulusSolution:
    r1: float
    r2: float
    period: Fraction
    tau_or_ustar: float
    sphere_radius: float
    scale: float
    translation: np.ndarray
    kind: Kind
    chart: object
    boundary_angle: float
    report: dict = field(default_factory=dict)

    def summary(self):
        return {
            "kind": self.kind.value,
            "period": f"{self.period.numerator}/{self.period.denominator}",
            "r1": self.r1,
            "r2": self.r2,
            "d": self.r1 - self.r2,
            "tau_or_ustar": self.tau_or_ustar,
            "sphere_radius": self.sphere_radius,
            "scale": self.scale,
            "translation": [float(t) for t in self.translation],
            "boundary_angle": self.boundary_angle,
            "grid": list(self.chart.shape),
            **self.report,
        }


def _spectral(r1, r2):
    r1, r2 = float(r1), float(r2)
    if r1 == r2:
        raise DomainError("the diagonal has no lattice; use the degenerate profile")
    return derive_spectral(min(r1, r2), max(r1, r2))


def height(r1, r2):
    """``h(r1, r2) = -c3(tau)`` at the first zero ``tau`` of ``beta`` on Gamma0.

    ``tau`` comes from the flow; ``beta_sign_checked`` records whether the
    closed-form ``beta`` changes sign across it (``None`` when the
    closed form is too ill-conditioned to decide).

    Examples
    --------
    >>> s = height(-1.2005, -1.1995)
    >>> round(s.h_value, 3)
    -1.537
    """
    sp = _spectral(r1, r2)
    ft = find_tau(sp)
    tau = ft["tau"]
    data = build_data(sp)
    checked = None
    try:
        dt = 1e-3 * tau
        lo = extract_ab_c3(data, tau - dt).beta
        hi = extract_ab_c3(data, tau + dt).beta
        checked = bool(lo * hi < 0)
    except (DegenerateV0, PoleProximity):
        pass
    return HeightSample(sp.r1, sp.r2, tau, -c3_at_beta_zero(data, tau), checked)


def c3_from_ab(data, u, alpha, beta):
    """Height of the sphere centre of the v-line through ``u``."""
    g = data.g(float(u)).real
    n3 = (g * g - 1.0) / (g * g + 1.0)
    return float(data.integral_phi(float(u)).real + (4.0 / alpha) * g / (1.0 + g * g)
                 - (beta / alpha) * n3)


def nodal_sample(r1, r2, n_scan=400, xtol=1e-14):
    """Locate ``u*`` (first zero of ``c3``) with ``alpha, beta`` from the flow.

    ``c3`` blows up like ``2/alpha`` at ``u = 0`` and decreases; the scan
    stops at the first sign change, at a zero of ``alpha`` or where the
    flow itself breaks down.
    """
    sp = _spectral(r1, r2)
    data = build_data(sp)
    const = FlowConstants.from_spectral(sp)
    w1 = sp.lattice.omega1
    top = w1 * (1.0 - 1e-6)
    step = min(w1, 4.0) / n_scan
    ref = (const.h, 4.0 * const.k)
    prev = gamma0_state(const)
    prev_c3 = math.inf
    u = 0.0
    while u < top:
        u = min(u + step, top)
        try:
            _, ys, _, _ = _integrate(prev.as_array(), prev.u, u, const.delta, ref=ref)
        except ConservationBreach:
            break
        cur = ABState.from_array(u, ys[-1])
        if cur.alpha <= 0:
            break
        c3 = c3_from_ab(data, u, cur.alpha, cur.beta)
        if c3 <= 0 < prev_c3:
            start = prev

            def f(x):
                y = state_at(const, x, start)
                return c3_from_ab(data, x, y[0], y[1])

            lo = start.u if start.u > 0 else 0.5 * u
            while f(lo) <= 0:
                lo *= 0.5
            us = brentq(f, lo, u, xtol=xtol, rtol=1e-15, maxiter=200)
            y = state_at(const, us, start)
            return NodalSample(sp.r1, sp.r2, sp.r1 - sp.r2, float(us), float(y[0]), float(y[1]))
        prev, prev_c3 = cur, c3
    raise NoBracket(f"c3 has no zero on Gamma0 for ({sp.r1}, {sp.r2})")


def _normalise(data, u_b, alpha, beta, chart):
    rec = sphere_from_ab(data, u_b, alpha, beta)
    centre = np.array([rec.center[0], rec.center[1], 0.0])
    scale = 1.0 / rec.R
    return rec, scale, -centre, chart.transformed(scale, -centre)


def _period(m, n):
    m, n = int(m), int(n)
    if n <= 0 or m <= 0 or m >= n:
        raise DomainError(f"period must satisfy 0 < m/n < 1, got {m}/{n}")
    if math.gcd(m, n) != 1:
        raise DomainError(f"period {m}/{n} is not in lowest terms")
    return Fraction(m, n)


def _grid(n_periods, nu=None, nv_per_period=None):
    s = get_settings()
    nu = s.nu if nu is None else int(nu)
    nvp = s.nv_per_period if nv_per_period is None else int(nv_per_period)
    if nu % 2 == 0:
        nu += 1
    return nu, nvp * n_periods + 1


def _beta_star(c, d, guess=None):
    r1, r2 = level_point(c, d, guess)
    return nodal_sample(r1, r2), (r1, r2)


def _profile(c, d_min, max_step=0.25):
    curve = trace_level(c, d_min, max_step=max_step)
    out = []
    for r1, r2 in curve.points[1:]:
        try:
            out.append(nodal_sample(r1, r2))
        except FBAnnuliError:
            out.append(NodalSample(r1, r2, r1 - r2, math.nan, math.nan, math.nan))
    return out


def sign_profile(m, n, d_min=-8.0, max_step=0.25):
    """Samples of ``beta(u*)`` along ``Per = m/n`` from the diagonal to ``d_min``."""
    return _profile(float(_period(m, n)), d_min, max_step)


def nodal_point(c, d_min=-8.0, xtol=1e-13):
    """Point of the nodal curve ``h = 0`` on the level curve ``Per = c``.

    Returns ``(r1, r2, profile)``.

    Raises
    ------
    NoSignChange
        When ``beta(u*)`` keeps its sign over ``[d_min, 0)``; the sampled
        ``(d, sign)`` profile is attached to the exception.
    """
    profile = _profile(c, d_min)
    bracket = None
    for a, b in zip(profile, profile[1:]):
        if np.isfinite(a.beta) and np.isfinite(b.beta) and a.beta * b.beta < 0:
            bracket = (a, b)
            break
    if bracket is None:
        signs = [(s.d, None if not np.isfinite(s.beta) else int(np.sign(s.beta)))
                 for s in profile]
        raise NoSignChange(f"beta(u*) keeps its sign along Per = {c} on [{d_min}, 0)",
                           profile=signs)
    a, b = bracket
    guess = {"sigma": a.r1 + a.r2}

    def f(d):
        s, (r1, r2) = _beta_star(c, d, guess["sigma"])
        guess["sigma"] = r1 + r2
        return s.beta

    d_root = brentq(f, b.d, a.d, xtol=xtol, rtol=1e-15, maxiter=200)
    r1, r2 = level_point(c, d_root, a.r1 + a.r2)
    return r1, r2, profile


def solve_free_boundary(m, n, d_min=-8.0, nu=None, nv_per_period=None, xtol=1e-13):
    """Free-boundary annulus of period ``m/n`` in the unit ball.

    Raises
    ------
    NoSignChange
        When ``beta(u*)`` keeps its sign along the level curve.
    """
    frac = _period(m, n)
    c = float(frac)
    r1, r2, _ = nodal_point(c, d_min, xtol)
    sp = derive_spectral(r1, r2)
    data = build_data(sp)
    ns = nodal_sample(r1, r2)
    tau = ns.u_star
    report = {"beta_at_boundary": ns.beta, "per_residual": abs(per(r1, r2) - c)}
    try:
        ft = find_tau(sp)
        report["tau_flow"] = ft["tau"]
        report["height"] = -c3_at_beta_zero(data, ft["tau"])
    except (NotOmega0, NoBracket):
        report["height"] = None
    nu_, nv = _grid(n, nu, nv_per_period)
    raw = build_chart(data, tau, nu_, n * data.period_v, nv, closed=True, n_periods=n)
    rec, scale, trans, chart = _normalise(data, tau, ns.alpha, ns.beta, raw)
    report["c3_boundary"] = rec.c3
    return AnnulusSolution(r1, r2, frac, tau, rec.R, scale, trans, Kind.FREE_BOUNDARY,
                           chart, rec.theta, report)


def capillary_point(n, d):
    """Point of ``Per = 1/n`` on ``r1 - r2 = d``."""
    if int(n) < 2:
        raise DomainError("capillary family needs n >= 2")
    if d > 0:
        raise DomainError("d must be non-positive")
    return level_point(1.0 / int(n), float(d))


def build_capillary(n, d, nu=None, nv_per_period=None):
    """Member of the capillary family on ``Per = 1/n`` at ``d = r1 - r2 < 0``."""
    n = int(n)
    if d >= 0:
        raise DomainError("d = 0 is the rotational limit; use catenoid_limit")
    r1, r2 = capillary_point(n, d)
    sp = derive_spectral(r1, r2)
    data = build_data(sp)
    ns = nodal_sample(r1, r2)
    nu_, nv = _grid(n, nu, nv_per_period)
    raw = build_chart(data, ns.u_star, nu_, n * data.period_v, nv, closed=True, n_periods=n)
    rec, scale, trans, chart = _normalise(data, ns.u_star, ns.alpha, ns.beta, raw)
    report = {"c3_boundary": rec.c3, "beta_at_boundary": ns.beta,
              "per_residual": abs(per(r1, r2) - 1.0 / n)}
    return AnnulusSolution(r1, r2, Fraction(1, n), ns.u_star, rec.R, scale, trans,
                           Kind.CAPILLARY, chart, rec.theta, report)


def necksize(n):
    """Neck radius ``rbar_n^2`` of the rotational limit of the capillary family."""
    return float(r_of_c(1.0 / int(n)) ** 2)


def build_strip(r1, r2, n_periods, u_max=None, nu=None, nv_per_period=None):
    """Truncated multi-period chart without quotient (any period value)."""
    sp = _spectral(r1, r2)
    data = build_data(sp)
    if u_max is None:
        u_max = nodal_sample(sp.r1, sp.r2).u_star
    nu_, nv = _grid(int(n_periods), nu, nv_per_period)
    chart = build_chart(data, float(u_max), nu_, int(n_periods) * data.period_v, nv,
                        closed=False, n_periods=int(n_periods))
    return chart
