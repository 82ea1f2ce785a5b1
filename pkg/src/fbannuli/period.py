"""The period map and its level curves.

``Per(r1, r2)`` is the rotation number of the Gauss map over one
v-period. On ``r1 < r2 < 0`` it is the integral over ``(0, 1)`` of

    Q(s) = -sqrt(r1 r2) / (pi sqrt(s(1-s)) t sqrt(1 - r1 r2 t)),   t = r1 + (r2 - r1) s,

whose inverse square-root endpoint singularities are absorbed by the
tanh-sinh rule. On the diagonal it equals ``1/sqrt(1 - r^3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, NumericalFailure, StepFailure
from .params import Domain, classify_domain
from .quadrature import tanh_sinh


def per(r1, r2, tol=1e-15):
    """Period map at ``(r1, r2)`` with ``r1 <= r2 < 0``.

    Examples
    --------
    >>> round(per(-1.0, -1.0), 10)
    0.7071067812
    """
    r1, r2 = float(r1), float(r2)
    if not (r2 < 0.0 and r1 <= r2):
        raise DomainError(f"Per is defined for r1 <= r2 < 0, got ({r1}, {r2})")
    if r1 == r2:
        return 1.0 / math.sqrt(1.0 - r1 ** 3)
    p = r1 * r2
    c = -math.sqrt(p) / math.pi
    d = r2 - r1

    def integrand(x, s, sc):
        t = r1 + d * x
        return c / (np.sqrt(s * sc) * t * np.sqrt(1.0 - p * t))

    try:
        return tanh_sinh(integrand, 0.0, 1.0, tol=tol, complement=True)
    except NumericalFailure:
        # near r2 = 0 the 1/t factor is nearly singular; the algebraic weight
        # rule absorbs the endpoint factor exactly and adapts to the rest
        g = lambda x: c / ((r1 + d * x) * math.sqrt(1.0 - p * (r1 + d * x)))  # noqa: E731
        return quad(g, 0.0, 1.0, weight="alg", wvar=(-0.5, -0.5),
                    epsabs=0.0, epsrel=1e-13, limit=500)[0]


def per_bounds(r1, r2):
    """Lower and upper bounds ``1/sqrt(1 - r1^2 r2)``, ``1/sqrt(1 - r1 r2^2)``."""
    return 1.0 / math.sqrt(1.0 - r1 * r1 * r2), 1.0 / math.sqrt(1.0 - r1 * r2 * r2)


def per_contour(data):
    """``-(1/2 pi) int_0^{2 Im omega2} dy / phi(iy)`` by adaptive quadrature."""
    Y = data.lat.omega2_im
    f = lambda y: 1.0 / data.phi(1j * y).real  # noqa: E731
    val = quad(f, 0.0, Y, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    val += quad(f, Y, 2.0 * Y, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    return -val / (2.0 * math.pi)


def diagonal_derivative(r):
    """Limit of ``dPer/dr1`` at the diagonal point ``(r, r)``."""
    return 3.0 * r * r / (4.0 * (1.0 - r ** 3) ** 1.5)


def r_of_c(c):
    """Diagonal point ``r_c = (1 - 1/c^2)^(1/3)`` of the level ``Per = c``."""
    return float(np.cbrt(1.0 - 1.0 / (c * c)))


def _from_sd(sigma, d):
    return 0.5 * (sigma + d), 0.5 * (sigma - d)


def solve_on_line(c, d, guess=None, width=None, xtol=1e-15):
    """``sigma = r1 + r2`` with ``Per = c`` on the line ``r1 - r2 = d < 0``.

    Per is strictly increasing in ``sigma``; ``sigma < d`` keeps ``r2 < 0``.
    """
    hi_lim = d * (1.0 - 1e-12) if d < 0 else -1e-300
    f = lambda s: per(*_from_sd(s, d)) - c  # noqa: E731
    if guess is None:
        guess = 2.0 * r_of_c(c)
    width = 0.05 if width is None else width
    lo, hi = guess - width, min(guess + width, hi_lim)
    flo, fhi = f(lo), f(hi)
    grow = width
    for _ in range(60):
        if flo <= 0.0 <= fhi:
            break
        grow *= 2.0
        if flo > 0:
            hi, fhi = lo, flo
            lo = lo - grow
            flo = f(lo)
        else:
            lo, flo = hi, fhi
            hi = min(hi + grow, hi_lim)
            fhi = f(hi)
    else:
        raise StepFailure(f"could not bracket Per = {c} on r1 - r2 = {d}")
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    return brentq(f, lo, hi, xtol=xtol, rtol=1e-15, maxiter=200)


@dataclass
class LevelCurve:
    c: float
    start: tuple
    points: list = field(default_factory=list)  # (r1, r2)
    residuals: list = field(default_factory=list)
    omega_exit: tuple | None = None

    @property
    def d_values(self):
        return [p[0] - p[1] for p in self.points]

    def rows(self):
        return [(self.c, p[0], p[1], r) for p, r in zip(self.points, self.residuals)]


def trace_level(c, d_min, d_step=1e-2, max_step=0.1, min_step=1e-8):
    """Follow ``Per = c`` from the diagonal to ``r1 - r2 = d_min``.

    The step in ``d`` starts at ``d_step``, halves when the corrector
    fails, doubles after three consecutive successes and is capped at
    ``max_step``; the last step lands exactly on ``d_min``.
    """
    if not 0.0 < c < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if d_min >= 0:
        raise DomainError("d_min must be negative")
    rc = r_of_c(c)
    curve = LevelCurve(c, (rc, rc), [(rc, rc)], [0.0])
    d, sigma, step, streak = 0.0, 2.0 * rc, d_step, 0
    while d > d_min:
        nd = max(d - step, d_min)
        try:
            ns = solve_on_line(c, nd, guess=sigma, width=max(4.0 * step, 1e-6))
        except (StepFailure, ValueError):
            step *= 0.5
            streak = 0
            if step < min_step:
                raise StepFailure(f"level curve Per = {c} lost at d = {d}")
            continue
        r1, r2 = _from_sd(ns, nd)
        curve.points.append((r1, r2))
        curve.residuals.append(abs(per(r1, r2) - c))
        if curve.omega_exit is None and classify_domain(r1, r2).tag not in (
                Domain.OMEGA0, Domain.OMEGA_NOT_OMEGA0):
            curve.omega_exit = (r1, r2)
        d, sigma = nd, ns
        streak += 1
        if streak >= 3:
            step = min(2.0 * step, max_step)
            streak = 0
    return curve


def level_point(c, d, guess=None):
    """Single point of ``Per = c`` on ``r1 - r2 = d`` (the diagonal when ``d = 0``)."""
    if d == 0:
        rc = r_of_c(c)
        return rc, rc
    return _from_sd(solve_on_line(c, d, guess=guess), d)
