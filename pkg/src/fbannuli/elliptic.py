"""Weierstrass elliptic functions on real rectangular lattices.

The lattice is ``2*omega1*Z + 2*omega2*Z`` with ``omega1 > 0`` real and
``omega2 = i*omega2_im``. Half-periods come from Carlson's symmetric
integral ``R_F`` applied to the branch values; function values come from
Jacobi theta series after reducing the argument into the fundamental
cell. The series is built on whichever half-period gives the smaller
nome, so ``q <= exp(-pi)`` always and a handful of terms suffice.

All evaluators accept scalars or numpy arrays of complex arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import get_settings
from .errors import NonRectangular, PoleProximity, RootFailure


def carlson_rf(x, y, z, rtol=1e-16):
    """Carlson's symmetric elliptic integral of the first kind.

    ``R_F(x, y, z) = 1/2 * int_0^inf dt / sqrt((t+x)(t+y)(t+z))`` for
    non-negative ``x, y, z`` with at most one zero, by the duplication
    algorithm.
    """
    x, y, z = float(x), float(y), float(z)
    if min(x, y, z) < 0 or (x + y == 0 or y + z == 0 or x + z == 0):
        raise ValueError("carlson_rf needs non-negative arguments, at most one zero")
    x0, y0 = x, y
    a0 = (x + y + z) / 3.0
    q = (3.0 * rtol) ** (-1.0 / 6.0) * max(abs(a0 - x), abs(a0 - y), abs(a0 - z))
    a = a0
    scale = 1.0
    while scale * q > abs(a):
        sx, sy, sz = math.sqrt(x), math.sqrt(y), math.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = (x + lam) / 4.0, (y + lam) / 4.0, (z + lam) / 4.0
        a = (a + lam) / 4.0
        scale /= 4.0
    dx = (a0 - x0) * scale / a
    dy = (a0 - y0) * scale / a
    dz = -(dx + dy)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    series = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0
    return series / math.sqrt(a)


@dataclass(frozen=True)
class LatticeInvariants:
    g2: float
    g3: float

    @property
    def delta_mod(self):
        return self.g2 ** 3 - 27.0 * self.g3 ** 2


def cubic_roots(g2, g3):
    """Real roots ``e1 > e2 > e3`` of ``4x^3 - g2 x - g3``."""
    if g2 <= 0 or g2 ** 3 - 27.0 * g3 ** 2 <= 0:
        raise NonRectangular(f"modular discriminant not positive (g2={g2}, g3={g3})")
    radius = 2.0 * math.sqrt(g2 / 12.0)
    arg = (g3 / 4.0) / (2.0 * (g2 / 12.0) ** 1.5)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg)
    roots = sorted((radius * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)),
                   reverse=True)
    polished = []
    for e in roots:
        for _ in range(3):
            f = 4.0 * e ** 3 - g2 * e - g3
            df = 12.0 * e ** 2 - g2
            if df == 0:
                break
            e -= f / df
        polished.append(e)
    e1, e2, e3 = polished
    if not (e1 > e2 > e3):
        raise RootFailure(f"could not isolate the branch values for g2={g2}, g3={g3}")
    return e1, e2, e3


def _theta_terms(q, tol=1e-18):
    """Coefficients of the theta_1 series for nome ``q``."""
    n = 1
    while q ** ((n + 0.5) ** 2 - (n + 0.5)) > tol:
        n += 1
    idx = np.arange(n + 1)
    m = 2 * idx + 1
    a = (-1.0) ** idx * q ** ((idx + 0.5) ** 2)
    return a, m.astype(float)


@dataclass(frozen=True)
class RectLattice:
    inv: LatticeInvariants
    omega1: float
    omega2_im: float
    e1: float
    e2: float
    e3: float
    eta1: float
    eta2_im: float
    # theta-series data: base half-period, nome coefficients, eta for the base
    _base: complex = field(repr=False, default=0j)
    _coef: tuple = field(repr=False, default=())
    _eta_base: complex = field(repr=False, default=0j)
    _dtheta0: float = field(repr=False, default=0.0)

    @property
    def omega2(self):
        return 1j * self.omega2_im

    @property
    def eta2(self):
        return 1j * self.eta2_im

    @property
    def nome(self):
        return math.exp(-math.pi * max(self.omega2_im / self.omega1, self.omega1 / self.omega2_im))

    def legendre_residual(self):
        """``|omega2*zeta(omega1+omega2) - (omega1+omega2)*eta2 - i*pi/2|``."""
        w1, w2 = self.omega1, self.omega2
        z = zeta(w1 + w2, self)
        return abs(w2 * z - (w1 + w2) * self.eta2 - 0.5j * math.pi)


def _theta_parts(v, lat):
    a, m = lat._coef
    mv = np.multiply.outer(v, m)
    s, c = np.sin(mv), np.cos(mv)
    th = 2.0 * (s @ a)
    th1 = 2.0 * (c @ (a * m))
    th2 = -2.0 * (s @ (a * m * m))
    th3 = -2.0 * (c @ (a * m ** 3))
    return th, th1, th2, th3


def _make_lattice(inv, e1, e2, e3):
    omega1 = carlson_rf(0.0, e1 - e2, e1 - e3)
    omega2_im = carlson_rf(0.0, e1 - e3, e2 - e3)
    if omega2_im >= omega1:
        base = complex(omega1)
        q = math.exp(-math.pi * omega2_im / omega1)
    else:
        base = 1j * omega2_im
        q = math.exp(-math.pi * omega1 / omega2_im)
    a, m = _theta_terms(q)
    dtheta0 = 2.0 * float(np.sum(a * m))
    d3theta0 = -2.0 * float(np.sum(a * m ** 3))
    eta_base = -(math.pi ** 2 / (12.0 * base)) * d3theta0 / dtheta0
    lat = RectLattice(inv, omega1, omega2_im, e1, e2, e3, 0.0, 0.0,
                      _base=base, _coef=(a, m), _eta_base=eta_base, _dtheta0=dtheta0)
    # both quasi-periods from the series, so the Legendre relation stays a check
    eta1 = _zeta_cell(np.asarray(complex(omega1)), lat).real
    eta2 = _zeta_cell(np.asarray(1j * omega2_im), lat)
    return RectLattice(inv, omega1, omega2_im, e1, e2, e3, float(eta1), float(eta2.imag),
                       _base=base, _coef=(a, m), _eta_base=eta_base, _dtheta0=dtheta0)


def compute_lattice(inv):
    """Half-periods, branch values and quasi-periods for real invariants.

    Raises
    ------
    NonRectangular
        If ``inv.delta_mod <= 0``.
    """
    if inv.delta_mod <= 0:
        raise NonRectangular(f"delta_mod = {inv.delta_mod} <= 0")
    e1, e2, e3 = cubic_roots(inv.g2, inv.g3)
    return _make_lattice(inv, e1, e2, e3)


def lattice_from_roots(e1, e2, e3):
    """Like :func:`compute_lattice` but from known branch values (sum zero)."""
    if not (e1 > e2 > e3):
        raise NonRectangular("branch values must satisfy e1 > e2 > e3")
    g2 = -4.0 * (e1 * e2 + e2 * e3 + e3 * e1)
    g3 = 4.0 * e1 * e2 * e3
    return _make_lattice(LatticeInvariants(g2, g3), e1, e2, e3)


def _reduce(z, lat):
    z = np.asarray(z, dtype=complex)
    j = np.round(z.real / (2.0 * lat.omega1))
    k = np.round(z.imag / (2.0 * lat.omega2_im))
    z0 = z - 2.0 * j * lat.omega1 - 2.0j * k * lat.omega2_im
    return z0, j, k


def _check_poles(z0, lat):
    guard = get_settings().pole_guard * min(lat.omega1, lat.omega2_im)
    if np.any(np.abs(z0) < guard):
        raise PoleProximity("argument within the pole guard radius of the lattice")


def _zeta_cell(z0, lat):
    base = lat._base
    v = (math.pi / (2.0 * base)) * z0
    th, th1, _, _ = _theta_parts(v, lat)
    return lat._eta_base * z0 / base + (math.pi / (2.0 * base)) * th1 / th


def wp(z, lat):
    """Weierstrass ``p`` function."""
    return wp_all(z, lat)[0]


def wp_all(z, lat):
    """``(p(z), p'(z))`` evaluated together."""
    scalar = np.ndim(z) == 0
    z0, _, _ = _reduce(z, lat)
    _check_poles(z0, lat)
    base = lat._base
    c = math.pi / (2.0 * base)
    th, th1, th2, th3 = _theta_parts(c * z0, lat)
    r1 = th1 / th
    r2 = th2 / th
    r3 = th3 / th
    p = -lat._eta_base / base - c * c * (r2 - r1 * r1)
    dp = -c ** 3 * (r3 - 3.0 * r2 * r1 + 2.0 * r1 ** 3)
    if scalar:
        return complex(p), complex(dp)
    return p, dp


def zeta(z, lat):
    """Weierstrass zeta function (quasi-periodic, ``zeta' = -p``)."""
    scalar = np.ndim(z) == 0
    z0, j, k = _reduce(z, lat)
    _check_poles(z0, lat)
    out = _zeta_cell(z0, lat) + 2.0 * j * lat.eta1 + 2.0j * k * lat.eta2_im
    return complex(out) if scalar else out


def log_sigma(z, lat):
    """Principal-branch-free logarithm of sigma (imaginary part not reduced)."""
    z0, j, k = _reduce(z, lat)
    base = lat._base
    c = math.pi / (2.0 * base)
    th, _, _, _ = _theta_parts(c * z0, lat)
    out = (np.log((2.0 * base / math.pi) * th / lat._dtheta0 + 0j)
           + lat._eta_base * z0 * z0 / (2.0 * base))
    eta = 2.0 * j * lat.eta1 + 2.0j * k * lat.eta2_im
    w = j * lat.omega1 + 1j * k * lat.omega2_im
    sign = (j + k + j * k) % 2
    out = out + eta * (w + z0) + 1j * math.pi * sign
    return out


def sigma(z, lat):
    """Weierstrass sigma function (entire, ``sigma'/sigma = zeta``)."""
    scalar = np.ndim(z) == 0
    z0, j, k = _reduce(z, lat)
    base = lat._base
    c = math.pi / (2.0 * base)
    th, _, _, _ = _theta_parts(c * z0, lat)
    s0 = (2.0 * base / math.pi) * np.exp(lat._eta_base * z0 * z0 / (2.0 * base)) * th / lat._dtheta0
    eta = 2.0 * j * lat.eta1 + 2.0j * k * lat.eta2_im
    w = j * lat.omega1 + 1j * k * lat.omega2_im
    sign = np.where((j + k + j * k) % 2 == 0, 1.0, -1.0)
    out = sign * np.exp(eta * (w + z0)) * s0
    return complex(out) if scalar else out


def eval_weierstrass(z, lat):
    """All four functions at ``z``: dict with keys p, p_prime, zeta, sigma."""
    p, dp = wp_all(z, lat)
    return {"p": p, "p_prime": dp, "zeta": zeta(z, lat), "sigma": sigma(z, lat)}
