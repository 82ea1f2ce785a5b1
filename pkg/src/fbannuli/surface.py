"""Weierstrass data, the immersion and the sphere family of its v-curves.

The surface is ``psi = Re int_0^z Phi`` with

    Phi = (phi/2) * (1/g - g, i(1/g + g), 2),
    phi(z) = b - 4 p(z + omega1),   g/g' = phi,   g(0) = g_hat0.

With this normalisation ``|psi_u| = e^omega = (|phi|/2)(|g| + 1/|g|)`` and
``(psi_3)_u = phi`` on the real axis, which is what the centre and
height formulas below assume. The unit normal is the stereographic
preimage of ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import get_settings
from .elliptic import sigma, wp, wp_all, zeta
from .errors import DegenerateV0, MuNotFound, PoleProximity
from .params import SpectralParams
from .quadrature import gauss_legendre, panel_nodes

_CHUNK = 200_000


@dataclass(frozen=True)
class WeierstrassData:
    sp: SpectralParams
    g_hat0: float
    mu: complex
    g0: float
    zeta_mu: complex = field(repr=False, default=0j)
    shift: complex = field(repr=False, default=0j)

    @property
    def lat(self):
        return self.sp.lattice

    @property
    def period_v(self):
        """Length ``2 Im(omega2)`` of one fundamental v-period."""
        return 2.0 * self.lat.omega2_im

    # -- holomorphic data -------------------------------------------------
    def phi(self, z):
        return self.sp.b - 4.0 * wp(np.asarray(z) + self.lat.omega1, self.lat)

    def phi_and_prime(self, z):
        p, dp = wp_all(np.asarray(z) + self.lat.omega1, self.lat)
        return self.sp.b - 4.0 * p, -4.0 * dp

    def log_g(self, z):
        """``log g`` with the v-direction reduced onto one period."""
        lat = self.lat
        z = np.asarray(z, dtype=complex)
        k = np.round(z.imag / (2.0 * lat.omega2_im))
        z0 = z - 2.0j * k * lat.omega2_im
        w = z0 + lat.omega1
        ratio = sigma(self.mu + w, lat) / sigma(self.mu - w, lat)
        out = np.log(self.g0 * ratio + 0j) - 2.0 * self.zeta_mu * w
        return out + k * self.shift

    def g(self, z):
        out = np.exp(self.log_g(z))
        return complex(out) if np.ndim(z) == 0 else out

    def g_quadrature(self, z, panels=16, order=20):
        """``g`` straight from ``g_hat0 exp(int_0^z dv/phi)`` along an L-path."""
        z = complex(z)
        total = 0j
        for a, b in ((0.0, z.real), (z.real, z)):
            if a == b:
                continue
            x, w = panel_nodes(np.linspace(a, b, panels + 1), order)
            total += np.sum(w / self.phi(x))
        return self.g_hat0 * np.exp(total)

    def kappa(self):
        """Rotation number of g over one v-period, from the quasi-periods at mu."""
        lat = self.lat
        val = (2.0 / (math.pi * 1j)) * (lat.omega2 * self.zeta_mu - lat.eta2 * self.mu)
        return val.real % 1.0

    # -- first-order geometry ---------------------------------------------
    def frame(self, z):
        """``Phi(z)`` as an array of shape ``z.shape + (3,)``."""
        z = np.asarray(z, dtype=complex)
        f = self.phi(z)
        g = np.exp(self.log_g(z))
        ig = 1.0 / g
        return np.stack([0.5 * f * (ig - g), 0.5j * f * (ig + g), f], axis=-1)

    def normal(self, z):
        g = np.exp(self.log_g(np.asarray(z, dtype=complex)))
        a2 = np.abs(g) ** 2
        return np.stack([2.0 * g.real, 2.0 * g.imag, a2 - 1.0], axis=-1) / (a2 + 1.0)[..., None]

    def conf(self, z):
        """Conformal factor ``e^omega``."""
        z = np.asarray(z, dtype=complex)
        ag = np.abs(np.exp(self.log_g(z)))
        return 0.5 * np.abs(self.phi(z)) * (ag + 1.0 / ag)

    def omega_u(self, z):
        """``d omega / du`` from the analytic derivative of ``log e^omega``."""
        z = np.asarray(z, dtype=complex)
        f, df = self.phi_and_prime(z)
        lg = self.log_g(z).real
        return (df / f).real + np.tanh(lg) * (1.0 / f).real

    def integral_phi(self, u):
        """``int_0^u phi`` via the quasi-periodic zeta form."""
        lat = self.lat
        return self.sp.b * u + 4.0 * (zeta(np.asarray(u) + lat.omega1, lat) - lat.eta1)

    def integral_phi_alt(self, u):
        """Same integral through ``zeta(u)`` and the addition formula."""
        lat = self.lat
        p, dp = wp_all(u, lat)
        return self.sp.b * u + 4.0 * zeta(u, lat) + 2.0 * dp / (p - lat.e1)


def locate_mu(sp):
    """``mu = x + omega2`` with ``4 p(mu) = b``, ``x in (0, omega1)``."""
    lat = sp.lattice
    target = sp.b / 4.0

    def f(x):
        return wp(x + lat.omega2, lat).real - target

    try:
        x = brentq(f, 0.0, lat.omega1, xtol=1e-15, rtol=1e-15, maxiter=200)
    except ValueError as exc:
        raise MuNotFound(str(exc)) from exc
    return x + lat.omega2


def build_data(sp, g_hat0=1.0):
    """Weierstrass data for ``sp`` with Gauss map normalised to ``g(0) = g_hat0``."""
    if not g_hat0 > 0:
        raise ValueError("g_hat0 must be positive")
    lat = sp.lattice
    mu = locate_mu(sp)
    zmu = zeta(mu, lat)
    g0 = -g_hat0 * np.exp(2.0 * (lat.omega1 * zmu - mu * lat.eta1))
    if abs(g0.imag) > 1e-8 * abs(g0):
        raise MuNotFound(f"normalising constant not real: {g0}")
    shift = 4.0 * (lat.eta2 * mu - lat.omega2 * zmu)
    return WeierstrassData(sp, float(g_hat0), complex(mu), float(g0.real),
                           zeta_mu=complex(zmu), shift=complex(shift))


# -- immersion -------------------------------------------------------------
def _integrate_segment(data, a, b, tol=1e-13, order=16):
    """``int_a^b Phi`` on a straight segment, doubling panels to convergence."""
    if a == b:
        return np.zeros(3, dtype=complex)
    n = max(2, int(math.ceil(abs(b - a) / (0.25 * data.lat.omega2_im))))
    prev = None
    for _ in range(8):
        x, w = panel_nodes(np.linspace(a, b, n + 1), order)
        val = np.einsum("ij,ijk->k", w, data.frame(x))
        if prev is not None and np.max(np.abs(val - prev)) <= tol * max(1.0, np.max(np.abs(val))):
            return val
        prev = val
        n *= 2
    return val


def _guard_strip(data, z):
    lat = data.lat
    guard = get_settings().pole_guard * min(lat.omega1, lat.omega2_im)
    if np.any(np.abs(np.asarray(z).real) >= lat.omega1 - guard):
        raise PoleProximity("point too close to the flat ends at Re z = +-omega1")


def eval_immersion(data, z):
    """``psi``, unit normal and conformal factor at one point of the strip.

    The integral runs along the real axis and then vertically.
    """
    z = complex(z)
    _guard_strip(data, z)
    total = _integrate_segment(data, 0.0, z.real) + _integrate_segment(data, z.real, z)
    return {"psi": total.real, "normal": data.normal(z), "conf": float(data.conf(z))}


@dataclass
class SurfaceChart:
    u_grid: np.ndarray
    v_grid: np.ndarray
    psi: np.ndarray
    normal: np.ndarray
    conf: np.ndarray
    data: WeierstrassData
    closed: bool = False
    n_periods: int = 0

    @property
    def shape(self):
        return self.psi.shape[:2]

    def transformed(self, scale, translation):
        """Copy with ``psi -> scale * (psi + translation)``."""
        t = np.asarray(translation, dtype=float)
        return SurfaceChart(self.u_grid, self.v_grid, scale * (self.psi + t), self.normal,
                            scale * self.conf, self.data, self.closed, self.n_periods)


def _cumulative(data, edges, order, direction=1.0):
    """Cumulative ``int Phi`` over consecutive edges (arrays of complex points).

    ``edges`` has shape ``(rows, npts)``; returns ``(rows, npts, 3)`` complex
    values with zero in the first column.
    """
    rows, npts = edges.shape
    out = np.zeros((rows, npts, 3), dtype=complex)
    xg, wg = gauss_legendre(order)
    per_row = max(1, _CHUNK // max(1, (npts - 1) * order))
    for r0 in range(0, rows, per_row):
        block = edges[r0:r0 + per_row]
        lo, hi = block[:, :-1, None], block[:, 1:, None]
        half = 0.5 * (hi - lo)
        vals = data.frame(lo + half * (xg + 1.0))
        inc = np.einsum("rpj,rpjk->rpk", half * wg, vals)
        out[r0:r0 + per_row, 1:] = np.cumsum(inc, axis=1)
    return out


def build_chart(data, u_max, nu, v_max, nv, order=10, closed=False, n_periods=0):
    """Sample ``psi`` on ``[-u_max, u_max] x [0, v_max]``.

    ``nu`` should be odd so that the planar curve ``u = 0`` is a grid row.
    """
    _guard_strip(data, u_max)
    u = np.linspace(-u_max, u_max, nu)
    v = np.linspace(0.0, v_max, nv)
    mid = nu // 2
    # real axis, outward from zero
    base = np.zeros((nu, 3))
    if nu > 1:
        right = _cumulative(data, u[mid:][None, :].astype(complex), order)[0].real
        left = _cumulative(data, u[:mid + 1][::-1][None, :].astype(complex), order)[0].real
        base[mid:] = right
        base[:mid + 1] = left[::-1]
    edges = u[:, None] + 1j * v[None, :]
    vert = _cumulative(data, edges, order).real
    psi = base[:, None, :] + vert
    z = edges
    return SurfaceChart(u, v, psi, data.normal(z), data.conf(z), data, closed, n_periods)


# -- sphere family ---------------------------------------------------------
@dataclass(frozen=True)
class SphereRecord:
    u: float
    alpha: float
    beta: float
    R: float
    theta: float
    center: np.ndarray
    c3: float


def ab_from_omega(data, u, v0):
    """``(alpha, beta)`` from the two-line identity at ``v = 0`` and ``v = v0``."""
    z = np.array([u, u + 1j * v0])
    ew = data.conf(z)
    wu = data.omega_u(z)
    den_a = ew[0] ** 2 - ew[1] ** 2
    den_b = ew[0] ** -2 - ew[1] ** -2
    scale = max(ew[0] ** 2, ew[1] ** 2)
    if abs(den_a) <= 1e-13 * scale:
        raise DegenerateV0(f"conformal factor does not vary between v=0 and v={v0}")
    alpha = 2.0 * (wu[0] * ew[0] - wu[1] * ew[1]) / den_a
    beta = 2.0 * (wu[0] / ew[0] - wu[1] / ew[1]) / den_b
    return float(alpha), float(beta)


def sphere_from_ab(data, u, alpha, beta):
    """Radius, angle, centre and height of the sphere through ``psi(u, .)``."""
    u = float(u)
    f = data.phi(u).real
    g = data.g(u).real
    n3 = (g * g - 1.0) / (g * g + 1.0)
    c3 = data.integral_phi(u).real + (4.0 / alpha) * g / (1.0 + g * g) - (beta / alpha) * n3
    psi = eval_immersion(data, u)["psi"]
    psi_u = data.frame(np.asarray(u + 0j)).real
    n = data.normal(np.asarray(u + 0j))
    center = psi - (2.0 / alpha) * psi_u / np.linalg.norm(psi_u) - (beta / alpha) * n
    R = math.sqrt(4.0 + beta * beta) / abs(alpha)
    theta = math.atan2(2.0, beta)
    del f
    return SphereRecord(u, alpha, beta, R, theta, center, float(c3))


def extract_ab_c3(data, u, v0=None):
    """Sphere record at ``u`` with ``(alpha, beta)`` in closed form.

    The default ``v0`` is ``Im(omega2)/2`` with fallbacks ``/3`` and ``/5``.
    """
    lat = data.lat
    if not (0.0 < abs(u) < lat.omega1):
        raise PoleProximity("u must lie in (0, omega1)")
    candidates = [v0] if v0 is not None else [lat.omega2_im / d for d in (2.0, 3.0, 5.0)]
    err = None
    for cand in candidates:
        try:
            a, b = ab_from_omega(data, u, cand)
            return sphere_from_ab(data, u, a, b)
        except DegenerateV0 as exc:
            err = exc
    raise err


def c3_at_beta_zero(data, tau):
    """Height of the sphere centre at a zero of ``beta`` (only phi and g needed)."""
    f, df = data.phi_and_prime(complex(tau))
    f, df = f.real, df.real
    g2 = data.g(tau).real ** 2
    tail = (1.0 + g2) * f * f / ((1.0 + g2) * df + g2 - 1.0)
    return float(data.integral_phi_alt(tau).real - tail)
