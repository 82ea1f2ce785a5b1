"""The (alpha, beta) Hamiltonian system, its (s, t) orbits and the degenerate case.

    alpha'' = delta*alpha - 2 alpha^2 beta
    beta''  = delta*beta  - 2 alpha beta^2 - 2 alpha

with first integrals

    h  = alpha' beta' + alpha^2 - delta alpha beta + alpha^2 beta^2
    4k = (alpha beta' - alpha' beta)^2 + 4 alpha'^2 + 4 alpha^3 beta - 4 delta alpha^2.

The integrator is an embedded Dormand-Prince 5(4) pair whose step
acceptance also requires the drift of ``h`` and ``4k`` from their initial
values to stay inside a budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .config import get_settings
from .errors import ConservationBreach, NoBracket, NotOmega0, OutOfRange
from .params import CBRT2, Domain, classify_domain

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class FlowConstants:
    """``(delta, h, k)`` of ``q(x) = -x^3 + delta x^2 + h x + k``."""

    delta: float
    h: float
    k: float = 1.0

    @classmethod
    def from_spectral(cls, sp):
        return cls(sp.delta, sp.h, sp.k)

    @classmethod
    def diagonal(cls, r):
        """Constants for the double root ``r1 = r2 = r``, ``r3 = 1/r^2``."""
        r3 = 1.0 / (r * r)
        return cls(2.0 * r + r3, -(r * r + 2.0 * r * r3), 1.0)

    def q(self, x):
        return -x ** 3 + self.delta * x * x + self.h * x + self.k


@dataclass(frozen=True)
class ABState:
    u: float
    alpha: float
    beta: float
    alpha_prime: float
    beta_prime: float

    def as_array(self):
        return np.array([self.alpha, self.beta, self.alpha_prime, self.beta_prime])

    @classmethod
    def from_array(cls, u, y):
        return cls(float(u), *map(float, y))


def gamma0_state(const):
    """The state ``alpha = beta = 0``, ``alpha' = 1``, ``beta' = h`` at ``u = 0``."""
    return ABState(0.0, 0.0, 0.0, 1.0, const.h)


def hamiltonian_h(y, delta):
    a, b, ap, bp = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    return ap * bp + a * a - delta * a * b + a * a * b * b


def hamiltonian_4k(y, delta):
    a, b, ap, bp = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    return (a * bp - ap * b) ** 2 + 4 * ap * ap + 4 * a ** 3 * b - 4 * delta * a * a


def _rhs(y, delta):
    a, b, ap, bp = y
    return np.array([ap, bp, delta * a - 2 * a * a * b, delta * b - 2 * a * b * b - 2 * a])


@dataclass
class Trajectory:
    u: np.ndarray
    y: np.ndarray  # (n, 4): alpha, beta, alpha', beta'
    const: FlowConstants
    h_drift: float
    k_drift: float

    def state(self, i):
        return ABState.from_array(self.u[i], self.y[i])

    @property
    def alpha(self):
        return self.y[:, 0]

    @property
    def beta(self):
        return self.y[:, 1]


def _integrate(y0, u0, u_end, delta, stops=(), tol=None, budget=None, ref=None):
    """Adaptive DP5(4) from ``u0`` to ``u_end`` landing exactly on ``stops``.

    ``ref`` optionally gives the ``(h, 4k)`` values drift is measured
    against; by default those of ``y0``.
    """
    s = get_settings()
    tol = s.ode_tol if tol is None else tol
    budget = s.drift_budget if budget is None else budget
    y = np.array(y0, dtype=float)
    if ref is None:
        ref = (hamiltonian_h(y, delta), hamiltonian_4k(y, delta))
    h0, k0 = ref
    hs, ks = max(1.0, abs(h0)), max(1.0, abs(k0))
    direction = 1.0 if u_end >= u0 else -1.0
    targets = sorted((t for t in stops if (t - u0) * direction > 0 and (u_end - t) * direction >= 0),
                     key=lambda t: (t - u0) * direction)
    if not targets or targets[-1] != u_end:
        targets.append(u_end)
    us, ys = [u0], [y.copy()]
    u = u0
    step = direction * min(1e-3, abs(u_end - u0)) if u_end != u0 else 0.0
    min_step = 1e-14 * max(1.0, abs(u_end))
    hd = kd = 0.0
    for target in targets:
        while (target - u) * direction > 0:
            if (u + step - target) * direction > 0:
                step = target - u
            k = np.empty((7, 4))
            k[0] = _rhs(y, delta)
            for i in range(1, 7):
                k[i] = _rhs(y + step * np.dot(_A[i], k[:i]), delta)
            y5 = y + step * np.dot(_B5, k)
            err_vec = step * np.dot(_E, k)
            scale = tol * (1.0 + np.abs(y5))
            err = np.max(np.abs(err_vec) / scale)
            dh = abs(hamiltonian_h(y5, delta) - h0) / hs
            dk = abs(hamiltonian_4k(y5, delta) - k0) / ks
            if err <= 1.0 and dh <= budget and dk <= budget:
                u = target if abs(target - (u + step)) <= 1e-15 * max(1.0, abs(target)) else u + step
                y = y5
                hd, kd = max(hd, dh), max(kd, dk)
                us.append(u)
                ys.append(y.copy())
                fac = 0.9 * (1.0 / max(err, 1e-10)) ** 0.2
                step *= min(4.0, max(0.2, fac))
            else:
                if err <= 1.0:
                    step *= 0.5
                else:
                    step *= max(0.1, 0.9 * (1.0 / err) ** 0.2)
                if abs(step) < min_step:
                    raise ConservationBreach(
                        f"step size underflow at u={u} (err={err:.2e}, dh={dh:.2e}, dk={dk:.2e})")
    return np.array(us), np.array(ys), hd, kd


def integrate_ab(const, init, u_end, u_eval=None):
    """Integrate from ``init`` to ``u_end``.

    Parameters
    ----------
    const : FlowConstants or SpectralParams
    init : ABState
    u_end : float
    u_eval : array_like, optional
        Points the integrator must land on exactly; the returned
        trajectory then contains only these points (plus the start).

    Returns
    -------
    Trajectory
    """
    if not isinstance(const, FlowConstants):
        const = FlowConstants.from_spectral(const)
    stops = () if u_eval is None else [float(t) for t in np.atleast_1d(u_eval)]
    us, ys, hd, kd = _integrate(init.as_array(), init.u, float(u_end), const.delta, stops)
    if u_eval is not None:
        keep = np.isin(us, np.asarray(stops)) | (np.arange(len(us)) == 0)
        us, ys = us[keep], ys[keep]
    return Trajectory(us, ys, const, hd, kd)


def state_at(const, u, start=None):
    """``(alpha, beta, alpha', beta')`` at ``u`` on the orbit through ``start``."""
    if not isinstance(const, FlowConstants):
        const = FlowConstants.from_spectral(const)
    start = gamma0_state(const) if start is None else start
    if u == start.u:
        return start.as_array()
    ref = (const.h, 4.0 * const.k)
    _, ys, _, _ = _integrate(start.as_array(), start.u, float(u), const.delta, ref=ref)
    return ys[-1]


def find_beta_zero(const, u_max, grid_size=512, xtol=1e-13):
    """First zero of ``beta`` on the Gamma0 orbit in ``(0, u_max)``.

    Returns ``(tau, alpha_tau)``; raises :class:`NoBracket` when ``beta``
    keeps its sign until ``alpha`` vanishes or ``u_max`` is reached.
    """
    if not isinstance(const, FlowConstants):
        const = FlowConstants.from_spectral(const)
    grid = np.geomspace(1e-4 * u_max, u_max, grid_size)
    prev = gamma0_state(const)
    for u in grid:
        _, ys, _, _ = _integrate(prev.as_array(), prev.u, float(u), const.delta,
                                 ref=(const.h, 4.0 * const.k))
        cur = ABState.from_array(u, ys[-1])
        if cur.alpha <= 0:
            break
        if cur.beta == 0.0:
            return float(u), cur.alpha
        if prev.u > 0 and cur.beta * prev.beta < 0:
            start = prev

            def beta_at(x):
                return state_at(const, x, start)[1]

            tau = brentq(beta_at, prev.u, u, xtol=xtol, rtol=1e-15, maxiter=200)
            return float(tau), float(state_at(const, tau, start)[0])
        prev = cur
    raise NoBracket("beta has no sign change before alpha returns to zero")


def find_tau(sp):
    """Smallest ``tau > 0`` with ``beta(tau) = 0`` on Gamma0, for ``sp`` in Omega0."""
    if classify_domain(sp.r1, sp.r2).tag != Domain.OMEGA0:
        raise NotOmega0(f"({sp.r1}, {sp.r2}) is not in Omega0")
    tau, alpha_tau = find_beta_zero(FlowConstants.from_spectral(sp), sp.lattice.omega1)
    return {"tau": tau, "alpha_tau": alpha_tau}


# -- (s, t) coordinates -----------------------------------------------------
def st_from_ab(alpha, beta):
    """``s > 0 > t`` with ``s + t = alpha beta`` and ``s t = -alpha^2``."""
    p = alpha * beta
    root = np.sqrt(p * p + 4.0 * alpha * alpha)
    return 0.5 * (p + root), 0.5 * (p - root)


def st_derivatives(y):
    """``(ds/du, dt/du)`` along a trajectory sample array ``y``."""
    a, b, ap, bp = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    s, t = st_from_ab(a, b)
    dp = ap * b + a * bp
    dq = 2.0 * a * ap
    ds = (dq + s * dp) / (s - t)
    return ds, dp - ds


@dataclass
class STOrbit:
    u: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    t: np.ndarray
    ds_du: np.ndarray
    dt_du: np.ndarray
    phase_tags: list
    vertex_hit: bool
    const: FlowConstants

    @property
    def samples(self):
        return list(zip(self.lam, self.s, self.t))

    def diagonal_crossings(self):
        """u-values where ``s + t`` changes sign (linear interpolation)."""
        f = self.s + self.t
        idx = np.nonzero(f[:-1] * f[1:] < 0)[0]
        return [float(self.u[i] - f[i] * (self.u[i + 1] - self.u[i]) / (f[i + 1] - f[i]))
                for i in idx]


def trace_orbit_gamma0(sp, n_samples=4000, seed_norm=1e-8):
    """The orbit Gamma0 in the (s, t) rectangle, tagged by phase space.

    The orbit leaves the equilibrium only asymptotically; sampling starts
    where ``|(s, t)|`` is about ``seed_norm`` (there ``s ~ -t ~ u``), and
    stops just before ``alpha`` returns to zero at ``u = omega1``.
    """
    const = FlowConstants.from_spectral(sp)
    L = sp.lattice.omega1
    u0 = seed_norm / math.sqrt(2.0)
    head = np.geomspace(u0, 1e-2 * L, n_samples // 4, endpoint=False)
    body = np.linspace(1e-2 * L, L * (1.0 - 1e-6), n_samples - len(head))
    grid = np.concatenate([head, body])
    traj = integrate_ab(const, gamma0_state(const), grid[-1], u_eval=grid)
    u, y = traj.u[1:], traj.y[1:]
    s, t = st_from_ab(y[:, 0], y[:, 1])
    ds, dt = st_derivatives(y)
    # lambda = ln u + int_0^u (2/(s - t) - 1/u); the integrand is O(u) near 0
    f = 2.0 / (s - t) - 1.0 / u
    corr = np.concatenate([[0.5 * f[0] * u[0]], 0.5 * (f[1:] + f[:-1]) * np.diff(u)])
    lam = np.log(u) + np.cumsum(corr)
    tags = ["R_plus" if a * b < 0 else "R_minus" for a, b in zip(ds, dt)]
    vertex = bool(np.min(np.hypot(s - sp.r3, t - sp.r2)) < 1e-6)
    return STOrbit(u, lam, s, t, ds, dt, tags, vertex, const)


# -- degenerate case r1 = r2 = r ------------------------------------------
def H_deg(x, r):
    """The closed-form first-integral function of the double-root cubic.

    ``-log|H|`` is a primitive of ``1/(x sqrt(q(x)))`` with
    ``q(x) = -(x - r)^2 (x - 1/r^2)``.
    """
    x = np.asarray(x, dtype=float)
    a = math.sqrt(1.0 - r ** 3)
    w = np.sqrt(np.maximum(0.0, 1.0 - x * r * r))
    return (1.0 + w) / (1.0 - w) * ((a - w) / (a + w)) ** (1.0 / a)


def F_deg(x, r):
    return H_deg(x, r) * H_deg(-x, r)


def G_deg(x, r):
    return H_deg(x, r) / H_deg(-x, r)


def theta_deg(x):
    """Value of ``F_deg`` at the wall ``1/x^2`` as a function of ``x``."""
    a = math.sqrt(1.0 - x ** 3)
    s2 = math.sqrt(2.0)
    return -(3.0 + 2.0 * s2) * ((a - s2) / (a + s2)) ** (1.0 / a)


def coth_root():
    """Negative root ``x0`` of ``x = coth x`` (equivalently ``t tanh t = 1``)."""
    t0 = brentq(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0, xtol=1e-15, rtol=1e-15)
    return -t0


_CACHE = {}


def solve_r_sharp():
    """Root of ``theta(x) = -1`` in ``(-2^(1/3), -1)``."""
    if "sharp" not in _CACHE:
        _CACHE["sharp"] = brentq(lambda x: theta_deg(x) + 1.0, -CBRT2 + 1e-12, -1.0,
                                 xtol=1e-15, rtol=1e-15)
    return _CACHE["sharp"]


_ASINH1 = math.asinh(1.0)


def _alta(T):
    return -2.0 * math.sinh(T) / math.cosh(T) ** 2


@dataclass(frozen=True)
class DegenerateProfile:
    r: float
    alpha_hat: float
    tau_r: float
    h_diag: float
    branch: str


def degenerate_alpha_hat(r):
    """Diagonal crossing ``alpha_hat(r)`` of Gamma0 and the branch used."""
    rs = solve_r_sharp()
    top = 1.0 / (r * r)
    if r >= rs:
        f = lambda x: F_deg(x, r) + 1.0  # noqa: E731
        if abs(f(top)) < 1e-14:
            return top, "F"
        return brentq(f, 1e-12 * top, top, xtol=1e-16, rtol=1e-15), "F"
    xg = math.sqrt(-(2.0 + r ** 3) / r)
    g = lambda x: G_deg(x, r) + 1.0  # noqa: E731
    if abs(g(top)) < 1e-14:
        return top, "G"
    return brentq(g, xg, top, xtol=1e-16, rtol=1e-15), "G"


def degenerate_profile(r):
    """Closed-form quantities on the diagonal segment ``(-2^(1/3), -1]``.

    ``tau_r`` inverts ``alpha_hat r^2 = -2 sinh(T)/cosh(T)^2`` with
    ``T = tau/r < 0``. The right-hand side peaks at ``T = -asinh(1)``; the
    crossing happens after the wall bounce (F branch) on the far side of
    the peak and before it (G branch) on the near side.
    """
    r = float(r)
    if not (-CBRT2 < r <= -1.0):
        raise OutOfRange(f"r = {r} outside (-2^(1/3), -1]")
    ahat, branch = degenerate_alpha_hat(r)
    target = min(1.0, ahat * r * r)
    f = lambda T: _alta(T) - target  # noqa: E731
    if target >= 1.0 - 1e-15:
        T = -_ASINH1
    elif branch == "F":
        T = brentq(f, -40.0, -_ASINH1, xtol=1e-15, rtol=1e-15)
    else:
        T = brentq(f, -_ASINH1, -1e-300, xtol=1e-15, rtol=1e-15)
    tau = T * r
    h_diag = -r * r * (T - 1.0 / math.tanh(T))
    return DegenerateProfile(r, ahat, tau, h_diag, branch)


def solve_r_star():
    """Root of ``h_diag(r)`` on ``[r_sharp, -1]``."""
    if "star" not in _CACHE:
        _CACHE["star"] = brentq(lambda r: degenerate_profile(r).h_diag, solve_r_sharp(), -1.0,
                                xtol=1e-15, rtol=1e-15)
    return _CACHE["star"]
