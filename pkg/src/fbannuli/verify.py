"""Numerical certification of sampled surfaces.

Everything here works on raw point grids: derivatives are finite
differences, spheres and planes are least-squares fits and the
self-intersection probe tests the triangle soup. Weierstrass-side
quantities enter only as comparison targets supplied by the caller.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import Degenerate, GridTooCoarse

MIN_NU, MIN_NV = 33, 129

DEFAULT_TOLERANCES = {
    "mean_curvature": 1e-3,
    "sphere_fit": 1e-6,
    "boundary_sphere": 1e-7,
    "boundary_angle": 1e-5,
    "closure": 1e-8,
    "symmetry": 1e-7,
}


# -- fitting ---------------------------------------------------------------
@dataclass
class SphereFit:
    center: np.ndarray
    radius: float
    residual: float
    plane_normal: np.ndarray | None = None
    plane_offset: float | None = None
    circle_center: np.ndarray | None = None
    circle_radius: float | None = None

    @property
    def is_plane(self):
        return math.isinf(self.radius)


def _plane(points):
    c = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - c, full_matrices=False)
    return c, s, vt


def fit_circle_in_plane(points, origin, e1, e2):
    x = (points - origin) @ e1
    y = (points - origin) @ e2
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    cx, cy, k = sol
    r = math.sqrt(max(k + cx * cx + cy * cy, 0.0))
    return origin + cx * e1 + cy * e2, r


def fit_sphere(points, center=None, flat_tol=1e-10):
    """Algebraic least-squares sphere through ``points``.

    Parameters
    ----------
    points : (N, 3) array
    center : 3-vector, optional
        Known centre; only the radius is fitted.
    flat_tol : float
        Relative singular-value threshold below which the points are
        treated as coplanar. Coplanar sets return ``radius = inf`` with
        the plane and the least-squares circle in it; every sphere
        through that circle is an equally good fit.

    Raises
    ------
    Degenerate
        If the points are collinear (or fewer than four without a centre).
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    if center is not None:
        c = np.asarray(center, dtype=float)
        dist = np.linalg.norm(p - c, axis=1)
        r = float(dist.mean())
        return SphereFit(c, r, float(np.max(np.abs(dist - r)) / r))
    if len(p) < 4:
        raise Degenerate("need at least four points")
    mean, s, vt = _plane(p)
    if s[1] <= flat_tol * s[0]:
        raise Degenerate("points are collinear")
    if s[2] <= flat_tol * s[0]:
        nrm = vt[2]
        off = float(mean @ nrm)
        cc, cr = fit_circle_in_plane(p, mean, vt[0], vt[1])
        res = float(np.max(np.abs(p @ nrm - off)) / s[0] * math.sqrt(len(p)))
        return SphereFit(np.full(3, np.nan), math.inf, res, nrm, off, cc, cr)
    # shift to the centroid for conditioning
    q = p - mean
    A = np.column_stack([2 * q, np.ones(len(q))])
    sol, *_ = np.linalg.lstsq(A, np.sum(q * q, axis=1), rcond=None)
    c = sol[:3]
    r = math.sqrt(sol[3] + c @ c)
    dist = np.linalg.norm(q - c, axis=1)
    return SphereFit(c + mean, r, float(np.max(np.abs(dist - r)) / r))


# -- differential geometry by finite differences ----------------------------
def _derivatives(psi, du, dv, periodic_v=False):
    if periodic_v:
        ring = psi[:, :-1]
        pv = (np.roll(ring, -1, axis=1) - np.roll(ring, 1, axis=1)) / (2 * dv)
        pvv = (np.roll(ring, -1, axis=1) - 2 * ring + np.roll(ring, 1, axis=1)) / dv ** 2
        pu = np.gradient(ring, du, axis=0, edge_order=2)
        puu = np.gradient(pu, du, axis=0, edge_order=2)
        puv = (np.roll(pu, -1, axis=1) - np.roll(pu, 1, axis=1)) / (2 * dv)
        return pu, pv, puu, puv, pvv
    pu = np.gradient(psi, du, axis=0, edge_order=2)
    pv = np.gradient(psi, dv, axis=1, edge_order=2)
    puu = np.gradient(pu, du, axis=0, edge_order=2)
    puv = np.gradient(pu, dv, axis=1, edge_order=2)
    pvv = np.gradient(pv, dv, axis=1, edge_order=2)
    return pu, pv, puu, puv, pvv


def _spacing(chart):
    return float(chart.u_grid[1] - chart.u_grid[0]), float(chart.v_grid[1] - chart.v_grid[0])


def mean_curvature(chart):
    """Mean curvature on the grid from the two fundamental forms (interior rows)."""
    du, dv = _spacing(chart)
    pu, pv, puu, puv, pvv = _derivatives(chart.psi, du, dv, chart.closed)
    n = np.cross(pu, pv)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    E, F, G = (np.sum(a * b, axis=-1) for a, b in ((pu, pu), (pu, pv), (pv, pv)))
    L, M, N = (np.sum(a * n, axis=-1) for a in (puu, puv, pvv))
    H = (E * N - 2 * F * M + G * L) / (2 * (E * G - F * F))
    return H[2:-2] if chart.closed else H[2:-2, 2:-2]


def fd_normal_row(chart, i):
    """Unit normal along grid row ``i`` from centred differences."""
    du, dv = _spacing(chart)
    psi = chart.psi
    pu = (psi[i + 1] - psi[i - 1]) / (2 * du)
    if chart.closed:
        ring = psi[i, :-1]
        pv = (np.roll(ring, -1, axis=0) - np.roll(ring, 1, axis=0)) / (2 * dv)
        pv = np.vstack([pv, pv[:1]])
    else:
        pv = np.gradient(psi[i], dv, axis=0, edge_order=2)
    n = np.cross(pu, pv)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


# -- curves ----------------------------------------------------------------
def winding_number(vectors):
    """Turns of the planar projection of a closed sequence of vectors about the origin."""
    a = np.unwrap(np.arctan2(vectors[:, 1], vectors[:, 0]))
    return (a[-1] - a[0]) / (2 * math.pi)


def planar_curvature(points):
    """Signed curvature of a closed planar curve (first point repeated at the end)."""
    ring = points[:-1, :2]
    d1 = (np.roll(ring, -1, axis=0) - np.roll(ring, 1, axis=0)) / 2
    d2 = np.roll(ring, -1, axis=0) - 2 * ring + np.roll(ring, 1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return cross / np.linalg.norm(d1, axis=1) ** 3


def boundary_angles(chart, row, center=(0.0, 0.0, 0.0), radius=1.0):
    """Angle between the chart normal and the radial direction along a boundary row."""
    c = np.asarray(center, dtype=float)
    radial = (chart.psi[row] - c) / radius
    cosv = np.sum(chart.normal[row] * radial, axis=-1)
    return np.arccos(np.clip(cosv, -1.0, 1.0))


# -- symmetry --------------------------------------------------------------
def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def symmetry_residuals(chart, m, n, orientation=1):
    """Residuals of the prismatic candidates for a chart over ``n`` v-periods.

    ``x3 -> -x3`` pairs rows ``i`` and ``nu-1-i``; ``x2 -> -x2`` pairs
    columns ``j`` and ``nv-1-j``; the rotation by ``2 pi k/n`` about the
    x3-axis is matched with the shift by ``s`` periods where
    ``orientation * m * s = k (mod n)``.
    """
    psi = chart.psi
    nu, nv = psi.shape[:2]
    out = {
        "reflect_x3": float(np.max(np.abs(psi * [1, 1, -1] - psi[::-1]))),
        "reflect_x2": float(np.max(np.abs(psi * [1, -1, 1] - psi[:, ::-1]))),
    }
    if n > 1:
        if (nv - 1) % n:
            raise GridTooCoarse("v-grid is not a whole number of periods")
        step = (nv - 1) // n
        inv = pow(orientation * m % n, -1, n)
        for k in range(1, n):
            s = (k * inv) % n
            rot = _rot_z(2 * math.pi * k / n)
            res = np.max(np.abs(psi[:, s * step:] - psi[:, :nv - s * step] @ rot.T))
            out[f"rotate_{k}/{n}"] = float(res)
    return out


# -- self-intersection -----------------------------------------------------
def grid_triangles(nu, nv, closed=False):
    """Row-major triangulation of an ``nu x nv`` grid; closed grids weld the seam."""
    cols = nv - 1 if closed else nv
    idx = np.arange(nu * cols).reshape(nu, cols)
    if closed:
        idx = np.hstack([idx, idx[:, :1]])
    a, b = idx[:-1, :-1], idx[:-1, 1:]
    c, d = idx[1:, :-1], idx[1:, 1:]
    t1 = np.stack([a, c, b], axis=-1).reshape(-1, 3)
    t2 = np.stack([b, c, d], axis=-1).reshape(-1, 3)
    tri = np.empty((2 * len(t1), 3), dtype=np.int64)
    tri[0::2], tri[1::2] = t1, t2
    return tri


def _segment_hits(p0, p1, tri, eps=1e-12):
    """Segment ``p0 p1`` crosses triangle ``tri`` (Moller-Trumbore, vectorised)."""
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    d = p1 - p0
    pv = np.cross(d, e2)
    det = np.sum(e1 * pv, axis=1)
    ok = np.abs(det) > eps * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1) * np.linalg.norm(d, axis=1)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = p0 - v0
    u = np.sum(tv * pv, axis=1) * inv
    qv = np.cross(tv, e1)
    v = np.sum(d * qv, axis=1) * inv
    t = np.sum(e2 * qv, axis=1) * inv
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)


def self_intersections(vertices, triangles, max_report=20):
    """Probe a triangle soup for crossings between non-adjacent triangles.

    Candidate pairs come from a uniform spatial hash with cell size equal
    to the largest triangle extent; pairs sharing a vertex are skipped.
    Two triangles are reported when an edge of one crosses the other.
    Coplanar overlaps are not detected.

    Returns
    -------
    dict
        ``hits`` (number of crossing pairs) and up to ``max_report`` sample
        locations (triangle centroids).
    """
    V = np.asarray(vertices, dtype=float)
    T = np.asarray(triangles, dtype=np.int64)
    P = V[T]
    lo, hi = P.min(axis=1), P.max(axis=1)
    h = float(np.max(hi - lo)) * 1.0001
    base = lo.min(axis=0)
    clo = np.floor((lo - base) / h).astype(np.int64)
    chi = np.floor((hi - base) / h).astype(np.int64)
    dims = chi.max(axis=0) + 2
    keys, owners = [], []
    for ox in (0, 1):
        for oy in (0, 1):
            for oz in (0, 1):
                c = clo + [ox, oy, oz]
                keep = np.all(c <= chi, axis=1)
                k = (c[:, 0] * dims[1] + c[:, 1]) * dims[2] + c[:, 2]
                keys.append(k[keep])
                owners.append(np.nonzero(keep)[0])
    keys, owners = np.concatenate(keys), np.concatenate(owners)
    order = np.argsort(keys, kind="stable")
    keys, owners = keys[order], owners[order]
    _, counts = np.unique(keys, return_counts=True)
    pairs = []
    for k in range(1, int(counts.max()) if len(counts) else 1):
        same = keys[:-k] == keys[k:]
        if not same.any():
            continue
        a, b = owners[:-k][same], owners[k:][same]
        pairs.append(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1))
    if not pairs:
        return {"hits": 0, "locations": [], "candidates": 0}
    pairs = np.unique(np.concatenate(pairs), axis=0)
    a, b = pairs[:, 0], pairs[:, 1]
    share = np.any(T[a][:, :, None] == T[b][:, None, :], axis=(1, 2))
    overlap = np.all((lo[a] <= hi[b]) & (lo[b] <= hi[a]), axis=1)
    a, b = a[~share & overlap], b[~share & overlap]
    hit = np.zeros(len(a), dtype=bool)
    for s, t in ((a, b), (b, a)):
        for i, j in ((0, 1), (1, 2), (2, 0)):
            hit |= _segment_hits(P[s][:, i], P[s][:, j], P[t])
    centroids = P[a[hit]].mean(axis=1)
    return {"hits": int(hit.sum()), "locations": centroids[:max_report].tolist(),
            "candidates": int(len(a))}


def probe_chart(chart, stride=(1, 1)):
    """Self-intersection probe of a chart, optionally on a subsampled grid."""
    su, sv = stride
    psi = chart.psi[::su, ::sv]
    if chart.closed and (chart.psi.shape[1] - 1) % sv:
        raise GridTooCoarse("v-stride must divide the number of v-intervals")
    nu, nv = psi.shape[:2]
    verts = psi[:, :-1].reshape(-1, 3) if chart.closed else psi.reshape(-1, 3)
    return self_intersections(verts, grid_triangles(nu, nv, chart.closed))


# -- analytic oracles -------------------------------------------------------
class OracleChart:
    """Minimal chart-like container for analytic surfaces."""

    def __init__(self, u_grid, v_grid, psi, normal, closed=True, n_periods=1):
        self.u_grid, self.v_grid = u_grid, v_grid
        self.psi, self.normal = psi, normal
        self.closed, self.n_periods = closed, n_periods
        self.conf = np.ones(psi.shape[:2])

    @property
    def shape(self):
        return self.psi.shape[:2]


def critical_catenoid_t0():
    """Root of ``t tanh t = 1`` by bracketed bisection."""
    return brentq(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0, xtol=1e-15, rtol=1e-15)


def critical_catenoid(nu=65, nv=257):
    """Free-boundary catenoid in the unit ball, vertical axis, neck at ``x3 = 0``."""
    t0 = critical_catenoid_t0()
    a = 1.0 / math.sqrt(math.cosh(t0) ** 2 + t0 * t0)
    t = np.linspace(-t0, t0, nu)
    th = np.linspace(0.0, 2 * math.pi, nv)
    T, TH = np.meshgrid(t, th, indexing="ij")
    psi = a * np.stack([np.cosh(T) * np.cos(TH), np.cosh(T) * np.sin(TH), T], axis=-1)
    nrm = np.stack([np.cos(TH), np.sin(TH), -np.sinh(T)], axis=-1) / np.cosh(T)[..., None]
    psi[:, -1], nrm[:, -1] = psi[:, 0], nrm[:, 0]
    return OracleChart(t, th, psi, nrm)


def flat_disk(nu=33, nv=129, inner=0.25):
    """Equatorial annulus ``inner <= |x| <= 1`` of the plane ``x3 = 0``."""
    rho = np.linspace(inner, 1.0, nu)
    th = np.linspace(0.0, 2 * math.pi, nv)
    R, TH = np.meshgrid(rho, th, indexing="ij")
    psi = np.stack([R * np.cos(TH), R * np.sin(TH), np.zeros_like(R)], axis=-1)
    psi[:, -1] = psi[:, 0]
    nrm = np.zeros_like(psi)
    nrm[..., 2] = 1.0
    return OracleChart(rho, th, psi, nrm)


def catenoid_deviation(psi, neck, axis=(0.0, 0.0), height=0.0):
    """``max |rho - a cosh((x3 - h)/a)| / a`` for the catenoid of neck radius ``a``."""
    p = np.asarray(psi, dtype=float).reshape(-1, 3)
    rho = np.hypot(p[:, 0] - axis[0], p[:, 1] - axis[1])
    return float(np.max(np.abs(rho - neck * np.cosh((p[:, 2] - height) / neck))) / neck)


# -- report ----------------------------------------------------------------
@dataclass
class VerificationReport:
    mean_curvature_max: float
    sphere_fit_max_residual: float
    boundary_sphere_residual: float
    boundary_angle_stats: dict
    closure_residual: float
    symmetry_residuals: dict
    symmetry_group: str
    winding_number: int
    orientation: int
    central_curve: dict
    self_intersection: dict
    tolerances: dict
    passed: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _passes(r, tol, expectations):
    p = {
        "mean_curvature": r.mean_curvature_max <= tol["mean_curvature"],
        "sphere_fit": r.sphere_fit_max_residual <= tol["sphere_fit"],
        "boundary_sphere": r.boundary_sphere_residual <= tol["boundary_sphere"],
        "boundary_angle": max(s["max_dev"] for s in r.boundary_angle_stats.values())
        <= tol["boundary_angle"],
        "closure": r.closure_residual <= tol["closure"],
        "symmetry": bool(r.symmetry_residuals)
        and max(r.symmetry_residuals.values()) <= tol["symmetry"],
    }
    if expectations.get("angle") is not None:
        p["angle_value"] = all(abs(s["mean"] - expectations["angle"]) <= tol["boundary_angle"]
                               for s in r.boundary_angle_stats.values())
    if expectations.get("winding") is not None:
        p["winding"] = r.winding_number == expectations["winding"]
    return p


def verify_chart(chart, expectations=None, tolerances=None, probe_stride=(2, 4),
                 run_probe=True):
    """Certify a closed chart normalised into the unit ball.

    Parameters
    ----------
    chart : SurfaceChart or OracleChart
    expectations : dict
        ``kind``, ``m``, ``n`` (rotation order), ``angle`` (expected boundary
        angle in radians, ``pi/2`` for free boundary) and ``winding``.
    tolerances : dict, optional
        Overrides for :data:`DEFAULT_TOLERANCES`.
    probe_stride : (int, int)
        Subsampling of the grid for the self-intersection probe.

    Raises
    ------
    GridTooCoarse
        If the grid is smaller than 33 x 129.
    """
    expectations = dict(expectations or {})
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    nu, nv = chart.shape
    if nu < MIN_NU or nv < MIN_NV:
        raise GridTooCoarse(f"grid {nu} x {nv} is below {MIN_NU} x {MIN_NV}")
    psi = chart.psi
    H = mean_curvature(chart)
    hmax = float(np.max(np.abs(H)))

    fits = [fit_sphere(psi[i, :-1]) for i in range(nu) if i != nu // 2]
    sphere_res = max(f.residual for f in fits)

    radial = {}
    for name, row in (("lower", 0), ("upper", nu - 1)):
        r = np.linalg.norm(psi[row], axis=-1)
        radial[name] = float(np.max(np.abs(r - 1.0)))
    # angles are measured against the sphere fitted to both boundary rows
    try:
        bfit = fit_sphere(np.vstack([psi[0, :-1], psi[-1, :-1]]))
    except Degenerate:
        bfit = None
    if bfit is None or bfit.is_plane:
        bcenter, bradius = np.zeros(3), 1.0
    else:
        bcenter, bradius = bfit.center, bfit.radius
    angle_stats = {}
    for name, row in (("lower", 0), ("upper", nu - 1)):
        ang = boundary_angles(chart, row, bcenter, bradius)
        mean = float(ang.mean())
        angle_stats[name] = {"mean": mean, "max_dev": float(np.max(np.abs(ang - mean)))}
    closure = float(np.max(np.linalg.norm(psi[:, -1] - psi[:, 0], axis=-1))) if chart.closed else math.nan

    mid = nu // 2
    nrm = fd_normal_row(chart, mid)
    w = winding_number(nrm)
    wind = int(round(w))
    orientation = 1 if wind >= 0 else -1
    curv = planar_curvature(psi[mid])
    tangent = np.gradient(psi[mid, :, :2], axis=0)
    central = {
        "plane_residual": float(np.max(np.abs(psi[mid, :, 2]))),
        "curvature_min": float(curv.min()),
        "curvature_max": float(curv.max()),
        "strictly_convex": bool(np.all(curv > 0) or np.all(curv < 0)),
        "tangent_winding": int(round(abs(winding_number(tangent)))),
    }

    n = int(expectations.get("n", chart.n_periods or 1))
    m = int(expectations.get("m", 1))
    sym = symmetry_residuals(chart, m, n, orientation) if chart.closed else {}
    group = f"D{n} x Z2" if sym and max(sym.values()) <= tol["symmetry"] else "undetermined"

    probe = probe_chart(chart, probe_stride) if run_probe else {"hits": None}
    probe["note"] = "numerical probe on the triangle soup, not a proof"

    rep = VerificationReport(hmax, float(sphere_res), max(radial.values()), angle_stats, closure,
                             sym, group, abs(wind), orientation, central, probe, tol)
    rep.passed = _passes(rep, tol, expectations)
    return rep
