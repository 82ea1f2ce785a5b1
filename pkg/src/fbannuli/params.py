"""Spectral parameters attached to a root pair ``(r1, r2)`` and the domain tests.

With the normalisation ``r1*r2*r3 = 1`` the cubic
``q(x) = -(x - r1)(x - r2)(x - r3) = -x^3 + delta x^2 + h x + k`` fixes
everything else: ``b = (r1 + r2 + r3)/3``, branch values
``e_j = (b - r_j)/4`` and the lattice invariants built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import get_settings
from .elliptic import RectLattice, lattice_from_roots
from .errors import DomainError

CBRT2 = 2.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class CubicQ:
    """Coefficients of ``q(x) = c3 x^3 + c2 x^2 + c1 x + c0`` plus its roots."""

    c3: float
    c2: float
    c1: float
    c0: float
    roots: tuple

    def __call__(self, x):
        x = np.asarray(x)
        r1, r2, r3 = self.roots
        return -(x - r1) * (x - r2) * (x - r3)

    def derivative(self, x):
        return 3.0 * self.c3 * x * x + 2.0 * self.c2 * x + self.c1

    def discriminant(self):
        a, b, c, d = self.c3, self.c2, self.c1, self.c0
        return (b * b * c * c - 4 * a * c ** 3 - 4 * b ** 3 * d - 27 * a * a * d * d
                + 18 * a * b * c * d)


@dataclass(frozen=True)
class SpectralParams:
    r1: float
    r2: float
    r3: float
    b: float
    delta: float
    h: float
    k: float
    e: tuple
    lattice: RectLattice

    @property
    def q(self):
        return CubicQ(-1.0, self.delta, self.h, self.k, (self.r1, self.r2, self.r3))

    @property
    def g2(self):
        return self.lattice.inv.g2

    @property
    def g3(self):
        return self.lattice.inv.g3

    def cubicb_residual(self):
        b = self.b
        return abs(b ** 3 - 4.0 * self.g2 * b - 16.0 * self.g3 - 1.0)


def derive_spectral(r1, r2):
    """All constants derived from ``r1 < r2 < 0``.

    Examples
    --------
    >>> sp = derive_spectral(-2.0, -0.5)
    >>> sp.r3, sp.b, sp.delta, sp.h
    (1.0, -0.5, -1.5, 1.5)
    """
    r1, r2 = float(r1), float(r2)
    if not (r1 < r2 < 0.0):
        raise DomainError(f"need r1 < r2 < 0, got ({r1}, {r2})")
    r3 = 1.0 / (r1 * r2)
    delta = r1 + r2 + r3
    b = delta / 3.0
    h = -(r1 * r2 + r1 * r3 + r2 * r3)
    k = r1 * r2 * r3
    # e_j are affine in r_j; the ordering r1 < r2 < r3 gives e1 > e2 > e3
    e = ((b - r1) / 4.0, (b - r2) / 4.0, (b - r3) / 4.0)
    lat = lattice_from_roots(*e)
    return SpectralParams(r1, r2, r3, b, delta, h, k, e, lat)


def diagonal_cubic(r):
    """``q`` for the double root ``r1 = r2 = r`` (no lattice exists there)."""
    r3 = 1.0 / (r * r)
    delta = 2.0 * r + r3
    h = -(r * r + 2.0 * r * r3)
    return CubicQ(-1.0, delta, h, 1.0, (r, r, r3))


def eval_q_p(sp, x, u_data=None):
    """``q(x)`` and the quartic ``p(u, X)`` coefficients at a state.

    Parameters
    ----------
    sp : SpectralParams
    x : float
    u_data : mapping with alpha, beta, alpha_prime, beta_prime, optional

    Returns
    -------
    dict
        ``q_of_x`` and ``p_of_X`` (coefficients of ``X^4 .. X^0``).
    """
    out = {"q_of_x": float(sp.q(x))}
    if u_data is not None:
        a, bb = u_data["alpha"], u_data["beta"]
        ap, bp = u_data["alpha_prime"], u_data["beta_prime"]
        gamma = (6.0 * a * bb - 4.0 * sp.delta) / 6.0
        out["p_of_X"] = (-a * a, -4.0 * ap, 6.0 * gamma, 4.0 * bp, -(4.0 + bb * bb))
    return out


def quartic_discriminant(c):
    """Discriminant of ``a X^4 + b X^3 + c X^2 + d X + e``."""
    a, b, cc, d, e = c
    return (256 * a ** 3 * e ** 3 - 192 * a ** 2 * b * d * e ** 2 - 128 * a ** 2 * cc ** 2 * e ** 2
            + 144 * a ** 2 * cc * d ** 2 * e - 27 * a ** 2 * d ** 4 + 144 * a * b ** 2 * cc * e ** 2
            - 6 * a * b ** 2 * d ** 2 * e - 80 * a * b * cc ** 2 * d * e + 18 * a * b * cc * d ** 3
            + 16 * a * cc ** 4 * e - 4 * a * cc ** 3 * d ** 2 - 27 * b ** 4 * e ** 2
            + 18 * b ** 3 * cc * d * e - 4 * b ** 3 * d ** 3 - 4 * b ** 2 * cc ** 3 * e
            + b ** 2 * cc ** 2 * d ** 2)


class Domain(str, Enum):
    OUTSIDE_W = "OutsideW"
    W_ONLY = "W_only"
    OMEGA_NOT_OMEGA0 = "Omega_not_Omega0"
    OMEGA0 = "Omega0"
    DIAGONAL = "Diagonal"
    L0 = "L0"


@dataclass(frozen=True)
class DomainTag:
    tag: Domain
    on_boundary: bool = False


def omega_lower(r2):
    """Lower bound for ``r1`` in Omega at a given ``r2``."""
    return (-1.0 - math.sqrt(1.0 - 4.0 * r2 ** 3)) / (2.0 * r2 * r2)


def classify_domain(r1, r2):
    """Locate ``(r1, r2)`` among W, Omega, Omega0 and the diagonal pieces.

    Examples
    --------
    >>> classify_domain(-2.0, -0.5).tag.value
    'Omega_not_Omega0'
    >>> classify_domain(-1.1, -1.1).tag.value
    'L0'
    """
    tol = get_settings().boundary_tol
    r1, r2 = float(r1), float(r2)
    if r2 >= 0.0 or r1 > r2 + tol:
        return DomainTag(Domain.OUTSIDE_W, abs(r2) <= tol or abs(r1 - r2) <= tol)
    if abs(r1 - r2) <= tol:
        r = 0.5 * (r1 + r2)
        edge = abs(r1 - r2) > 0.0 or abs(r + CBRT2) <= tol or abs(r + 1.0) <= tol
        if -CBRT2 < r <= -1.0 + tol:
            return DomainTag(Domain.L0, edge)
        return DomainTag(Domain.DIAGONAL, edge)
    margins = [r2 + CBRT2, -r2]
    in_omega = r2 > -CBRT2
    if in_omega:
        low = omega_lower(r2)
        margins.append(r1 - low)
        in_omega = r1 > low
    if not in_omega:
        close = any(abs(m) <= tol for m in margins)
        return DomainTag(Domain.W_ONLY, close)
    m0 = -1.0 - r1 * r2 * r2
    near = min(abs(m) for m in margins) <= tol or abs(m0) <= tol
    if m0 > 0:
        return DomainTag(Domain.OMEGA0, near)
    return DomainTag(Domain.OMEGA_NOT_OMEGA0, near)


def in_omega0(r1, r2):
    return classify_domain(r1, r2).tag in (Domain.OMEGA0,)
