"""Global numerical settings shared by every module."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    #: relative precision target for special-function evaluation
    precision: float = 1e-12
    #: distance (in lattice units) below which a point counts as a pole
    pole_guard: float = 1e-6
    #: absolute tolerance on the inequalities defining W, Omega, Omega0
    boundary_tol: float = 1e-12
    #: allowed relative drift of the first integrals h, 4k
    drift_budget: float = 1e-10
    #: local error tolerance of the (alpha, beta) integrator
    ode_tol: float = 1e-13
    #: grid defaults (u samples, v samples per fundamental period)
    nu: int = 129
    nv_per_period: int = 512

    def replace(self, **changes) -> "Settings":
        return dataclasses.replace(self, **changes)


_current = Settings()


def get_settings() -> Settings:
    return _current


def set_settings(settings: Settings) -> None:
    global _current
    _current = settings
