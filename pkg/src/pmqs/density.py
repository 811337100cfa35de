"""Piecewise-constant densities on a uniform grid of [0, 1].

Values are per-bin averages, so the integral is simply ``values.mean()``.
Signed variants are allowed for differences of probability densities.

The invariant-density cone for the map at parameter alpha consists of the
nonnegative decreasing functions f with x**(alpha+1)*f increasing and the
pointwise bound f(x) <= 2**alpha*(2+alpha)*x**(-alpha)*integral(f). The
cone check evaluates all three on bin midpoints; the first bin is excluded
from the pointwise bound because a bin average cannot faithfully represent
an integrable singularity at 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

# Default tolerances for cone membership of numerically computed densities.
CONE_TOL_MONOTONE = 1e-8
CONE_TOL_XPOWER = 1e-8
CONE_TOL_POINTWISE = 1e-8


@dataclass
class GridDensity:
    m: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.m,):
            raise DomainError(f"expected {self.m} bin values, got {self.values.shape}")

    # -- geometry --------------------------------------------------------

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m

    def edges(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    # -- measure ---------------------------------------------------------

    def integral(self) -> float:
        return float(self.values.mean())

    def l1_norm(self) -> float:
        return float(np.abs(self.values).mean())

    def l1_distance(self, other: "GridDensity") -> float:
        self._check_match(other)
        return float(np.abs(self.values - other.values).mean())

    def mean_of(self, f_mid: np.ndarray) -> float:
        """Midpoint quadrature of ``f`` (given at bin midpoints) against self."""
        return float(np.dot(f_mid, self.values) / self.m)

    def normalized(self) -> "GridDensity":
        total = self.integral()
        if total <= 0.0:
            raise DomainError("cannot normalize a density with nonpositive mass")
        return GridDensity(self.m, self.values / total)

    def is_probability(self, tol: float = 1e-10) -> bool:
        return bool(np.all(self.values >= -1e-14) and abs(self.integral() - 1.0) <= tol)

    def _check_match(self, other: "GridDensity") -> None:
        if other.m != self.m:
            raise DomainError(f"bin counts differ: {self.m} vs {other.m}")

    def __sub__(self, other: "GridDensity") -> "GridDensity":
        self._check_match(other)
        return GridDensity(self.m, self.values - other.values)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def uniform(m: int) -> "GridDensity":
        return GridDensity(m, np.ones(m))

    @staticmethod
    def from_function(m: int, fn: Callable[[np.ndarray], np.ndarray],
                      subsamples: int = 16) -> "GridDensity":
        """Bin averages of ``fn`` by midpoint quadrature with subsampling."""
        offs = (np.arange(subsamples) + 0.5) / subsamples / m
        edges = np.arange(m)[:, None] / m + offs[None, :]
        return GridDensity(m, fn(edges).mean(axis=1))

    @staticmethod
    def singular(m: int, beta: float) -> "GridDensity":
        """Exact bin averages of the normalized density (1-beta)*x**(-beta).

        A convenient cone member resembling an invariant density with a
        soft singularity; beta in [0, 1).
        """
        if not (0.0 <= beta < 1.0):
            raise DomainError(f"beta={beta} outside [0, 1)")
        edges = np.arange(m + 1) / m
        prim = edges ** (1.0 - beta)  # primitive of (1-beta) x**-beta
        return GridDensity(m, np.diff(prim) * m)


@dataclass
class ConeCheckReport:
    """Cone-membership diagnostics for a grid density at parameter alpha.

    decreasing_violation: largest positive jump values[i+1] - values[i].
    x_power_violation: largest decrease of midpoint**(alpha+1) * value.
    pointwise_bound_margin: min over midpoints (first bin excluded) of
        2**alpha*(2+alpha)*x**(-alpha)*integral - value.
    """

    alpha: float
    decreasing_violation: float
    x_power_violation: float
    pointwise_bound_margin: float
    tol_monotone: float = CONE_TOL_MONOTONE
    tol_xpower: float = CONE_TOL_XPOWER
    tol_pointwise: float = CONE_TOL_POINTWISE

    @property
    def passed(self) -> bool:
        return (
            self.decreasing_violation <= self.tol_monotone
            and self.x_power_violation <= self.tol_xpower
            and self.pointwise_bound_margin >= -self.tol_pointwise
        )

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "decreasing_violation": self.decreasing_violation,
            "x_power_violation": self.x_power_violation,
            "pointwise_bound_margin": self.pointwise_bound_margin,
            "passed": self.passed,
        }


def cone_check(density: GridDensity, alpha: float,
               tol_monotone: float = CONE_TOL_MONOTONE,
               tol_xpower: float = CONE_TOL_XPOWER,
               tol_pointwise: float = CONE_TOL_POINTWISE) -> ConeCheckReport:
    v = density.values
    mids = density.midpoints()
    dec = float(np.max(np.diff(v), initial=0.0))
    xp = mids ** (alpha + 1.0) * v
    xpow = float(np.max(-np.diff(xp), initial=0.0))
    bound = 2.0**alpha * (2.0 + alpha) * mids ** (-alpha) * density.integral()
    margin = float(np.min((bound - v)[1:]))
    return ConeCheckReport(
        alpha=alpha,
        decreasing_violation=dec,
        x_power_violation=xpow,
        pointwise_bound_margin=margin,
        tol_monotone=tol_monotone,
        tol_xpower=tol_xpower,
        tol_pointwise=tol_pointwise,
    )
