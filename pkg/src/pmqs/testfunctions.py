"""Smooth compactly supported test functions with closed-form derivatives.

The building block is the standard mollifier bump(u) = exp(1 - 1/(1-u^2))
on |u| < 1 (normalized to peak 1), whose first three derivatives are coded
explicitly. Presets are polynomials multiplied by a translated and scaled
bump, which keeps everything C^infinity with compact support; the bare
polynomial presets (identity, constant) are allowed for diagnostics even
though they are not compactly supported.

All types here are plain data plus module-level math, so they pickle
cleanly into worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

_BOUND_GRID = 20001


def _bump_parts(u: np.ndarray):
    """bump value and log-derivative combinations on the open support."""
    one = 1.0 - u * u
    phi = np.exp(1.0 - 1.0 / one)
    s1 = -2.0 * u / one**2
    s2 = -(2.0 + 6.0 * u * u) / one**3
    s3 = -24.0 * u * (1.0 + u * u) / one**4
    return phi, s1, s2, s3


def bump_derivatives(u: np.ndarray, order: int) -> np.ndarray:
    """Derivative of the unit bump with respect to u, orders 0..3."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    if not np.any(inside):
        return out
    phi, s1, s2, s3 = _bump_parts(u[inside])
    if order == 0:
        val = phi
    elif order == 1:
        val = phi * s1
    elif order == 2:
        val = phi * (s1 * s1 + s2)
    elif order == 3:
        val = phi * (s1**3 + 3.0 * s1 * s2 + s3)
    else:
        raise ConfigError(f"bump derivatives available up to order 3, not {order}")
    out[inside] = val
    return out


@dataclass(frozen=True)
class TestFunction:
    """Polynomial times a scaled bump; kind 'poly' means no cutoff at all.

    coeffs are highest-degree-first (numpy polyval convention). For kind
    'poly_bump' the function is p(x) * bump((x-center)/halfwidth); for
    'poly' it is p(x) alone.
    """

    kind: str
    coeffs: tuple = (1.0,)
    center: float = 0.0
    halfwidth: float = 1.0

    def __post_init__(self):
        if self.kind not in ("poly_bump", "poly"):
            raise ConfigError(f"unknown test-function kind {self.kind!r}")
        if self.halfwidth <= 0:
            raise ConfigError("halfwidth must be positive")

    def _poly(self, order: int) -> np.ndarray:
        c = np.asarray(self.coeffs, dtype=float)
        for _ in range(order):
            c = np.polyder(c)
        return c

    def derivative(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            return np.polyval(self._poly(order), x)
        u = (x - self.center) / self.halfwidth
        # Leibniz rule for p(x) * B(u(x)); d/dx of B contributes 1/halfwidth
        total = np.zeros_like(x)
        from math import comb

        for j in range(order + 1):
            pj = np.polyval(self._poly(order - j), x)
            bj = bump_derivatives(u, j) / self.halfwidth**j
            total += comb(order, j) * pj * bj
        return total

    def __call__(self, x):
        return self.derivative(x, 0)

    def d1(self, x):
        return self.derivative(x, 1)

    def d2(self, x):
        return self.derivative(x, 2)

    def d3(self, x):
        return self.derivative(x, 3)

    @property
    def compact_support(self) -> bool:
        return self.kind == "poly_bump"

    def support(self) -> tuple[float, float]:
        if self.kind == "poly_bump":
            return self.center - self.halfwidth, self.center + self.halfwidth
        return -np.inf, np.inf

    def bounds(self, span: tuple[float, float] = (-8.0, 8.0)) -> dict[str, float]:
        """Estimated sup |A|, |A'|, |A''|, |A'''| over the support.

        Grid maxima inflated by 2%, which covers the grid's resolution of
        the true maximum for these smooth presets; the declared bounds are
        meant to hold at arbitrary points."""
        lo, hi = self.support()
        if not np.isfinite(lo):
            lo, hi = span
        xs = np.linspace(lo, hi, _BOUND_GRID)
        return {
            f"sup_d{k}": 1.02 * float(np.max(np.abs(self.derivative(xs, k))))
            for k in range(4)
        }


def smooth_bump(center: float = 0.0, halfwidth: float = 1.0) -> TestFunction:
    return TestFunction("poly_bump", (1.0,), center, halfwidth)


def quadratic_with_cutoff(halfwidth: float = 4.0) -> TestFunction:
    """Behaves like x**2 near the origin, smoothly cut off at |x| = halfwidth."""
    return TestFunction("poly_bump", (1.0, 0.0, 0.0), 0.0, halfwidth)


def polynomial_with_cutoff(coeffs: Sequence[float], center: float = 0.0,
                           halfwidth: float = 4.0) -> TestFunction:
    return TestFunction("poly_bump", tuple(float(c) for c in coeffs),
                        center, halfwidth)


def identity_function() -> TestFunction:
    return TestFunction("poly", (1.0, 0.0))


def constant_function(c: float = 1.0) -> TestFunction:
    return TestFunction("poly", (float(c),))


def from_config(spec: dict) -> TestFunction:
    kind = spec.get("kind")
    if kind == "bump":
        return smooth_bump(float(spec.get("center", 0.0)),
                           float(spec.get("halfwidth", 1.0)))
    if kind == "quadratic_cutoff":
        return quadratic_with_cutoff(float(spec.get("halfwidth", 4.0)))
    if kind == "poly_cutoff":
        return polynomial_with_cutoff(spec["coeffs"],
                                      float(spec.get("center", 0.0)),
                                      float(spec.get("halfwidth", 4.0)))
    if kind == "identity":
        return identity_function()
    if kind == "constant":
        return constant_function(float(spec.get("c", 1.0)))
    raise ConfigError(f"unknown test-function kind {kind!r}")
