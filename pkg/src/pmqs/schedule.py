"""Parameter curves and the triangular arrays driving the sequential maps.

A curve gamma: [0,1] -> [0, beta_star] with beta_star < 1/2 sets the slow
modulation; level-n rows sample it so that n**eta times the sup deviation
between the row profile and the curve stays bounded. The equipartition
row entries[k] = gamma(k/n) always satisfies that with budget equal to the
curve's Hoelder constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .rng import stream

CURVE_KINDS = ("constant", "linear", "cosine", "table")


@dataclass(frozen=True)
class ParameterCurve:
    """Limiting parameter curve with declared Hoelder data.

    kind: one of CURVE_KINDS.
    params: kind-specific values; constant -> (c,), linear/cosine -> (a, b),
        table -> (knots_t, knots_v) piecewise-linear.
    eta: Hoelder exponent in (0, 1]. The shipped presets are Lipschitz
        (eta = 1); table curves are too.
    beta_star: supremum bound for the curve range, < 1/2 unless the relaxed
        ergodic-only regime is requested.
    """

    kind: str
    params: tuple
    eta: float = 1.0
    beta_star: float = 0.25
    relaxed: bool = False  # permit beta_star in [1/2, 1): ergodic-mode only

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ConfigError(f"unknown curve kind {self.kind!r}")
        if not (0.0 < self.eta <= 1.0):
            raise ConfigError(f"eta={self.eta} outside (0, 1]")
        cap = 1.0 if self.relaxed else 0.5
        if not (0.0 < self.beta_star < cap):
            raise ConfigError(
                f"beta_star={self.beta_star} must lie in (0, {cap}); the "
                "fluctuation theory requires beta_star < 1/2"
            )
        lo, hi = self.range()
        if lo < 0.0 or hi > self.beta_star + 1e-15:
            raise ConfigError(
                f"curve range [{lo}, {hi}] not contained in [0, beta_star="
                f"{self.beta_star}]"
            )

    # -- evaluation -----------------------------------------------------

    def __call__(self, t):
        return curve_eval(self, t)

    def range(self) -> tuple[float, float]:
        if self.kind == "constant":
            (c,) = self.params
            return float(c), float(c)
        if self.kind in ("linear", "cosine"):
            a, b = self.params
            return min(a, b), max(a, b)
        knots_t, knots_v = self.params
        return float(np.min(knots_v)), float(np.max(knots_v))

    def holder_constant(self) -> float:
        """A valid Hoelder constant at exponent eta for the presets."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "linear":
            a, b = self.params
            return abs(b - a)
        if self.kind == "cosine":
            a, b = self.params
            return abs(b - a) * np.pi
        knots_t, knots_v = map(np.asarray, self.params)
        dt = np.diff(knots_t)
        return float(np.max(np.abs(np.diff(knots_v)) / dt))

    @staticmethod
    def constant(c: float, beta_star: Optional[float] = None, **kw) -> "ParameterCurve":
        bs = beta_star if beta_star is not None else max(c, 0.05)
        return ParameterCurve("constant", (float(c),), beta_star=bs, **kw)

    @staticmethod
    def linear(a: float, b: float, beta_star: Optional[float] = None, **kw) -> "ParameterCurve":
        bs = beta_star if beta_star is not None else max(a, b)
        return ParameterCurve("linear", (float(a), float(b)), beta_star=bs, **kw)

    @staticmethod
    def cosine(a: float, b: float, beta_star: Optional[float] = None, **kw) -> "ParameterCurve":
        bs = beta_star if beta_star is not None else max(a, b)
        return ParameterCurve("cosine", (float(a), float(b)), beta_star=bs, **kw)

    @staticmethod
    def table(knots_t, knots_v, beta_star: Optional[float] = None, **kw) -> "ParameterCurve":
        knots_t = tuple(float(t) for t in knots_t)
        knots_v = tuple(float(v) for v in knots_v)
        if knots_t[0] != 0.0 or knots_t[-1] != 1.0 or np.any(np.diff(knots_t) <= 0):
            raise ConfigError("table knots must increase from t=0 to t=1")
        bs = beta_star if beta_star is not None else max(knots_v)
        return ParameterCurve("table", (knots_t, knots_v), beta_star=bs, **kw)


def curve_eval(gamma: ParameterCurve, t):
    """gamma(t) for t in [0, 1]; scalar or array."""
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("curve argument t outside [0, 1]")
    if gamma.kind == "constant":
        out = np.full_like(t, gamma.params[0])
    elif gamma.kind == "linear":
        a, b = gamma.params
        out = a + (b - a) * t
    elif gamma.kind == "cosine":
        a, b = gamma.params
        out = a + (b - a) * 0.5 * (1.0 - np.cos(2.0 * np.pi * t))
    else:
        knots_t, knots_v = gamma.params
        out = np.interp(t, knots_t, knots_v)
    return float(out) if scalar else out


@dataclass(frozen=True)
class ParameterArrayRow:
    """Level-n row of the triangular parameter array, entries[k] for 0<=k<=n."""

    n: int
    entries: np.ndarray
    curve: Optional[ParameterCurve] = None
    row_id: Optional[str] = None

    def __post_init__(self):
        if len(self.entries) != self.n + 1:
            raise ConfigError(f"row of level n={self.n} needs n+1 entries")
        if self.curve is not None:
            bs = self.curve.beta_star
            if np.any(self.entries < 0.0) or np.any(self.entries > bs + 1e-15):
                raise ConfigError("row entries escape [0, beta_star]")

    def __getitem__(self, k: int) -> float:
        return float(self.entries[k])

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.entries == self.entries[0]))


def equipartition(gamma: ParameterCurve, n: int) -> ParameterArrayRow:
    """Canonical row entries[k] = gamma(k/n)."""
    if n < 1:
        raise DomainError(f"level n={n} must be >= 1")
    ks = np.arange(n + 1) / n
    entries = np.asarray(curve_eval(gamma, ks), dtype=float)
    return ParameterArrayRow(n=n, entries=entries, curve=gamma,
                             row_id=f"equi:{gamma.kind}:{n}")


def perturbed_equipartition(
    gamma: ParameterCurve, n: int, amplitude: float, seed: int
) -> ParameterArrayRow:
    """Equipartition row plus O(n**-eta) noise, exercising the rate budget.

    Entries are clipped back into [0, beta_star]; with amplitude <= the
    curve's Hoelder budget the rate condition still holds (with the sum of
    the two budgets).
    """
    base = equipartition(gamma, n)
    rng = stream(seed, "perturbed-row", n)
    noise = amplitude * n ** (-gamma.eta) * rng.uniform(-1.0, 1.0, size=n + 1)
    entries = np.clip(base.entries + noise, 0.0, gamma.beta_star)
    return ParameterArrayRow(n=n, entries=entries, curve=gamma,
                             row_id=f"pert:{gamma.kind}:{n}:{amplitude}")


def rate_condition_sup(row: ParameterArrayRow, gamma: ParameterCurve,
                       oversample: int = 10) -> float:
    """n**eta * sup_t |entries[floor(n t)] - gamma(t)| on a dense t grid."""
    n = row.n
    ts = np.linspace(0.0, 1.0, oversample * n + 1)
    idx = np.minimum(np.floor(n * ts).astype(int), n)
    dev = np.abs(row.entries[idx] - curve_eval(gamma, ts))
    return float(n**gamma.eta * np.max(dev))
