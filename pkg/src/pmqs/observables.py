"""Observables: Lipschitz test functions on [0, 1].

Presets cover the identity, affine maps, sine waves, tabulated piecewise
linear functions, and coboundaries g∘T - g of another observable under a
fixed map parameter (useful because their asymptotic variance vanishes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .maps import apply_map_unchecked, validate_alpha


@dataclass(frozen=True)
class Observable:
    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_constant: float
    label: str
    config: Optional[dict] = None

    def __call__(self, x):
        scalar = np.isscalar(x)
        out = self.fn(np.asarray(x, dtype=float))
        return float(out) if scalar else out

    def sup_norm_bound(self, grid_points: int = 4097) -> float:
        xs = np.linspace(0.0, 1.0, grid_points)
        return float(np.max(np.abs(self.fn(xs))))


def identity() -> Observable:
    return Observable("identity", lambda x: x, 1.0, "x", {"kind": "identity"})


def affine(a: float, b: float) -> Observable:
    return Observable("affine", lambda x: a + b * x, abs(b), f"{a}+{b}x",
                      {"kind": "affine", "a": a, "b": b})


def sine(k: int = 1) -> Observable:
    w = 2.0 * np.pi * k
    return Observable("sine", lambda x: np.sin(w * x), w, f"sin(2pi*{k}x)",
                      {"kind": "sine", "k": k})


def constant(c: float) -> Observable:
    return Observable("constant", lambda x: np.full_like(x, c), 0.0, f"{c}",
                      {"kind": "constant", "c": c})


def table(xs, vals) -> Observable:
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
        raise ConfigError("table observable needs increasing knots spanning [0, 1]")
    lip = float(np.max(np.abs(np.diff(vals) / np.diff(xs))))
    return Observable("table", lambda x: np.interp(x, xs, vals), lip, "table",
                      {"kind": "table", "xs": list(map(float, xs)),
                       "values": list(map(float, vals))})


def coboundary(g: Observable, alpha: float) -> Observable:
    """g∘T - g for the map at the given parameter.

    Piecewise Lipschitz; continuous across the branch point only when
    g(0) = g(1), as for full sine waves. Per-branch Lipschitz constant is
    bounded by Lip(g) * 3 + Lip(g) since the branch derivatives stay below 3.
    """
    alpha = validate_alpha(alpha)

    def fn(x: np.ndarray) -> np.ndarray:
        return g.fn(apply_map_unchecked(alpha, np.array(x, copy=True))) - g.fn(x)

    return Observable("coboundary", fn, 4.0 * g.lipschitz_constant,
                      f"({g.label})∘T - ({g.label}) @alpha={alpha}",
                      {"kind": "coboundary", "g": g.config, "alpha": alpha})


def from_config(spec: dict) -> Observable:
    """Materialize an observable from its config mapping."""
    kind = spec.get("kind")
    if kind == "identity":
        return identity()
    if kind == "affine":
        return affine(float(spec["a"]), float(spec["b"]))
    if kind == "sine":
        return sine(int(spec.get("k", 1)))
    if kind == "constant":
        return constant(float(spec["c"]))
    if kind == "table":
        return table(spec["xs"], spec["values"])
    if kind == "coboundary":
        return coboundary(from_config(spec["g"]), float(spec["alpha"]))
    raise ConfigError(f"unknown observable kind {kind!r}")


def empirical_lipschitz(f: Observable, grid_points: int = 8193,
                        rng=None, fuzz: int = 2048) -> float:
    """Largest difference quotient over a dense grid plus random pairs.

    Used by tests to confirm the declared constant; coboundaries are
    checked per branch (they may jump at the branch point)."""
    xs = np.linspace(0.0, 1.0, grid_points)
    if f.kind == "coboundary":
        quot = []
        for lo, hi in ((0.0, np.nextafter(0.5, 0)), (0.5, 1.0)):
            sub = xs[(xs >= lo) & (xs <= hi)]
            v = f.fn(sub)
            quot.append(np.max(np.abs(np.diff(v) / np.diff(sub))))
        best = max(quot)
    else:
        v = f.fn(xs)
        best = float(np.max(np.abs(np.diff(v) / np.diff(xs))))
    if rng is not None:
        a = rng.uniform(0.0, 1.0, size=fuzz)
        b = np.clip(a + rng.uniform(-1e-3, 1e-3, size=fuzz), 0.0, 1.0)
        ok = a != b
        if f.kind != "coboundary":
            q = np.abs(f.fn(b[ok]) - f.fn(a[ok])) / np.abs(b[ok] - a[ok])
            best = max(best, float(np.max(q)))
    return float(best)
