"""Exact sampling of the limiting diffusion and the martingale functional.

The limit process has deterministic time-dependent volatility given by the
variance curve, so its law is an explicit Gaussian process with independent
increments: the increment over [a, b] is N(0, ∫_a^b sigma^2). Sampling
draws those increments exactly (no time-stepping scheme error); an
Euler-Maruyama mode exists purely as a cross-check.

The martingale functional of a test function A along a path w is

    M_t(w) = A(w(t)) - A(w(0)) - ∫_0^t (1/2) sigma^2(s) A''(w(s)) ds,

with the integral by trapezoid on the path's grid (optionally refined by
piecewise-linear path interpolation). Limit ensembles can also accumulate
the integral on an internal fine grid during sampling, which keeps the
quadrature bias of downstream martingale statistics below their Monte
Carlo resolution.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NumericsError
from .greenkubo import VarianceCurve
from .mc import BLOCK_PATHS, MartingaleSpec, PathEnsemble
from .rng import stream
from .testfunctions import TestFunction


def _refined_grid(grid: np.ndarray, refine: int) -> np.ndarray:
    if refine <= 1:
        return grid
    parts = [
        np.linspace(grid[i], grid[i + 1], refine, endpoint=False)
        for i in range(len(grid) - 1)
    ]
    return np.concatenate(parts + [grid[-1:]])


def _increment_variances(sigma: VarianceCurve, pts: np.ndarray) -> np.ndarray:
    v = np.array([sigma.integral(a, b) for a, b in zip(pts[:-1], pts[1:])])
    if np.any(v < 0.0):
        raise NumericsError("negative increment variance from the variance curve")
    return v


def _limit_block(payload: dict):
    b = payload["block"]
    size = payload["hi"] - payload["lo"]
    rng = stream(payload["seed"], payload["tag"], "block", b)
    sd = payload["incr_std"]
    fine = payload["fine_grid"]
    z = rng.standard_normal((size, len(sd)))
    paths = np.empty((size, len(fine)))
    paths[:, 0] = 0.0
    np.cumsum(z * sd[None, :], axis=1, out=paths[:, 1:])
    I = np.empty((size, len(payload["specs"])))
    for j, (A, sl, sub, sig2_sub) in enumerate(payload["specs"]):
        integrand = 0.5 * sig2_sub[None, :] * A.d2(paths[:, sl])
        I[:, j] = np.trapezoid(integrand, sub, axis=1)
    coarse = payload["coarse_idx"]
    return b, paths[:, coarse], I


def sample_limit_paths(sigma: VarianceCurve, grid, M: int, seed: int,
                       refine: int = 8,
                       mart_specs: Sequence[MartingaleSpec] = (),
                       threads: int = 1,
                       tag: str = "limit") -> PathEnsemble:
    """Gaussian-process ensemble of the limit law on the given grid.

    The internal grid refines each interval ``refine``-fold; stored values
    are the coarse-grid marginals (exact in law either way), while the
    per-path martingale integrals in ``extras`` are computed on the fine
    grid. The grid must start at 0: the limit paths are pinned there.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0:
        raise DomainError("limit-path grid must start at t=0")
    fine = _refined_grid(grid, refine)
    var = _increment_variances(sigma, fine)
    incr_std = np.sqrt(var)
    coarse_idx = np.searchsorted(fine, grid)
    specs = []
    for spec in mart_specs:
        i0 = int(np.searchsorted(fine, spec.r))
        i1 = int(np.searchsorted(fine, spec.t))
        if abs(fine[i0] - spec.r) > 1e-12 or abs(fine[i1] - spec.t) > 1e-12:
            raise DomainError("martingale endpoints must lie on the grid")
        sl = slice(i0, i1 + 1)
        sub = fine[sl]
        specs.append((spec.A, sl, sub, sigma.interp(sub)))
    payloads = [
        {"block": b, "lo": lo, "hi": min(lo + BLOCK_PATHS, M), "seed": seed,
         "tag": tag, "incr_std": incr_std, "fine_grid": fine,
         "coarse_idx": coarse_idx, "specs": specs}
        for b, lo in enumerate(range(0, M, BLOCK_PATHS))
    ]
    if threads <= 1 or len(payloads) <= 1:
        results = [_limit_block(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_limit_block, payloads))
    values = np.empty((M, len(grid)))
    I = np.empty((M, len(specs)))
    for b, vals, I_b in results:
        lo = b * BLOCK_PATHS
        values[lo:lo + len(vals)] = vals
        I[lo:lo + len(I_b)] = I_b
    extras = {spec.name: I[:, j] for j, spec in enumerate(mart_specs)}
    return PathEnsemble(n=0, M=M, grid=grid, values=values, seed=seed,
                        kind="limit", extras=extras,
                        meta={"refine": refine})


def euler_maruyama_paths(sigma: VarianceCurve, grid, M: int, seed: int,
                         substeps: int = 32, tag: str = "euler") -> PathEnsemble:
    """Time-stepping cross-check for the exact sampler (left-point scheme)."""
    grid = np.asarray(grid, dtype=float)
    fine = _refined_grid(grid, substeps)
    dt = np.diff(fine)
    vol = np.sqrt(np.clip(sigma.interp(fine[:-1]), 0.0, None))
    values = np.empty((M, len(grid)))
    for b, lo in enumerate(range(0, M, BLOCK_PATHS)):
        hi = min(lo + BLOCK_PATHS, M)
        rng = stream(seed, tag, "block", b)
        z = rng.standard_normal((hi - lo, len(dt)))
        paths = np.concatenate(
            [np.zeros((hi - lo, 1)),
             np.cumsum(z * (vol * np.sqrt(dt))[None, :], axis=1)], axis=1)
        values[lo:hi] = paths[:, np.searchsorted(fine, grid)]
    return PathEnsemble(n=0, M=M, grid=grid, values=values, seed=seed,
                        kind="limit", meta={"scheme": "euler", "substeps": substeps})


def martingale_functional(values: np.ndarray, A: TestFunction,
                          sigma: VarianceCurve, t: float, grid,
                          refine: int = 1) -> np.ndarray:
    """M_t evaluated on one path (G,) or a stack of paths (M, G).

    Quadrature is trapezoid on the grid restricted to [0, t]; refine > 1
    interpolates the path piecewise-linearly onto a finer grid first.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    idx = int(np.argmin(np.abs(grid - t)))
    if abs(grid[idx] - t) > 1e-9:
        raise DomainError(f"t={t} is not on the grid")
    sub = grid[: idx + 1]
    path = values[:, : idx + 1]
    if refine > 1 and len(sub) > 1:
        fine = _refined_grid(sub, refine)
        path = np.apply_along_axis(lambda row: np.interp(fine, sub, row), 1, path)
        sub = fine
    integrand = 0.5 * sigma.interp(sub)[None, :] * A.d2(path)
    I = np.trapezoid(integrand, sub, axis=1)
    out = A(values[:, idx]) - A(values[:, 0]) - I
    return out if out.shape[0] > 1 else out[0] * np.ones(1)


def martingale_increment(ens: PathEnsemble, A: TestFunction,
                         sigma: VarianceCurve, r: float, t: float,
                         extra_name: Optional[str] = None) -> np.ndarray:
    """M_t - M_r per path, preferring an in-sweep integral when present."""
    xt = ens.at(t)
    xr = ens.at(r)
    if extra_name is not None and extra_name in ens.extras:
        I = ens.extras[extra_name]
    else:
        grid = ens.grid
        i0 = ens.index_of(r)
        i1 = ens.index_of(t)
        sub = grid[i0: i1 + 1]
        integrand = 0.5 * sigma.interp(sub)[None, :] * A.d2(ens.values[:, i0:i1 + 1])
        I = np.trapezoid(integrand, sub, axis=1)
    return A(xt) - A(xr) - I
