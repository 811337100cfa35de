"""Seeded Monte Carlo engine for running-sum paths and their fluctuations.

A level-n path for observable f is the piecewise-linear interpolation of
the running sums along the time-dependent orbit,

    S(x, t) = sum_{k < floor(nt)} f_k(x) + (nt - floor(nt)) * f_{floor(nt)}(x),

stored only at a fixed time grid and computed in a single orbit sweep.
Fluctuation paths subtract a deterministic centering curve (operator
pushforward means, never a second Monte Carlo estimate, because the
downstream tests are sensitive to centering bias of order n**-1/2) and
scale by n**-1/2.

Determinism: paths are organized in fixed blocks of BLOCK_PATHS; block b
draws everything it needs from the counter-based stream keyed by
(seed, tag, "block", b). Results are therefore bit-identical for any
worker count. Workers are separate processes; all payloads are plain data.

Constant all-zero parameter rows get a dedicated doubling kernel: the
float64 doubling map shifts mantissa bits out and every float orbit hits
the fixed point 0 within ~53 steps, which would wreck the statistics. The
kernel tracks the state as a 64-bit integer and feeds one fresh random bit
per step, which reproduces the orbit of an initial point with an infinite
random binary expansion exactly in law (up to 2**-64 truncation).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .density import GridDensity
from .errors import DomainError
from .maps import apply_map_unchecked
from .observables import Observable, from_config as observable_from_config
from .rng import stream
from .schedule import ParameterArrayRow
from .testfunctions import TestFunction
from .ulam import SequentialTransfer

BLOCK_PATHS = 4096


# ---------------------------------------------------------------------------
# initial measures and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialMeasure:
    """Initial or centering measure.

    kind 'lebesgue' and 'grid_density' are sampleable probability measures;
    kind 'signed_pair' carries densities (g1, g2) whose difference is the
    centering density and cannot be sampled.
    """

    kind: str
    density: Optional[GridDensity] = None
    pair: Optional[tuple[GridDensity, GridDensity]] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("lebesgue", "grid_density", "signed_pair"):
            raise DomainError(f"unknown initial-measure kind {self.kind!r}")
        if self.kind == "grid_density":
            if self.density is None or not self.density.is_probability():
                raise DomainError("grid_density measure needs a probability density")
        if self.kind == "signed_pair" and self.pair is None:
            raise DomainError("signed_pair measure needs its two densities")

    @property
    def sampleable(self) -> bool:
        return self.kind in ("lebesgue", "grid_density")

    def density_values(self, m: int) -> np.ndarray:
        if self.kind == "lebesgue":
            return np.ones(m)
        if self.kind == "grid_density":
            if self.density.m != m:
                raise DomainError(
                    f"measure density has {self.density.m} bins, need {m}")
            return self.density.values.copy()
        g1, g2 = self.pair
        if g1.m != m or g2.m != m:
            raise DomainError("signed pair resolution mismatch")
        return g1.values - g2.values

    @staticmethod
    def lebesgue() -> "InitialMeasure":
        return InitialMeasure("lebesgue", label="lebesgue")

    @staticmethod
    def from_density(density: GridDensity, label: str = "grid") -> "InitialMeasure":
        return InitialMeasure("grid_density", density=density, label=label)

    @staticmethod
    def from_pair(g1: GridDensity, g2: GridDensity,
                  label: str = "signed") -> "InitialMeasure":
        return InitialMeasure("signed_pair", pair=(g1, g2), label=label)


def _sample_block(mu: InitialMeasure, rng, size: int) -> np.ndarray:
    u = rng.random(size)
    if mu.kind == "lebesgue":
        return u
    # inverse CDF of the piecewise-constant density: the CDF is piecewise
    # linear on the bin edges, so within-bin placement is uniform
    v = mu.density.values
    m = mu.density.m
    cum = np.concatenate([[0.0], np.cumsum(v) / m])
    cum /= cum[-1]
    bins = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, m - 1)
    width = cum[bins + 1] - cum[bins]
    frac = np.where(width > 0, (u - cum[bins]) / np.maximum(width, 1e-300), 0.5)
    return np.minimum((bins + frac) / m, np.nextafter(1.0, 0.0))


def sample_initial(mu: InitialMeasure, M: int, seed: int,
                   tag: str = "ensemble") -> np.ndarray:
    """M points in [0, 1), deterministic per (seed, tag), block-structured."""
    if not mu.sampleable:
        raise DomainError(f"measure kind {mu.kind!r} is centering-only, not sampleable")
    out = np.empty(M)
    for b, lo in enumerate(range(0, M, BLOCK_PATHS)):
        hi = min(lo + BLOCK_PATHS, M)
        rng = stream(seed, tag, "block", b)
        out[lo:hi] = _sample_block(mu, rng, hi - lo)
    return out


# ---------------------------------------------------------------------------
# time grids
# ---------------------------------------------------------------------------

def build_time_grid(intervals: int = 64, specials: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid 0..1 with the given interval count, plus extra points."""
    pts = np.concatenate([np.arange(intervals + 1) / intervals,
                          np.asarray(specials, dtype=float)])
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        raise DomainError("time grid points must lie in [0, 1]")
    return np.unique(pts)


def grid_steps(grid: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """floor(n t) and the fractional remainder for each grid point."""
    nt = n * np.asarray(grid, dtype=float)
    k_idx = np.minimum(np.floor(nt).astype(np.int64), n)
    return k_idx, nt - k_idx


def integral_weights(n: int, r: float, t: float) -> tuple[int, np.ndarray]:
    """Midpoint-cell quadrature weights for an integral over [r, t].

    Step k owns the cell [(k-1/2)/n, (k+1/2)/n] ∩ [0, 1]; the weight is the
    cell's overlap with [r, t]. Weights sum exactly to t - r and the rule
    converges at rate O(1/n), so statistics built on it sharpen as the
    level grows.
    """
    if not (0.0 <= r < t <= 1.0):
        raise DomainError("need 0 <= r < t <= 1")
    k_lo = max(int(np.floor(n * r - 0.5)), 0)
    k_hi = min(int(np.ceil(n * t + 0.5)), n)
    ks = np.arange(k_lo, k_hi + 1)
    a = np.maximum(np.maximum((ks - 0.5) / n, 0.0), r)
    b = np.minimum(np.minimum((ks + 0.5) / n, 1.0), t)
    return k_lo, np.maximum(b - a, 0.0)


# ---------------------------------------------------------------------------
# centering curves
# ---------------------------------------------------------------------------

@dataclass
class CenteringData:
    """Per-step pushforward means of the observable and their prefix sums."""

    means: np.ndarray    # nu(f_k) for k = 0..n
    prefix: np.ndarray   # prefix[k] = sum_{j<k} means[j]
    measure_label: str
    n: int

    def curve(self, grid: np.ndarray) -> np.ndarray:
        """nu(S(., t)) on the grid."""
        k_idx, frac = grid_steps(grid, self.n)
        return self.prefix[k_idx] + frac * self.means[k_idx]


def centering_data_multi(f: Observable, row: ParameterArrayRow,
                         measures: Sequence[InitialMeasure],
                         m: int) -> list[CenteringData]:
    """Centering passes for several measures sharing one operator sweep."""
    mids = (np.arange(m) + 0.5) / m
    f_mid = f.fn(mids)
    n = row.n
    gs = [nu.density_values(m) for nu in measures]
    means = np.empty((len(gs), n + 1))
    means[:, 0] = [np.dot(f_mid, g) / m for g in gs]
    drv = SequentialTransfer(m)
    for k in range(1, n + 1):
        gs = drv.step(float(row.entries[k]), gs)
        means[:, k] = [np.dot(f_mid, g) / m for g in gs]
    out = []
    for i, nu in enumerate(measures):
        prefix = np.concatenate([[0.0], np.cumsum(means[i, :-1])])
        out.append(CenteringData(means=means[i], prefix=prefix,
                                 measure_label=nu.label or nu.kind, n=n))
    return out


def centering_data(f: Observable, row: ParameterArrayRow, nu: InitialMeasure,
                   m: int) -> CenteringData:
    """Deterministic centering via one sequential pushforward pass at
    resolution m; signed-pair measures are handled by linearity."""
    return centering_data_multi(f, row, [nu], m)[0]


def centering_curve(f: Observable, row: ParameterArrayRow, nu: InitialMeasure,
                    grid: np.ndarray, m: int) -> np.ndarray:
    """nu(S(., t)) on the grid (unscaled)."""
    return centering_data(f, row, nu, m).curve(np.asarray(grid, dtype=float))


def centering_gap(mu_data: CenteringData, nu_data: CenteringData,
                  grid: np.ndarray) -> float:
    """sup over the grid of |chi^mu - chi^nu|, which is path-independent:
    the two fluctuations differ by the deterministic curve
    n**-1/2 (nu(S) - mu(S))."""
    if mu_data.n != nu_data.n:
        raise DomainError("centering levels differ")
    diff = mu_data.curve(grid) - nu_data.curve(grid)
    return float(np.max(np.abs(diff)) / np.sqrt(mu_data.n))


# ---------------------------------------------------------------------------
# path ensembles
# ---------------------------------------------------------------------------

@dataclass
class PathEnsemble:
    """M paths sampled on a common time grid, with provenance metadata.

    values[p, i] is path p at grid[i]. extras holds per-path in-sweep
    functionals (martingale integrals) keyed by spec name.
    """

    n: int
    M: int
    grid: np.ndarray
    values: np.ndarray
    seed: int
    kind: str = "fluctuation"
    centering: dict = field(default_factory=dict)
    row_id: Optional[str] = None
    extras: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.grid - t)))
        if abs(self.grid[i] - t) > 1e-9:
            raise DomainError(f"t={t} is not on the ensemble grid")
        return i

    def at(self, t: float) -> np.ndarray:
        return self.values[:, self.index_of(t)]


@dataclass(frozen=True)
class MartingaleSpec:
    """In-sweep accumulation of ∫ (1/2) sigma^2(s) A''(xi(s)) ds over [r, t]."""

    name: str
    A: TestFunction
    r: float
    t: float


def _doubling_states(u: np.ndarray, words: np.ndarray, k: int) -> np.ndarray:
    bit = (words[:, (k - 1) >> 6] >> np.uint64((k - 1) & 63)) & np.uint64(1)
    return (u << np.uint64(1)) | bit


def _u64_to_unit(u: np.ndarray) -> np.ndarray:
    return (u.astype(np.float64) + 0.5) * 2.0**-64


def _simulate_block(payload: dict):
    """Sweep one block of paths; returns (block_index, S_block, integrals)."""
    b = payload["block"]
    lo, hi = payload["lo"], payload["hi"]
    size = hi - lo
    entries = payload["entries"]
    n = len(entries) - 1
    f = observable_from_config(payload["f_config"])
    rng = stream(payload["seed"], payload["tag"], "block", b)
    x = _sample_block(payload["mu"], rng, size)
    all_zero = payload["all_zero"]
    if all_zero:
        n_words = max((n + 63) // 64, 1)
        words = rng.integers(0, 2**64, size=(size, n_words), dtype=np.uint64)
        u = np.floor(x * 2.0**64).astype(np.uint64)
        # floats carry 53 random bits; fill the 11 dead low bits, otherwise
        # the zero train surfaces at the top of the window near step 53
        u += rng.integers(0, 2**11, size=size, dtype=np.uint64)
        x = _u64_to_unit(u)
    k_idx = payload["k_idx"]
    frac = payload["frac"]
    G = len(k_idx)
    S = np.empty((size, G))
    specs = payload["specs"]          # list of (TestFunction, k_lo, weights)
    sig2 = payload["sigma2_steps"]    # per-step sigma^2, or None
    prefix = payload["prefix"]        # centering prefix for xi, or None
    scale = 1.0 / np.sqrt(n)
    I = np.zeros((size, len(specs)))
    R = np.zeros(size)
    gp = 0
    for k in range(n + 1):
        fx = f.fn(x)
        while gp < G and k_idx[gp] == k:
            S[:, gp] = R + frac[gp] * fx
            gp += 1
        if specs:
            xi = None
            for j, (A, k_lo, w) in enumerate(specs):
                if k_lo <= k < k_lo + len(w) and w[k - k_lo] != 0.0:
                    if xi is None:
                        xi = scale * (R - prefix[k])
                    I[:, j] += (w[k - k_lo] * 0.5 * sig2[k]) * A.d2(xi)
        if k < n:
            R += fx
            if all_zero:
                u = _doubling_states(u, words, k + 1)
                x = _u64_to_unit(u)
            else:
                x = apply_map_unchecked(float(entries[k + 1]), x)
    return b, S, I


def _run_blocks(payloads: list[dict], threads: int):
    if threads <= 1 or len(payloads) <= 1:
        return [_simulate_block(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_simulate_block, payloads))


def _sweep_ensemble(f: Observable, row: ParameterArrayRow, mu: InitialMeasure,
                    grid: np.ndarray, M: int, seed: int, tag: str,
                    threads: int = 1,
                    mart_specs: Sequence[MartingaleSpec] = (),
                    sigma2_steps: Optional[np.ndarray] = None,
                    xi_prefix: Optional[np.ndarray] = None):
    if f.config is None:
        raise DomainError("observable must carry a config to enter the sweep")
    if not mu.sampleable:
        raise DomainError("initial measure must be sampleable")
    n = row.n
    grid = np.asarray(grid, dtype=float)
    k_idx, frac = grid_steps(grid, n)
    all_zero = bool(np.all(row.entries == 0.0))
    specs = []
    for spec in mart_specs:
        k_lo, w = integral_weights(n, spec.r, spec.t)
        specs.append((spec.A, k_lo, w))
    if specs and (sigma2_steps is None or xi_prefix is None):
        raise DomainError("martingale specs need sigma2_steps and xi_prefix")
    payloads = []
    for b, lo in enumerate(range(0, M, BLOCK_PATHS)):
        payloads.append({
            "block": b, "lo": lo, "hi": min(lo + BLOCK_PATHS, M),
            "entries": row.entries, "seed": seed, "tag": tag, "mu": mu,
            "f_config": f.config, "k_idx": k_idx, "frac": frac,
            "all_zero": all_zero, "specs": specs,
            "sigma2_steps": sigma2_steps, "prefix": xi_prefix,
        })
    S = np.empty((M, len(grid)))
    I = np.empty((M, len(specs)))
    for b, S_b, I_b in _run_blocks(payloads, threads):
        lo = b * BLOCK_PATHS
        S[lo:lo + len(S_b)] = S_b
        I[lo:lo + len(I_b)] = I_b
    return S, I


def fluctuation_ensemble(f: Observable, row: ParameterArrayRow,
                         mu: InitialMeasure, nu: InitialMeasure, M: int,
                         grid, seed: int, *, m: int,
                         threads: int = 1,
                         mart_specs: Sequence[MartingaleSpec] = (),
                         sigma2_steps: Optional[np.ndarray] = None,
                         nu_data: Optional[CenteringData] = None,
                         tag: str = "fluct") -> PathEnsemble:
    """Centered, n**-1/2-scaled path ensemble.

    nu_data may carry a precomputed centering pass (one per (row, f, nu) is
    enough for any M); otherwise it is computed here at resolution m. The
    in-sweep martingale integrals use the same centering as the stored
    values, so they represent the ensemble's own fluctuation paths.
    """
    grid = np.asarray(grid, dtype=float)
    if nu_data is None:
        nu_data = centering_data(f, row, nu, m)
    if nu_data.n != row.n:
        raise DomainError("centering level does not match the row")
    S, I = _sweep_ensemble(
        f, row, mu, grid, M, seed, tag, threads=threads,
        mart_specs=mart_specs, sigma2_steps=sigma2_steps,
        xi_prefix=nu_data.prefix if mart_specs else None,
    )
    scale = 1.0 / np.sqrt(row.n)
    values = scale * (S - nu_data.curve(grid)[None, :])
    extras = {spec.name: I[:, j] for j, spec in enumerate(mart_specs)}
    return PathEnsemble(
        n=row.n, M=M, grid=grid, values=values, seed=seed,
        kind="fluctuation",
        centering={"measure": nu_data.measure_label, "mode": "operator"},
        row_id=row.row_id, extras=extras,
        meta={"observable": f.label, "initial": mu.label or mu.kind},
    )


def birkhoff_path(f: Observable, row: ParameterArrayRow, x0: float,
                  grid) -> np.ndarray:
    """Running-sum path S(x0, t) on the grid for a single start point.

    Float64 orbit; for statistics over constant all-zero rows use the
    ensemble path instead (see module docstring).
    """
    if not (0.0 <= x0 <= 1.0):
        raise DomainError("x0 outside [0, 1]")
    grid = np.asarray(grid, dtype=float)
    n = row.n
    k_idx, frac = grid_steps(grid, n)
    x = np.asarray([float(x0)])
    R = 0.0
    out = np.empty(len(grid))
    gp = 0
    for k in range(n + 1):
        fx = float(f.fn(x)[0])
        while gp < len(grid) and k_idx[gp] == k:
            out[gp] = R + frac[gp] * fx
            gp += 1
        if k < n:
            R += fx
            x = apply_map_unchecked(float(row.entries[k + 1]), x)
    return out


def raw_sum_ensemble(f: Observable, row: ParameterArrayRow, mu: InitialMeasure,
                     M: int, grid, seed: int, threads: int = 1,
                     tag: str = "raw") -> PathEnsemble:
    """Uncentered running-sum paths (used by the ergodic check)."""
    grid = np.asarray(grid, dtype=float)
    S, _ = _sweep_ensemble(f, row, mu, grid, M, seed, tag, threads=threads)
    return PathEnsemble(n=row.n, M=M, grid=grid, values=S, seed=seed,
                        kind="raw", row_id=row.row_id,
                        meta={"observable": f.label})


def ergodic_check(f: Observable, row: ParameterArrayRow, reference: np.ndarray,
                  mu: InitialMeasure, M: int, grid, seed: int,
                  threads: int = 1) -> dict:
    """Per-sample sup over the grid of |S(t)/n - reference(t)|.

    ``reference`` is the cumulative time integral of the frozen-map means
    of f along the curve, evaluated on the same grid (computed by the
    caller from invariant means; it does not depend on the paths).
    """
    grid = np.asarray(grid, dtype=float)
    if len(reference) != len(grid):
        raise DomainError("reference curve must live on the ensemble grid")
    ens = raw_sum_ensemble(f, row, mu, M, grid, seed, threads=threads,
                           tag="ergodic")
    dev = np.abs(ens.values / row.n - reference[None, :])
    sups = dev.max(axis=1)
    return {
        "n": row.n,
        "M": M,
        "sup_deviations": sups,
        "median": float(np.median(sups)),
        "max": float(np.max(sups)),
    }
