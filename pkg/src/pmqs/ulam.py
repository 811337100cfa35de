"""Ulam discretization of the transfer operators.

The operator for parameter alpha is discretized on m uniform bins as the
row-stochastic matrix P[i, j] = |B_i ∩ T^{-1}(B_j)| / |B_i|. Entries come
from exact branch-preimage intervals of the bin edges (no sampling): each
target bin's preimage under each branch is an interval whose endpoints are
inverse-branch evaluations, and those intervals are intersected with the
source bins. Densities of bin averages transform as h -> P^T h.

For the doubling map (alpha = 0) with dyadic m the construction is exact,
so the uniform density is an exact fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .density import GridDensity
from .errors import ConvergenceError, DomainError
from .maps import left_inverse
from .schedule import ParameterArrayRow

SRB_TOL = 1e-12
SRB_MAX_ITER = 400_000


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _left_preimage_grid(alpha: float, m: int,
                        warm: Optional[np.ndarray] = None) -> np.ndarray:
    """Left-branch preimages of the bin edges j/m, j = 0..m.

    Endpoints are pinned to 0 and 1/2 so the two branch preimage systems
    tile [0, 1] exactly and row sums stay at 1 up to roundoff.
    """
    y = np.arange(m + 1) / m
    a = left_inverse(alpha, y, x0=warm)
    a[0] = 0.0
    a[-1] = 0.5
    return a


def _overlap_entries(points: np.ndarray, m: int):
    """COO entries from a monotone partition {points} against uniform bins.

    points has length m+1; interval j = [points[j], points[j+1]) is the
    preimage of target bin j. Yields (src_bin, tgt_bin, fraction-of-src-bin)
    triples with positive weight.
    """
    lo = points[:-1]
    hi = points[1:]
    cols = np.arange(m)
    i0 = np.clip(np.floor(lo * m).astype(np.int64), 0, m - 1)
    rows_all = []
    cols_all = []
    w_all = []
    d = 0
    while True:
        rows = i0 + d
        valid = rows < m
        if not np.any(valid):
            break
        seg = np.minimum(hi, (rows + 1) / m) - np.maximum(lo, rows / m)
        seg = np.where(valid, seg, 0.0)
        pos = seg > 0.0
        if not np.any(pos):
            break
        rows_all.append(rows[pos])
        cols_all.append(cols[pos])
        w_all.append(seg[pos] * m)
        d += 1
    return (np.concatenate(rows_all), np.concatenate(cols_all),
            np.concatenate(w_all))


@dataclass
class UlamOperator:
    """Row-stochastic Ulam matrix for a single parameter value."""

    alpha: float
    m: int
    matrix: sparse.csr_matrix

    def __post_init__(self):
        self._transpose = self.matrix.T.tocsr()

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Push bin-average vector forward one step."""
        return self._transpose @ values

    def apply_density(self, h: GridDensity) -> GridDensity:
        if h.m != self.m:
            raise DomainError(f"density has {h.m} bins, operator {self.m}")
        return GridDensity(self.m, self.apply(h.values))

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1).A1 - 1.0)))


def build_ulam(alpha: float, m: int,
               warm_left: Optional[np.ndarray] = None) -> UlamOperator:
    """Assemble the Ulam matrix at parameter alpha on m bins (m >= 2)."""
    if m < 2:
        raise DomainError(f"need at least 2 bins, got m={m}")
    a = _left_preimage_grid(alpha, m, warm=warm_left)
    b = 0.5 * (np.arange(m + 1) / m + 1.0)
    rows_l, cols_l, w_l = _overlap_entries(a, m)
    rows_r, cols_r, w_r = _overlap_entries(b, m)
    mat = sparse.coo_matrix(
        (np.concatenate([w_l, w_r]),
         (np.concatenate([rows_l, rows_r]), np.concatenate([cols_l, cols_r]))),
        shape=(m, m),
    ).tocsr()
    mat.sum_duplicates()
    return UlamOperator(alpha=alpha, m=m, matrix=mat)


class SequentialTransfer:
    """Step-by-step pushforward driver for a schedule row.

    Re-solving the left-branch preimage grid from scratch at every step
    costs ~45 bisection sweeps; along a row the parameter moves by O(1/n)
    per step, so warm-started Newton needs only a few. The driver keeps
    the previous preimage grid and applies the operator directly from the
    overlap entries via bincount, skipping sparse-matrix assembly.

    Constant parameter runs reuse a single prebuilt operator.
    """

    def __init__(self, m: int):
        self.m = m
        self._warm: Optional[np.ndarray] = None
        self._alpha: Optional[float] = None
        self._entries = None

    def _refresh(self, alpha: float) -> None:
        if self._alpha == alpha and self._entries is not None:
            return
        a = _left_preimage_grid(alpha, self.m, warm=self._warm)
        self._warm = a
        b = 0.5 * (np.arange(self.m + 1) / self.m + 1.0)
        rows_l, cols_l, w_l = _overlap_entries(a, self.m)
        rows_r, cols_r, w_r = _overlap_entries(b, self.m)
        self._entries = (
            np.concatenate([rows_l, rows_r]),
            np.concatenate([cols_l, cols_r]),
            np.concatenate([w_l, w_r]),
        )
        self._alpha = alpha

    def step(self, alpha: float, values_list: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Advance each bin-average vector one step under parameter alpha."""
        self._refresh(alpha)
        rows, cols, w = self._entries
        return [
            np.bincount(cols, weights=w * v[rows], minlength=self.m)
            for v in values_list
        ]


def pushforward_sequence(row: ParameterArrayRow, h0: GridDensity,
                         k: int) -> GridDensity:
    """Density of the k-step pushforward under the row's maps (step j uses
    entry j, j = 1..k)."""
    if k < 0 or k > row.n:
        raise DomainError(f"k={k} outside [0, n={row.n}]")
    if k == 0:
        return GridDensity(h0.m, h0.values.copy())
    drv = SequentialTransfer(h0.m)
    v = h0.values.copy()
    for j in range(1, k + 1):
        (v,) = drv.step(float(row.entries[j]), [v])
    return GridDensity(h0.m, v)


# ---------------------------------------------------------------------------
# invariant densities
# ---------------------------------------------------------------------------

def srb_density(alpha: float, m: int, tol: float = SRB_TOL,
                max_iter: int = SRB_MAX_ITER,
                h0: Optional[GridDensity] = None,
                operator: Optional[UlamOperator] = None) -> GridDensity:
    """Fixed density of the Ulam operator by power iteration.

    Iterates h -> P^T h from the uniform density (or a warm start) until
    the successive L1 change falls below tol, then normalizes to integral
    one. The fixed point then satisfies ||P^T h - h||_1 <= 2 tol.
    """
    op = operator if operator is not None else build_ulam(alpha, m)
    v = (h0.values.copy() if h0 is not None else np.ones(m))
    for _ in range(max_iter):
        nxt = op.apply(v)
        change = float(np.abs(nxt - v).mean())
        v = nxt
        if change < tol:
            total = v.mean()
            return GridDensity(m, v / total)
    raise ConvergenceError(
        f"power iteration for alpha={alpha}, m={m} still changing by "
        f"{change:.3e} > {tol:.1e} after {max_iter} iterations"
    )


class OperatorCache:
    """Memoizes Ulam matrices and invariant densities at one resolution.

    Invariant-density requests warm-start from the nearest cached
    parameter, which makes sweeping a continuous curve cheap.
    """

    def __init__(self, m: int, tol: float = SRB_TOL):
        self.m = m
        self.tol = tol
        self._ops: dict[float, UlamOperator] = {}
        self._srb: dict[float, GridDensity] = {}

    def operator(self, alpha: float) -> UlamOperator:
        alpha = float(alpha)
        if alpha not in self._ops:
            self._ops[alpha] = build_ulam(alpha, self.m)
        return self._ops[alpha]

    def srb(self, alpha: float) -> GridDensity:
        alpha = float(alpha)
        if alpha not in self._srb:
            warm = None
            if self._srb:
                nearest = min(self._srb, key=lambda a: abs(a - alpha))
                warm = self._srb[nearest]
            self._srb[alpha] = srb_density(
                alpha, self.m, tol=self.tol, h0=warm,
                operator=self.operator(alpha),
            )
        return self._srb[alpha]


# ---------------------------------------------------------------------------
# decay experiments
# ---------------------------------------------------------------------------

def memory_loss_curve(f: GridDensity, g: GridDensity, row: ParameterArrayRow,
                      N: int) -> np.ndarray:
    """L1 distances of the pushforwards of an equal-mass pair, n = 0..N."""
    if f.m != g.m:
        raise DomainError("densities must share the bin count")
    if abs(f.integral() - g.integral()) > 1e-10:
        raise DomainError("memory loss requires equal integrals")
    if N > row.n:
        raise DomainError(f"N={N} exceeds row level {row.n}")
    v = f.values - g.values
    out = np.empty(N + 1)
    out[0] = np.abs(v).mean()
    drv = SequentialTransfer(f.m)
    for nstep in range(1, N + 1):
        (v,) = drv.step(float(row.entries[nstep]), [v])
        out[nstep] = np.abs(v).mean()
    return out


def perturbation_distances(alpha: float, beta: float, h: GridDensity,
                           tol: float = SRB_TOL) -> tuple[float, float]:
    """(operator distance, invariant-density distance) for alpha < beta.

    d_op  = ||(L_alpha - L_beta) h||_1 on h's grid,
    d_srb = ||h_alpha - h_beta||_1 at the same resolution.
    """
    if not (0.0 <= alpha <= beta < 0.5):
        raise DomainError("need 0 <= alpha <= beta < 1/2")
    if alpha == beta:
        return 0.0, 0.0
    m = h.m
    op_a = build_ulam(alpha, m)
    op_b = build_ulam(beta, m)
    d_op = float(np.abs(op_a.apply(h.values) - op_b.apply(h.values)).mean())
    srb_a = srb_density(alpha, m, tol=tol, operator=op_a)
    srb_b = srb_density(beta, m, tol=tol, operator=op_b, h0=srb_a)
    return d_op, srb_a.l1_distance(srb_b)


def perturbation_envelope(gap, beta_star: float, exponent: str = "third"):
    """Modulus-of-continuity envelope for invariant-density distances:
    gap**(c*(1-beta_star)**2) * |log gap|**(1/beta_star), with c = 1/3
    ("third", the statement form) or 1/4 ("quarter", the derived form)."""
    c = {"third": 1.0 / 3.0, "quarter": 0.25}.get(exponent)
    if c is None:
        raise DomainError(f"unknown perturbation exponent {exponent!r}")
    gap = np.asarray(gap, dtype=float)
    out = gap ** (c * (1.0 - beta_star) ** 2) * np.abs(np.log(gap)) ** (1.0 / beta_star)
    return float(out) if out.ndim == 0 else out


def leftmost_preimage_lengths(alpha: float, ns) -> np.ndarray:
    """Lengths of the n-fold leftmost-branch preimage of (0, 1) for each n.

    One inverse-branch chain from 1 covers every requested depth, so
    evaluating a whole ladder costs max(ns) solves instead of sum(ns).
    """
    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns < 0):
        raise DomainError("n must be >= 0")
    wanted = {int(n) for n in ns}
    out = {}
    x = np.asarray([1.0])
    if 0 in wanted:
        out[0] = 1.0
    for depth in range(1, int(ns.max(initial=0)) + 1):
        x = left_inverse(alpha, x, x0=x)
        if depth in wanted:
            out[depth] = float(x[0])
    return np.asarray([out[int(n)] for n in ns])


def leftmost_preimage_length(alpha: float, n: int) -> float:
    """Length of the n-fold leftmost-branch preimage of (0, 1).

    For alpha = 0 the value is exactly 2**-n; for alpha > 0 it decays
    like n**(-1/alpha)."""
    return float(leftmost_preimage_lengths(alpha, [n])[0])


def decay_envelope(n, beta_star: float):
    """Polynomial memory-loss envelope: 1 for n <= 1, else
    n**(-1/beta_star + 1) * (log n)**(1/beta_star) with the natural log."""
    if not (0.0 < beta_star < 1.0):
        raise DomainError(f"beta_star={beta_star} outside (0, 1)")
    scalar = np.isscalar(n)
    narr = np.asarray(n, dtype=float)
    if np.any(narr < 0):
        raise DomainError("n must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = narr ** (-1.0 / beta_star + 1.0) * np.log(narr) ** (1.0 / beta_star)
    out = np.where(narr <= 1.0, 1.0, val)
    return float(out) if scalar else out


def envelope_tail_sum(K: int, beta_star: float, rel_tol: float = 1e-12) -> float:
    """Sum of the decay envelope over n > K, by direct summation.

    The exponent -1/beta_star + 1 is below -1 for beta_star < 1/2, so the
    series converges; summation stops once a whole chunk contributes less
    than rel_tol of the running total.
    """
    total = 0.0
    start = K + 1
    chunk = 4096
    while True:
        ns = np.arange(start, start + chunk, dtype=float)
        inc = float(np.sum(decay_envelope(ns, beta_star)))
        total += inc
        start += chunk
        if inc <= rel_tol * max(total, 1e-300) or start > 10_000_000:
            break
        chunk = min(chunk * 2, 1_048_576)
    return total
