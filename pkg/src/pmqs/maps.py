"""Two-branch intermittent interval maps with a neutral fixed point at 0.

The family is parametrized by ``alpha`` in [0, 1):

    T(x) = x * (1 + 2**alpha * x**alpha)   on [0, 1/2)
    T(x) = 2*x - 1                         on [1/2, 1]

``alpha = 0`` is the angle-doubling map. The branch point 1/2 belongs to
the right branch (half-open convention). Powers are evaluated as
``exp(alpha * log x)`` with ``x = 0`` short-circuited so the neutral
fixed point never produces a NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError

# residual tolerance for the left inverse branch (absolute, in y)
LEFT_INVERSE_TOL = 1e-13
LEFT_INVERSE_MAX_ITER = 128


def validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"map parameter alpha={alpha} outside [0, 1)")
    return alpha


def _check_unit_interval(x, name: str = "x") -> None:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} outside [0, 1]")


def _pow(x: np.ndarray, alpha: float) -> np.ndarray:
    """x**alpha elementwise, with 0**alpha = 0 for alpha > 0."""
    if alpha == 0.0:
        return np.ones_like(x)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(alpha * np.log(x[pos]))
    return out


def left_branch_value(alpha: float, x) -> np.ndarray:
    """The left-branch formula x*(1 + 2**alpha * x**alpha), valid on [0, 1/2].

    Defined at x = 1/2 as well (value 1), which is the closure of the open
    left branch; useful for inverting the branch up to y = 1.
    """
    x = np.asarray(x, dtype=float)
    if alpha == 0.0:
        return 2.0 * x
    return x * (1.0 + 2.0**alpha * _pow(x, alpha))


def left_branch_derivative(alpha: float, x) -> np.ndarray:
    """Derivative 1 + 2**alpha*(1+alpha)*x**alpha of the left branch."""
    x = np.asarray(x, dtype=float)
    if alpha == 0.0:
        return np.full_like(x, 2.0)
    return 1.0 + 2.0**alpha * (1.0 + alpha) * _pow(x, alpha)


def apply_map(alpha: float, x):
    """Evaluate the map at x (scalar or array). x = 1/2 uses the right branch."""
    alpha = validate_alpha(alpha)
    scalar = np.isscalar(x)
    xa = np.asarray(x, dtype=float)
    _check_unit_interval(xa)
    out = apply_map_unchecked(alpha, xa)
    return float(out) if scalar else out


def apply_map_unchecked(alpha: float, x: np.ndarray) -> np.ndarray:
    """Vectorized map evaluation without domain validation (hot path)."""
    left = x < 0.5
    out = np.empty_like(x)
    xl = x[left]
    if alpha == 0.0:
        out[left] = 2.0 * xl
    else:
        out[left] = xl * (1.0 + 2.0**alpha * _pow(xl, alpha))
    out[~left] = 2.0 * x[~left] - 1.0
    # the left branch is bounded by 2x < 1; clip only guards roundoff
    return np.clip(out, 0.0, 1.0, out=out)


def map_derivative(alpha: float, x):
    """Branch derivative; the branch point 1/2 reports the right-branch value 2."""
    alpha = validate_alpha(alpha)
    scalar = np.isscalar(x)
    xa = np.asarray(x, dtype=float)
    _check_unit_interval(xa)
    out = np.where(xa < 0.5, left_branch_derivative(alpha, xa), 2.0)
    return float(out) if scalar else out


def left_inverse(
    alpha: float,
    y,
    x0: Optional[np.ndarray] = None,
    tol: float = LEFT_INVERSE_TOL,
    max_iter: int = LEFT_INVERSE_MAX_ITER,
) -> np.ndarray:
    """Invert the left branch: the unique x in [0, 1/2] with T_left(x) = y.

    Vectorized bracketed Newton (bisection fallback when the Newton step
    leaves the bracket). The branch derivative lies in [1, 3), so once
    bracketed the iteration is safe. ``x0`` warm-starts the solve, which
    the sequential Ulam driver uses when alpha changes slowly per step.

    Raises ConvergenceError if any residual exceeds ``tol`` after
    ``max_iter`` iterations; that signals a numerics bug, not bad input.
    """
    alpha = validate_alpha(alpha)
    y = np.asarray(y, dtype=float)
    if alpha == 0.0:
        return 0.5 * y
    lo = np.zeros_like(y)
    hi = np.full_like(y, 0.5)
    x = np.clip(x0 if x0 is not None else 0.5 * y, 0.0, 0.5)
    x = np.array(x, dtype=float, copy=True)
    resid = left_branch_value(alpha, x) - y
    for _ in range(max_iter):
        active = np.abs(resid) > tol
        if not np.any(active):
            break
        above = active & (resid > 0.0)
        below = active & (resid <= 0.0)
        hi[above] = x[above]
        lo[below] = x[below]
        step = resid / left_branch_derivative(alpha, x)
        xn = x - step
        mid = 0.5 * (lo + hi)
        use_bisect = (xn <= lo) | (xn >= hi)
        xn = np.where(use_bisect, mid, xn)
        x = np.where(active, xn, x)
        resid = left_branch_value(alpha, x) - y
    if np.any(np.abs(resid) > tol):
        worst = float(np.max(np.abs(resid)))
        raise ConvergenceError(
            f"left-branch inversion residual {worst:.3e} > {tol:.1e} "
            f"after {max_iter} iterations (alpha={alpha})"
        )
    return x


def inverse_branches(alpha: float, y: float) -> tuple[float, float]:
    """Both preimages of y: (left-branch root, affine right-branch preimage).

    The right preimage is (y+1)/2 exactly. The left preimage is clamped
    strictly below 1/2 so that ``apply_map`` evaluated at it always takes
    the left branch (relevant only at y = 1, where the open branch attains
    its supremum).
    """
    alpha = validate_alpha(alpha)
    if not (0.0 <= y <= 1.0):
        raise DomainError(f"y={y} outside [0, 1]")
    x_right = 0.5 * (y + 1.0)
    x_left = float(left_inverse(alpha, y))
    x_left = min(x_left, np.nextafter(0.5, 0.0))
    return x_left, x_right


@dataclass
class Trajectory:
    """An orbit under time-dependent maps, one value per step including x0."""

    x0: float
    values: np.ndarray
    schedule_row_id: Optional[str] = None

    def __len__(self) -> int:
        return len(self.values)


def iterate_sequential(row, x0: float, k: Optional[int] = None) -> Trajectory:
    """Orbit of length k+1 under the time-dependent maps of a schedule row.

    Step j -> j+1 applies the map with parameter ``row[j+1]``; entry 0 of
    the row is never applied (it indexes the state before any step). Accepts
    a ParameterArrayRow or any sequence of parameters.

    Note: this is the literal float64 orbit. For constant all-zero rows the
    doubling map drains mantissa bits, so orbits collapse onto the fixed
    point 0 after ~53 steps; statistically faithful sampling of that regime
    lives in the Monte Carlo engine, not here.
    """
    entries = np.asarray(getattr(row, "entries", row), dtype=float)
    if k is None:
        k = len(entries) - 1
    if k > len(entries) - 1:
        raise DomainError(f"k={k} exceeds row length {len(entries) - 1}")
    if not (0.0 <= x0 <= 1.0):
        raise DomainError(f"x0={x0} outside [0, 1]")
    values = np.empty(k + 1)
    values[0] = x0
    x = np.asarray([float(x0)])
    for j in range(k):
        x = apply_map_unchecked(float(entries[j + 1]), x)
        values[j + 1] = x[0]
    row_id = getattr(row, "row_id", None)
    return Trajectory(x0=x0, values=values, schedule_row_id=row_id)
