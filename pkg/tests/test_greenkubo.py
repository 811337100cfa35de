import warnings

import numpy as np
import pytest

from pmqs import observables as obs
from pmqs.greenkubo import (autocovariance, autocovariance_sequence,
                            green_kubo_detail, green_kubo_sigma2,
                            invariant_mean, sigma_curve)
from pmqs.schedule import ParameterCurve
from pmqs.ulam import OperatorCache, decay_envelope


def exact_doubling_autocov(k: int) -> float:
    """Independent oracle: E[(x-1/2)(T^k x - 1/2)] for the doubling map.

    On each dyadic piece [i 2^-k, (i+1) 2^-k) the integrand is a quadratic
    polynomial, so Simpson's rule per piece is exact.
    """
    if k == 0:
        pieces = [(0.0, 1.0)]
    else:
        edges = np.arange(2**k + 1) / 2**k
        pieces = list(zip(edges[:-1], edges[1:]))
    total = 0.0
    for a, b in pieces:
        def f(x):
            y = (2**k * x) % 1.0
            return (x - 0.5) * (y - 0.5)
        mid = 0.5 * (a + b)
        # evaluate strictly inside the piece to dodge the mod-1 seam
        h = b - a
        fa = f(a + 1e-12 * h)
        fb = f(b - 1e-12 * h)
        total += h / 6.0 * (fa + 4.0 * f(mid) + fb)
    return total


@pytest.fixture(scope="module")
def cache():
    return OperatorCache(2**12)


def test_doubling_autocovariance_oracle():
    for k in range(8):
        assert exact_doubling_autocov(k) == pytest.approx(2.0**-k / 12.0,
                                                          abs=1e-9)


def test_invariant_mean(cache):
    one = obs.constant(1.0)
    assert invariant_mean(one, 0.2, cache) == pytest.approx(1.0, abs=1e-10)
    assert invariant_mean(obs.identity(), 0.0, cache) == pytest.approx(0.5, abs=1e-12)


def test_invariant_mean_refinement_stable():
    # refinement changes shrink like m**(alpha-1); at production-adjacent
    # resolutions the doubling step moves the value by well under 1e-4
    f = obs.identity()
    v1 = invariant_mean(f, 0.25, OperatorCache(2**12))
    v2 = invariant_mean(f, 0.25, OperatorCache(2**13))
    assert abs(v1 - v2) <= 1e-4


def test_autocovariance_examples(cache):
    f = obs.identity()
    c0 = autocovariance(f, 0.3, 0, cache)
    assert c0 >= 0.0
    covs = autocovariance_sequence(f, 0.0, 8, cache)
    for k in range(8):
        assert covs[k] == pytest.approx(2.0**-k / 12.0, abs=2e-6)
        assert covs[k] == pytest.approx(exact_doubling_autocov(k), abs=2e-6)


def test_autocovariance_envelope_fit(cache):
    f = obs.identity()
    K = 120
    covs = autocovariance_sequence(f, 0.25, K, cache)
    env = decay_envelope(np.arange(K + 1).astype(float), 0.25)
    ratios = np.abs(covs[2:]) / env[2:]
    c_train = np.max(ratios[:60])
    assert np.max(ratios[60:]) <= c_train


def test_green_kubo_anchor(cache):
    f = obs.identity()
    val = green_kubo_sigma2(f, 0.0, 400, cache)
    assert val == pytest.approx(0.25, abs=1e-3)
    zero = green_kubo_sigma2(obs.constant(3.0), 0.0, 50, cache)
    assert zero == 0.0


def test_green_kubo_coboundary(cache):
    cob = obs.coboundary(obs.sine(1), 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val = green_kubo_sigma2(cob, 0.0, 400, cache)
    assert abs(val) <= 1e-3


def test_coboundary_birkhoff_variance_shrinks(cache):
    # independent route: Var(S_j / sqrt(j)) should decay like 1/j for a
    # coboundary, computed from the lag sums directly
    cob = obs.coboundary(obs.sine(1), 0.0)
    covs = autocovariance_sequence(cob, 0.0, 128, cache)

    def var_norm(j):
        ks = np.arange(1, j)
        return covs[0] + 2.0 * np.sum((1 - ks / j) * covs[ks])

    v16, v64 = var_norm(16), var_norm(64)
    assert v64 <= v16 / 2.5
    assert v64 <= 4.0 * 1.0 / 64 * 4  # bounded by C/j with C ~ 4 sup|g|^2


def test_scaling_and_shift(cache):
    f = obs.identity()
    g = obs.affine(0.7, 3.0)  # 3x + 0.7
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v1 = green_kubo_sigma2(f, 0.2, 60, cache)
        v2 = green_kubo_sigma2(g, 0.2, 60, cache)
    assert v2 == pytest.approx(9.0 * v1, rel=1e-10)


def test_tail_monotone_in_truncation(cache):
    f = obs.identity()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tails = [green_kubo_detail(f, 0.25, K, cache).tail_estimate
                 for K in (50, 100, 200)]
    assert tails[0] >= tails[1] >= tails[2] > 0.0


def test_sigma_curve_constant_and_pointwise(cache):
    f = obs.identity()
    curve = ParameterCurve.constant(0.2, beta_star=0.25)
    grid = np.linspace(0, 1, 9)
    vc = sigma_curve(f, curve, grid, 80, cache)
    assert np.all(vc.values == vc.values[0])
    direct = green_kubo_sigma2(f, 0.2, 80, cache, beta_star=0.2)
    assert vc.values[0] == pytest.approx(direct, rel=1e-12)


def test_sigma_curve_linear_modulus_reported():
    f = obs.identity()
    cache_small = OperatorCache(2**10)
    curve = ParameterCurve.linear(0.05, 0.45, beta_star=0.45)
    grid = np.linspace(0, 1, 6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vc = sigma_curve(f, curve, grid, 60, cache_small)
    assert np.isfinite(vc.modulus_quarter)
    assert vc.modulus_quarter > 0.0
    assert np.all(vc.values >= 0.0)
