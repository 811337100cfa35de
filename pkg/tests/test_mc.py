import numpy as np
import pytest
from scipy import stats as spstats

from pmqs import mc
from pmqs import observables as obs
from pmqs.density import GridDensity
from pmqs.errors import DomainError
from pmqs.maps import iterate_sequential
from pmqs.schedule import ParameterCurve, equipartition

MU = mc.InitialMeasure.lebesgue()
GRID = mc.build_time_grid(32, [0.2, 0.4, 0.8])


def test_sample_initial_deterministic_and_uniform():
    M = 100_000
    x1 = mc.sample_initial(MU, M, 7)
    x2 = mc.sample_initial(MU, M, 7)
    assert np.array_equal(x1, x2)
    ks = spstats.kstest(x1, "uniform").statistic
    assert ks <= 1.95 / np.sqrt(M)


def test_sample_initial_prefix_stable_in_M():
    # block structure: enlarging M never changes earlier blocks
    a = mc.sample_initial(MU, mc.BLOCK_PATHS, 7)
    b = mc.sample_initial(MU, mc.BLOCK_PATHS + 100, 7)
    assert np.array_equal(a, b[:mc.BLOCK_PATHS])


def test_grid_density_sampling_matches_quadrature():
    m = 1024
    g = GridDensity.singular(m, 0.2)
    measure = mc.InitialMeasure.from_density(g)
    M = 50_000
    xs = mc.sample_initial(measure, M, 3)
    target = g.mean_of(g.midpoints())
    se = xs.std() / np.sqrt(M)
    assert abs(xs.mean() - target) <= 3 * se + 1e-4


def test_signed_pair_not_sampleable():
    g1 = GridDensity.uniform(64)
    g2 = GridDensity.singular(64, 0.2)
    nu = mc.InitialMeasure.from_pair(g1, g2)
    with pytest.raises(DomainError):
        mc.sample_initial(nu, 10, 1)
    assert nu.density_values(64) == pytest.approx(g1.values - g2.values)


def test_integral_weights_sum():
    for n, r, t in ((64, 0.2, 0.8), (100, 0.4, 0.5), (1000, 0.0, 1.0)):
        _, w = mc.integral_weights(n, r, t)
        assert np.sum(w) == pytest.approx(t - r, abs=1e-12)


def test_birkhoff_path_examples():
    f = obs.constant(1.0)
    curve = ParameterCurve.constant(0.25, beta_star=0.25)
    row = equipartition(curve, 64)
    grid = np.asarray([0.0, 0.25, 0.5, 1.0])
    path = mc.birkhoff_path(f, row, 0.3, grid)
    assert path[0] == 0.0
    assert np.allclose(path, 64 * grid)  # S(t) = n t for f = 1


def test_birkhoff_path_matches_orbit_sum():
    f = obs.identity()
    curve = ParameterCurve.constant(0.25, beta_star=0.25)
    row = equipartition(curve, 32)
    traj = iterate_sequential(row, 0.37)
    path = mc.birkhoff_path(f, row, 0.37, np.asarray([0.5, 1.0]))
    assert path[1] == pytest.approx(np.sum(traj.values[:32]), rel=1e-12)
    k, frac = 16, 0.0
    assert path[0] == pytest.approx(np.sum(traj.values[:16]), rel=1e-12)


def test_centering_constant_observable():
    f = obs.constant(2.0)
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 128)
    data = mc.centering_data(f, row, MU, 256)
    curve_vals = data.curve(GRID)
    assert np.allclose(curve_vals, 128 * GRID * 2.0, atol=1e-9)


def test_centering_invariance_doubling():
    f = obs.identity()
    curve = ParameterCurve.constant(0.0, beta_star=0.2)
    row = equipartition(curve, 64)
    data = mc.centering_data(f, row, MU, 512)
    assert np.allclose(data.means, 0.5, atol=1e-12)


def test_fluctuation_constant_observable_vanishes():
    f = obs.constant(1.0)
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 256)
    ens = mc.fluctuation_ensemble(f, row, MU, MU, 512, GRID, 5, m=256)
    assert np.max(np.abs(ens.values)) <= 1e-10
    assert np.all(ens.values[:, 0] == 0.0)


def test_fluctuation_mean_within_band():
    f = obs.identity()
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 512)
    M = 20_000
    ens = mc.fluctuation_ensemble(f, row, MU, MU, M, GRID, 11, m=1024)
    for t in (0.25, 0.5, 1.0):
        col = ens.at(t)
        assert abs(col.mean()) <= 3 * col.std() / np.sqrt(M)


def test_fluctuation_linearity():
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 128)
    a, b = -1.7, 0.4
    base = mc.fluctuation_ensemble(obs.identity(), row, MU, MU, 256, GRID, 9,
                                   m=256)
    scaled = mc.fluctuation_ensemble(obs.affine(b, a), row, MU, MU, 256, GRID,
                                     9, m=256)
    assert np.allclose(scaled.values, a * base.values, atol=1e-9)


def test_worker_count_bit_identical():
    f = obs.identity()
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 128)
    M = mc.BLOCK_PATHS + 512
    e1 = mc.fluctuation_ensemble(f, row, MU, MU, M, GRID, 21, m=256, threads=1)
    e2 = mc.fluctuation_ensemble(f, row, MU, MU, M, GRID, 21, m=256, threads=2)
    assert np.array_equal(e1.values, e2.values)


def test_doubling_kernel_second_moment():
    f = obs.identity()
    curve = ParameterCurve.constant(0.0, beta_star=0.25)
    n, M = 256, 20_000
    row = equipartition(curve, n)
    ens = mc.fluctuation_ensemble(f, row, MU, MU, M, GRID, 42, m=512)
    chi2 = ens.at(1.0) ** 2
    expected = 0.25 - 1.0 / (3 * n)
    se = chi2.std() / np.sqrt(M)
    assert abs(chi2.mean() - expected) <= 3 * se


def test_ergodic_check_constant_observable():
    f = obs.constant(1.0)
    curve = ParameterCurve.cosine(0.05, 0.25)
    row = equipartition(curve, 128)
    ref = GRID.copy()  # integral of mean 1
    res = mc.ergodic_check(f, row, ref, MU, 8, GRID, 3)
    assert res["max"] <= 1.0 / 128 + 1e-12


def test_ergodic_check_doubling_decreasing():
    f = obs.identity()
    curve = ParameterCurve.constant(0.0, beta_star=0.2)
    ref = 0.5 * GRID
    medians = []
    for n in (256, 1024):
        row = equipartition(curve, n)
        res = mc.ergodic_check(f, row, ref, MU, 32, GRID, 17)
        medians.append(res["median"])
    assert medians[1] < medians[0]


def test_ensemble_grid_lookup():
    f = obs.identity()
    curve = ParameterCurve.constant(0.1, beta_star=0.2)
    row = equipartition(curve, 64)
    ens = mc.fluctuation_ensemble(f, row, MU, MU, 16, GRID, 2, m=128)
    with pytest.raises(DomainError):
        ens.at(0.123456)
