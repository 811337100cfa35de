import numpy as np
import pytest

from pmqs.density import GridDensity, cone_check
from pmqs.errors import DomainError
from pmqs.schedule import ParameterCurve, equipartition
from pmqs import ulam


def test_row_sums_stochastic():
    rng = np.random.default_rng(2)
    for a in (0.0, 0.17, 0.45, 0.8):
        for m in (2, 7, 64, 333):
            op = ulam.build_ulam(a, m)
            assert op.row_sum_error() <= 1e-12
            assert op.matrix.min() >= 0.0


def test_doubling_dyadic_exact():
    for j in (4, 8, 12):
        m = 2**j
        op = ulam.build_ulam(0.0, m)
        u = np.ones(m)
        assert np.array_equal(op.apply(u), u)


def test_mass_preservation_and_contraction():
    rng = np.random.default_rng(8)
    op = ulam.build_ulam(0.3, 512)
    h = rng.random(512)
    out = op.apply(h)
    assert out.mean() == pytest.approx(h.mean(), abs=1e-12)
    v = rng.standard_normal(512)
    assert np.abs(op.apply(v)).mean() <= np.abs(v).mean() + 1e-12


def test_srb_fixed_point_and_cone():
    m = 2**12
    tol = 1e-12
    op = ulam.build_ulam(0.25, m)
    h = ulam.srb_density(0.25, m, tol=tol, operator=op)
    assert h.integral() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(op.apply(h.values) - h.values).mean() <= 2 * tol
    assert cone_check(h, 0.25).passed


def test_srb_doubling_uniform_small():
    h = ulam.srb_density(0.0, 2**10)
    assert h.l1_distance(GridDensity.uniform(2**10)) <= 1e-12


def test_srb_refinement_cauchy():
    # The refinement sequence is Cauchy with rate m**(alpha-1): the L1
    # discretization error is dominated by the first bins, where the
    # density has its x**-alpha singularity. (Computed rate ~ 2**0.75 per
    # doubling at alpha = 0.25; asserting the safe side 2**0.6.)
    alpha = 0.25
    ds = []
    for m in (2**9, 2**10, 2**11):
        h = ulam.srb_density(alpha, m)
        h2 = ulam.srb_density(alpha, 2 * m)
        coarse_up = np.repeat(h.values, 2)
        ds.append(np.abs(coarse_up - h2.values).mean())
    assert ds[0] > ds[1] > ds[2]
    assert ds[1] <= ds[0] / 2**0.6
    assert ds[2] <= ds[1] / 2**0.6
    C = ds[0] * (2**9) ** (1 - alpha) * 1.2
    assert ds[2] <= C * (2**11) ** (alpha - 1)


def test_pushforward_identity_and_invariance():
    m = 256
    curve = ParameterCurve.constant(0.0, beta_star=0.2)
    row = equipartition(curve, 32)
    h = GridDensity.uniform(m)
    out0 = ulam.pushforward_sequence(row, h, 0)
    assert np.array_equal(out0.values, h.values)
    out = ulam.pushforward_sequence(row, h, 32)
    assert out.l1_distance(h) == 0.0


def test_pushforward_approaches_invariant_density():
    m = 2**10
    curve = ParameterCurve.cosine(0.05, 0.25)
    r = 0.5
    dists = []
    for n in (64, 128, 256):
        row = equipartition(curve, n)
        out = ulam.pushforward_sequence(row, GridDensity.uniform(m),
                                        int(r * n))
        target = ulam.srb_density(float(curve(r)), m)
        dists.append(out.l1_distance(target))
    assert dists[2] < dists[0]


def test_memory_loss_zero_for_equal_pair():
    m = 256
    row = equipartition(ParameterCurve.constant(0.25, beta_star=0.25), 16)
    f = GridDensity.singular(m, 0.25)
    d = ulam.memory_loss_curve(f, f, row, 16)
    assert np.all(d == 0.0)


def test_memory_loss_requires_equal_mass():
    m = 64
    row = equipartition(ParameterCurve.constant(0.2), 8)
    f = GridDensity.uniform(m)
    g = GridDensity(m, 1.1 * np.ones(m))
    with pytest.raises(DomainError):
        ulam.memory_loss_curve(f, g, row, 8)


def test_memory_loss_monotone_and_envelope():
    m = 2**11
    beta = 0.25
    N = 128
    row = equipartition(ParameterCurve.constant(beta, beta_star=beta), N)
    d = ulam.memory_loss_curve(GridDensity.uniform(m),
                               GridDensity.singular(m, beta), row, N)
    assert np.all(np.diff(d) <= 1e-12)
    ns = np.arange(16, N + 1)
    slope = np.polyfit(np.log(ns), np.log(d[16:]), 1)[0]
    assert slope <= -2.5
    env = ulam.decay_envelope(np.arange(N + 1).astype(float), beta)
    ratios = d[2:] / env[2:]
    assert np.max(ratios[20:]) <= np.max(ratios[:20])


def test_perturbation_examples():
    m = 2**11
    h = GridDensity.singular(m, 0.1)
    d_op, d_srb = ulam.perturbation_distances(0.1, 0.1, h)
    assert d_op == 0.0 and d_srb == 0.0
    ops, srbs = [], []
    for b in (0.3, 0.2, 0.15, 0.12, 0.11):
        d_op, d_srb = ulam.perturbation_distances(0.1, b, h)
        ops.append(d_op)
        srbs.append(d_srb)
    assert all(np.diff(ops) < 0)
    assert all(np.diff(srbs) < 0)


def test_preimage_lengths():
    for n in (1, 10, 40):
        assert ulam.leftmost_preimage_length(0.0, n) == 2.0**-n
    ns = np.unique(np.round(np.geomspace(10, 1000, 20)).astype(int))
    for a in (0.25, 0.5):
        ls = [ulam.leftmost_preimage_length(a, int(n)) for n in ns]
        assert np.all(np.diff(ls) < 0)
        slope = np.polyfit(np.log(ns), np.log(ls), 1)[0]
        assert abs(slope + 1.0 / a) <= 0.15


def test_decay_envelope_values():
    assert ulam.decay_envelope(0, 0.3) == 1.0
    assert ulam.decay_envelope(1, 0.3) == 1.0
    # n=2, beta=0.5: 2^(-1) * (ln 2)^2
    assert ulam.decay_envelope(2, 0.5) == pytest.approx(0.5 * np.log(2.0)**2,
                                                        rel=1e-12)
    assert ulam.decay_envelope(2, 0.5) == pytest.approx(0.24023, abs=5e-6)


def test_envelope_tail_summable_below_half():
    t1 = ulam.envelope_tail_sum(100, 0.25)
    t2 = ulam.envelope_tail_sum(200, 0.25)
    t3 = ulam.envelope_tail_sum(400, 0.25)
    assert t1 > t2 > t3 > 0.0
    # partial sums Cauchy: tails vanish
    assert t3 / t1 < 0.5


def test_perturbation_envelope_forms():
    third = ulam.perturbation_envelope(0.1, 0.3, "third")
    quarter = ulam.perturbation_envelope(0.1, 0.3, "quarter")
    # smaller exponent -> larger envelope for gaps below one
    assert third < quarter
    with pytest.raises(DomainError):
        ulam.perturbation_envelope(0.1, 0.3, "fifth")
