import numpy as np
import pytest

from pmqs.density import GridDensity, cone_check
from pmqs.errors import DomainError


def test_uniform_is_probability():
    h = GridDensity.uniform(64)
    assert h.integral() == 1.0
    assert h.is_probability()


def test_singular_preset_integral_and_cone():
    for beta in (0.0, 0.2, 0.25, 0.4):
        g = GridDensity.singular(1024, beta)
        assert g.integral() == pytest.approx(1.0, abs=1e-12)
        rep = cone_check(g, max(beta, 0.05))
        assert rep.passed, rep.as_dict()


def test_constant_density_in_every_cone():
    h = GridDensity.uniform(256)
    for alpha in np.linspace(0.0, 0.95, 11):
        assert cone_check(h, float(alpha)).passed


def test_cone_check_flags_increasing_density():
    m = 128
    vals = np.linspace(0.5, 1.5, m)
    rep = cone_check(GridDensity(m, vals), 0.2)
    assert rep.decreasing_violation > 1e-3
    assert not rep.passed


def test_cone_check_flags_pointwise_violation():
    # a x**-0.8 profile is steeper than any alpha=0.1 cone member allows
    g = GridDensity.singular(128, 0.8)
    rep = cone_check(g, 0.1)
    assert rep.pointwise_bound_margin < 0.0
    assert not rep.passed


def test_l1_and_sub():
    f = GridDensity.uniform(32)
    g = GridDensity.singular(32, 0.3)
    d = f - g
    assert d.integral() == pytest.approx(0.0, abs=1e-12)
    assert f.l1_distance(g) == pytest.approx(d.l1_norm())


def test_from_function_averages():
    h = GridDensity.from_function(256, lambda x: 2.0 * x)
    assert h.integral() == pytest.approx(1.0, abs=1e-6)
    assert h.values[0] < h.values[-1]


def test_mismatched_bins_raise():
    with pytest.raises(DomainError):
        GridDensity.uniform(16).l1_distance(GridDensity.uniform(32))


def test_mean_of_midpoint_quadrature():
    h = GridDensity.uniform(512)
    mids = h.midpoints()
    assert h.mean_of(mids) == pytest.approx(0.5, abs=1e-12)
