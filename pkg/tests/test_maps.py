import numpy as np
import pytest

from pmqs import maps
from pmqs.errors import DomainError


def test_right_branch_at_half():
    assert maps.apply_map(0.25, 0.5) == 0.0


def test_neutral_fixed_point():
    for a in (0.0, 0.3, 0.7):
        assert maps.apply_map(a, 0.0) == 0.0


def test_doubling_case():
    assert maps.apply_map(0.0, 0.3) == pytest.approx(0.6, abs=1e-15)


def test_left_branch_sup_is_one():
    x = np.nextafter(0.5, 0.0)
    assert maps.apply_map(0.5, x) == pytest.approx(1.0, abs=1e-14)
    # the closed-branch formula attains 1 exactly: (1/2)(1 + 2^a 2^-a) = 1
    assert maps.left_branch_value(0.5, 0.5) == pytest.approx(1.0, abs=1e-15)


def test_derivative_examples():
    assert maps.map_derivative(0.0, 0.3) == 2.0
    for a in (0.1, 0.5, 0.9):
        assert maps.map_derivative(a, 0.0) == 1.0
    # symbolic derivative of x + 2^a x^(1+a) at a=0.5, x=0.25
    expected = 1.0 + 2.0**0.5 * 1.5 * 0.25**0.5
    assert expected == pytest.approx(2.0606601717798212, abs=1e-12)
    assert maps.map_derivative(0.5, 0.25) == pytest.approx(expected, rel=1e-12)


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(3)
    for a in (0.1, 0.35, 0.6):
        x = rng.uniform(0.01, 0.49, size=64)
        h = 1e-7
        fd = (maps.left_branch_value(a, x + h) - maps.left_branch_value(a, x - h)) / (2 * h)
        assert np.allclose(maps.map_derivative(a, x), fd, rtol=1e-5)


def test_derivative_at_least_one():
    rng = np.random.default_rng(4)
    for a in (0.0, 0.2, 0.5, 0.9):
        x = rng.uniform(0.0, 1.0, size=512)
        d = maps.map_derivative(a, x)
        assert np.all(d >= 1.0)
    # equality only at the origin when a > 0
    d = maps.map_derivative(0.5, np.asarray([0.0, 1e-12, 0.1]))
    assert d[0] == 1.0 and np.all(d[1:] > 1.0)


def test_inverse_branch_examples():
    for a in (0.0, 0.3, 0.6):
        left, right = maps.inverse_branches(a, 0.0)
        assert left == 0.0
        _, right = maps.inverse_branches(a, 0.5)
        assert right == 0.75
    left, _ = maps.inverse_branches(0.0, 0.6)
    assert left == pytest.approx(0.3, abs=1e-15)
    left, _ = maps.inverse_branches(0.5, 0.7)
    assert abs(maps.apply_map(0.5, left) - 0.7) <= 1e-13


def test_inverse_round_trip_fuzz():
    rng = np.random.default_rng(11)
    for a in (0.0, 0.15, 0.4, 0.8):
        y = rng.uniform(0.0, 1.0, size=256)
        y[:2] = [0.0, 1.0]
        for yi in y:
            left, right = maps.inverse_branches(a, float(yi))
            assert abs(maps.apply_map(a, left) - yi) <= 1e-13
            assert abs(maps.apply_map(a, right) - yi) <= 1e-13
            assert 0.0 <= left < 0.5 or (yi == 0.0 and left == 0.0)
            assert 0.5 <= right <= 1.0


def test_range_preservation_grid_and_fuzz():
    rng = np.random.default_rng(5)
    xs = np.concatenate([np.linspace(0, 1, 2001), rng.uniform(0, 1, 2000)])
    for a in (0.0, 0.25, 0.5, 0.99):
        y = maps.apply_map(a, xs)
        assert np.all((y >= 0.0) & (y <= 1.0))


def test_monotone_branches():
    xs_left = np.linspace(0.0, 0.5, 1001)[:-1]
    xs_right = np.linspace(0.5, 1.0, 1001)
    for a in (0.0, 0.3, 0.7):
        assert np.all(np.diff(maps.apply_map(a, xs_left)) > 0)
        assert np.all(np.diff(maps.apply_map(a, xs_right)) > 0)


def test_domination_larger_alpha_smaller_image():
    # on the left branch a larger parameter gives a smaller image
    xs = np.linspace(1e-6, 0.5, 503)[:-1]
    for a, b in ((0.0, 0.2), (0.1, 0.45), (0.3, 0.49)):
        assert np.all(maps.apply_map(b, xs) <= maps.apply_map(a, xs) + 1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        maps.apply_map(0.2, 1.5)
    with pytest.raises(DomainError):
        maps.apply_map(1.0, 0.5)
    with pytest.raises(DomainError):
        maps.apply_map(-0.1, 0.5)
    with pytest.raises(DomainError):
        maps.inverse_branches(0.2, -0.2)


def test_one_is_fixed():
    assert maps.apply_map(0.3, 1.0) == 1.0


def test_iterate_sequential_constant_row_matches_autonomous():
    row = np.full(21, 0.3)
    traj = maps.iterate_sequential(row, 0.123, 20)
    x = 0.123
    for k in range(1, 21):
        x = maps.apply_map(0.3, x)
        assert traj.values[k] == x


def test_iterate_sequential_zero_start():
    row = np.full(11, 0.4)
    traj = maps.iterate_sequential(row, 0.0, 10)
    assert np.all(traj.values == 0.0)


def test_iterate_sequential_composition_consistency():
    rng = np.random.default_rng(9)
    row = rng.uniform(0.0, 0.45, size=33)
    traj = maps.iterate_sequential(row, 0.37, 32)
    for j in range(32):
        assert traj.values[j + 1] == maps.apply_map(float(row[j + 1]),
                                                    float(traj.values[j]))
    with pytest.raises(DomainError):
        maps.iterate_sequential(row, 0.5, 40)
