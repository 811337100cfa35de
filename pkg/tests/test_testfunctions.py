import numpy as np
import pytest

from pmqs import testfunctions as tf


def _fd(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2 * h)


@pytest.mark.parametrize("A", [
    tf.smooth_bump(0.0, 1.0),
    tf.smooth_bump(0.3, 0.7),
    tf.quadratic_with_cutoff(2.0),
    tf.polynomial_with_cutoff([1.0, -0.5, 0.2], center=0.1, halfwidth=3.0),
])
def test_derivatives_match_finite_differences(A):
    lo, hi = A.support()
    xs = np.linspace(lo + 1e-3, hi - 1e-3, 101)
    for order in (1, 2, 3):
        fd = _fd(lambda x, o=order - 1: A.derivative(x, o), xs)
        exact = A.derivative(xs, order)
        scale = np.max(np.abs(exact)) + 1.0
        assert np.max(np.abs(fd - exact)) / scale < 1e-4, order


def test_compact_support():
    A = tf.smooth_bump(0.0, 1.0)
    xs = np.asarray([-2.0, -1.0, 1.0, 5.0])
    for order in range(4):
        assert np.all(A.derivative(xs, order) == 0.0)
    assert A(0.0) == pytest.approx(1.0)


def test_identity_and_constant():
    I = tf.identity_function()
    xs = np.linspace(-2, 2, 9)
    assert np.array_equal(I(xs), xs)
    assert np.all(I.d2(xs) == 0.0)
    C = tf.constant_function(2.5)
    assert np.all(C(xs) == 2.5)
    assert np.all(C.d1(xs) == 0.0)


def test_quadratic_cutoff_behaves_near_origin():
    A = tf.quadratic_with_cutoff(8.0)
    xs = np.linspace(-0.5, 0.5, 21)
    assert np.allclose(A(xs), xs**2, rtol=0.02, atol=1e-4)


def test_declared_bounds_hold():
    A = tf.smooth_bump(0.0, 1.5)
    b = A.bounds()
    rng = np.random.default_rng(12)
    xs = rng.uniform(-1.5, 1.5, 4096)
    for k in range(4):
        assert np.max(np.abs(A.derivative(xs, k))) <= b[f"sup_d{k}"] * (1 + 1e-6)


def test_pickles_cleanly():
    import pickle

    A = tf.smooth_bump(0.2, 0.8)
    B = pickle.loads(pickle.dumps(A))
    xs = np.linspace(-1, 1, 33)
    assert np.array_equal(A.d2(xs), B.d2(xs))
