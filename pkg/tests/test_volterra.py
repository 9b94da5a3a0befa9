import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jcmaster.errors import ConvergenceError
from jcmaster.volterra import convolve, cumulative_integral, gregory_weights, richardson_vide, trapezoid_vide


@given(st.integers(1, 200))
def test_gregory_weights_integrate_constants(n):
    assert gregory_weights(n).sum() == pytest.approx(n, rel=1e-14)


@given(st.integers(5, 200))
def test_gregory_weights_integrate_cubics(n):
    x = np.arange(n + 1.0)
    assert np.dot(gregory_weights(n), x**3) == pytest.approx(n**4 / 4, rel=1e-12)


def test_cumulative_integral_of_cosine():
    t = np.linspace(0, 3, 301)
    err = np.abs(cumulative_integral(np.cos(t), t[1]) - np.sin(t))
    # the first interval only has the two-point trapezoid
    assert err[1] < t[1] ** 3 / 10
    assert np.max(err[2:]) < 1e-9


def test_convolve_known_pair():
    # (1 * sin)(t) = 1 - cos t
    t = np.linspace(0, 4, 401)
    out = convolve(np.ones_like(t), np.sin(t), t[1])
    assert np.max(np.abs(out - (1 - np.cos(t)))) < 1e-9


def test_zero_kernel_is_constant():
    y, dy = trapezoid_vide(np.zeros((11, 2, 2)), np.array([0.3, -1.0]), 0.1)
    assert np.allclose(y, [0.3, -1.0]) and np.allclose(dy, 0)


def test_constant_kernel_gives_cosine():
    # y' = -int_0^t y  ->  y = cos t
    m, t_max = 256, 6.0
    h = t_max / (4 * m)
    y, dy, err = richardson_vide(-np.ones((4 * m + 1, 1, 1)), np.array([1.0]), h, tol=1e-8)
    t = np.linspace(0, t_max, m + 1)
    assert np.max(np.abs(y[:, 0] - np.cos(t))) < 1e-10
    assert np.max(np.abs(dy[:, 0] + np.sin(t))) < 1e-10
    assert err < 1e-8


def test_extrapolation_order():
    # error of the extrapolated solution drops ~64x per halving
    errs = []
    for m in (16, 32, 64):
        h = 6.0 / (4 * m)
        y, _, _ = richardson_vide(-np.ones((4 * m + 1, 1, 1)), np.array([1.0]), h)
        errs.append(np.max(np.abs(y[:, 0] - np.cos(np.linspace(0, 6, m + 1)))))
    assert errs[0] / errs[1] > 30 and errs[1] / errs[2] > 30


def test_tolerance_raises():
    with pytest.raises(ConvergenceError):
        richardson_vide(-np.ones((17, 1, 1)), np.array([1.0]), 6.0 / 16, tol=1e-12)


def test_bad_fine_grid():
    with pytest.raises(ValueError):
        richardson_vide(np.zeros((10, 1, 1)), np.array([1.0]), 0.1)
