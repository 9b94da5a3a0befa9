import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import FROZEN, sector_amplitudes, vacuum_amplitude
from jcmaster.errors import TruncationError, ValidationError
from jcmaster.jc_exact import (
    Fock,
    MapCoefficients,
    ModelParams,
    Thermal,
    Vacuum,
    c_coeff,
    c_dot,
    d_coeff,
    det_F,
    evolution_matrix,
    evolve_exact,
    joint_oracle,
    map_coefficient_derivatives,
    map_coefficients,
)
from jcmaster.dynamics import is_completely_positive

P = ModelParams(1.0, 0.5)


@given(st.integers(0, 60), st.floats(0, 30), st.floats(-3, 3), st.floats(0.1, 3))
def test_sector_unitarity(n, t, delta, g):
    p = ModelParams(g, delta)
    c, d = c_coeff(n, t, p), d_coeff(n, t, p)
    assert abs(abs(c) ** 2 + n * abs(d) ** 2 - 1) < 1e-12


@pytest.mark.parametrize("n", [0, 1, 2, 7])
@pytest.mark.parametrize("delta", [0.0, 0.5, -2.0])
def test_amplitudes_match_matrix_exponential(n, delta):
    p = ModelParams(1.0, delta)
    for t in (0.3, 1.7, 5.2):
        c_ref, d_ref = sector_amplitudes(n, t, 1.0, delta)
        assert abs(c_coeff(n, t, p) - c_ref) < 1e-13
        if n:  # d(0) only ever appears multiplied by n
            assert abs(abs(d_coeff(n, t, p)) - d_ref) < 1e-13


def test_resonant_small_argument_branch():
    # omega == 0 only for n = 0 at zero detuning; series branch near small omega*t
    p = ModelParams(1.0, 0.0)
    assert c_coeff(0, 3.0, p) == pytest.approx(1.0)
    t = np.array([1e-6, 1e-5])
    assert np.allclose(d_coeff(1, t, p), -1j * np.sin(t), rtol=1e-12)


def test_c_dot_matches_finite_difference():
    h = 1e-5
    for n in (0, 1, 3):
        for t in (0.4, 2.1):
            fd = (c_coeff(n, t + h, P) - c_coeff(n, t - h, P)) / (2 * h)
            assert abs(c_dot(n, t, P) - fd) < 1e-8


def test_frozen_values():
    mc = map_coefficients(Vacuum(), 1.3, P)
    assert abs(mc.gamma - FROZEN["vacuum_gamma_1.3"]) < 1e-15
    a, b, gm = FROZEN["thermal1_t1"]
    mc = map_coefficients(Thermal(1.0), 1.0, P)
    assert abs(mc.alpha - a) < 1e-10 and abs(mc.beta - b) < 1e-10 and abs(mc.gamma - gm) < 1e-10
    a, b, gm = FROZEN["fock3_t2"]
    mc = map_coefficients(Fock(3), 2.0, ModelParams(1.0, 2.0))
    assert abs(mc.alpha - a) < 1e-15 and abs(mc.beta - b) < 1e-15 and abs(mc.gamma - gm) < 1e-15


def test_vacuum_reduction():
    t = np.linspace(0, 6, 301)
    mc = map_coefficients(Vacuum(), t, P)
    assert np.max(np.abs(mc.alpha - 1)) < 1e-14
    assert np.max(np.abs(mc.beta - np.abs(mc.gamma) ** 2)) < 1e-14
    assert np.max(np.abs(mc.gamma - vacuum_amplitude(t, 1.0, 0.5))) < 1e-14


def test_identity_at_zero():
    for env in (Vacuum(), Fock(2), Thermal(0.7)):
        m = evolution_matrix(env, 0.0, P)
        assert np.allclose(m, np.eye(4), atol=1e-14)
    assert MapCoefficients.identity().alpha == 1.0


def test_derivatives_match_finite_difference():
    env, h = Thermal(0.8), 1e-5
    d = map_coefficient_derivatives(env, 1.1, P)
    up, dn = map_coefficients(env, 1.1 + h, P), map_coefficients(env, 1.1 - h, P)
    assert abs(d.alpha - (up.alpha - dn.alpha) / (2 * h)) < 1e-8
    assert abs(d.gamma - (up.gamma - dn.gamma) / (2 * h)) < 1e-8


def test_det_f_resonant_vacuum():
    t = np.linspace(0, 3, 31)
    assert np.allclose(det_F(map_coefficients(Vacuum(), t, ModelParams(1.0, 0.0))), np.cos(t) ** 4, atol=1e-14)


@given(st.floats(0, 10), st.sampled_from([Vacuum(), Fock(1), Thermal(0.5)]))
def test_exact_map_completely_positive(t, env):
    assert is_completely_positive(evolution_matrix(env, t, P), tol=1e-12)


def test_evolve_exact_excited_vacuum():
    t = np.linspace(0, 4, 9)
    rho = evolve_exact(np.diag([1.0, 0.0]), map_coefficients(Vacuum(), t, P))
    assert np.allclose(rho[:, 0, 0].real, np.abs(vacuum_amplitude(t, 1.0, 0.5)) ** 2, atol=1e-14)
    assert np.allclose(np.trace(rho, axis1=1, axis2=2), 1.0)


def test_thermal_truncation():
    assert Thermal(0.0).cutoff == 0
    env = Thermal(2.0)
    n, w = env.weights()
    assert w.sum() == pytest.approx(1.0)
    assert np.sum(n * w) == pytest.approx(2.0, rel=1e-8)
    with pytest.raises(TruncationError):
        Thermal(2.0, truncation=5)
    with pytest.raises(TruncationError):
        Thermal(50.0)


@pytest.mark.parametrize("bad", [dict(g=0.0), dict(g=1.0, delta=np.nan)])
def test_invalid_params(bad):
    with pytest.raises(ValidationError):
        ModelParams(**bad)


def test_invalid_fock():
    with pytest.raises(ValidationError):
        Fock(-1)


def test_joint_oracle_short_run(rng):
    from jcmaster.algebra import random_density, trace_distance

    rho0 = random_density(rng)
    t = np.linspace(0, 2, 5)
    for env in (Vacuum(), Thermal(0.5)):
        ref = joint_oracle(rho0, env, t, P)
        exact = evolve_exact(rho0, map_coefficients(env, t, P))
        assert np.max(trace_distance(ref, exact)) < 1e-8
