import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lorentzian_amplitude, vacuum_amplitude
from jcmaster.algebra import EXCITED_PROJECTOR, LindbladCoefficients, random_density
from jcmaster.damped_model import Lorentzian, correlations, kernel_k1, solve_G
from jcmaster.dynamics import (
    Trajectory,
    choi_matrix,
    compare,
    damped_exact_trajectory,
    exact_trajectory,
    integrate_nz,
    integrate_tcl,
    is_completely_positive,
)
from jcmaster.errors import GridMismatch, SingularityApproach, SingularMap, ValidationError
from jcmaster.generators import NZKernel, TCLGenerator, nz_damped_kernel, nz_vacuum_kernel, tcl_damped, tcl_generator
from jcmaster.jc_exact import Fock, ModelParams, Thermal, Vacuum


def quiet_tcl(env, p, grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularMap)
        return tcl_generator(env, p, grid)


def test_zero_generator_constant(rng):
    grid = np.linspace(0, 2, 21)
    gen = TCLGenerator.from_coeffs(grid, LindbladCoefficients(*[np.zeros_like(grid)] * 4))
    rho0 = random_density(rng)
    traj = integrate_tcl(gen, rho0, grid)
    assert np.allclose(traj.states, rho0, atol=1e-15)


def test_zero_kernel_constant(rng):
    lags = np.linspace(0, 2, 81)
    kern = NZKernel.from_coeffs(lags, LindbladCoefficients(*[np.zeros_like(lags)] * 4))
    rho0 = random_density(rng)
    assert np.allclose(integrate_nz(kern, rho0).states, rho0, atol=1e-15)


def test_tcl_vacuum_population():
    p = ModelParams(1.0, 2.0)
    out = np.linspace(0, 6, 61)
    traj = integrate_tcl(quiet_tcl(Vacuum(), p, np.linspace(0, 6, 1201)), EXCITED_PROJECTOR, out)
    assert np.max(np.abs(traj.populations - np.abs(vacuum_amplitude(out, 1.0, 2.0)) ** 2)) < 1e-6
    assert traj.trace_error() < 1e-9


@pytest.mark.parametrize("env", [Thermal(1.0), Fock(2)], ids=repr)
def test_tcl_matches_exact_before_singularity(env, rng):
    p = ModelParams(1.0, 0.5)
    gen = quiet_tcl(env, p, np.linspace(0, 3, 3001))
    t_stop = 0.9 * gen.singular_times[0]
    out = np.linspace(0, t_stop, 31)
    rho0 = random_density(rng)
    rep = compare(integrate_tcl(gen, rho0, out), exact_trajectory(env, p, rho0, out))
    assert rep.sup < 1e-6


def test_tcl_refuses_to_cross_singularity():
    p = ModelParams(1.0, 0.0)
    gen = quiet_tcl(Vacuum(), p, np.linspace(0, 3, 301))
    with pytest.raises(SingularityApproach):
        integrate_tcl(gen, EXCITED_PROJECTOR, np.linspace(0, 1.565, 11))
    integrate_tcl(gen, EXCITED_PROJECTOR, np.linspace(0, 1.5, 11))


def test_nz_through_tcl_singularity():
    lags = np.linspace(0, 2 * np.pi, 4097)
    traj = integrate_nz(NZKernel.from_coeffs(lags, nz_vacuum_kernel(ModelParams(1.0, 0.0), lags)), EXCITED_PROJECTOR)
    assert np.max(np.abs(traj.populations - np.cos(traj.grid) ** 2)) < 1e-5
    assert traj.trace_error() < 1e-9


@given(st.integers(0, 2**31))
def test_nz_vacuum_random_state(seed):
    p = ModelParams(1.0, 1.0)
    lags = np.linspace(0, 4, 1025)
    rho0 = random_density(np.random.default_rng(seed))
    nz = integrate_nz(NZKernel.from_coeffs(lags, nz_vacuum_kernel(p, lags)), rho0)
    exact = exact_trajectory(Vacuum(), p, rho0, nz.grid)
    assert compare(nz, exact).sup < 1e-5
    assert nz.min_eigenvalue() >= -1e-6


def test_damped_three_way():
    model = Lorentzian(1.0, 0.5)
    traj = solve_G(model, 6.0, 2048)
    exact = damped_exact_trajectory(traj, EXCITED_PROJECTOR)
    assert np.max(np.abs(exact.populations - np.abs(lorentzian_amplitude(traj.grid, 1.0, 0.5)) ** 2)) < 1e-10
    kern = NZKernel.from_coeffs(traj.grid, nz_damped_kernel(correlations(model), kernel_k1(traj), traj.grid))
    nz = integrate_nz(kern, EXCITED_PROJECTOR)
    assert np.max(np.abs(nz.populations - exact.populations[::4])) < 1e-5
    gen = tcl_damped(traj)
    out = traj.grid[: len(traj.grid) // 2 : 16]
    tcl = integrate_tcl(gen, EXCITED_PROJECTOR, out)
    assert np.max(np.abs(tcl.populations - exact.populations[: len(traj.grid) // 2 : 16])) < 1e-6


def test_compare_grid_mismatch():
    a = Trajectory(np.array([0.0, 1.0]), np.tile(EXCITED_PROJECTOR, (2, 1, 1)), "exact")
    b = Trajectory(np.array([0.0, 2.0]), np.tile(EXCITED_PROJECTOR, (2, 1, 1)), "tcl")
    assert compare(a, a).sup == 0
    with pytest.raises(GridMismatch):
        compare(a, b)
    assert set(compare(a, a).as_dict()) == {"methods", "sup_trace_distance", "t", "trace_distance"}


def test_trajectory_validation():
    with pytest.raises(ValidationError):
        Trajectory(np.zeros(2), np.zeros((2, 2, 2)), "magic")


def test_choi_identity_and_transpose():
    assert np.allclose(np.trace(choi_matrix(np.eye(4))), 2)
    assert is_completely_positive(np.eye(4))
    # transposition flips the sign of the sigma_y component: positive but not CP
    assert not is_completely_positive(np.diag([1.0, 1.0, -1.0, 1.0]))
