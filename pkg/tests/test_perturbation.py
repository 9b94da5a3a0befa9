import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (
    FROZEN,
    BruteBath,
    fourth_order_integrand,
    rates_from_matrix,
    second_order_integrand,
    tabulated_integrands,
)
from jcmaster.damped_model import DiscreteModes, SingleMode, correlations
from jcmaster.errors import ConvergenceError, ValidationError
from jcmaster.jc_exact import ModelParams, Thermal, Vacuum
from jcmaster.perturbation import (
    fourth_order,
    fourth_order_integrands,
    integrands_to_rates,
    perturbative_coefficients,
    second_order,
    series_consistency,
    simplex_rule,
)

CASES = {
    "single_vacuum": (SingleMode(ModelParams(1.0, 0.6)), Vacuum(), BruteBath([1.0], [0.6], [6], [0.0])),
    "single_thermal": (SingleMode(ModelParams(1.0, 0.6)), Thermal(0.7), BruteBath([1.0], [0.6], [40], [0.7])),
    "two_mode_thermal": (
        DiscreteModes((0.8, 0.5), (0.3, -1.1)),
        Thermal(0.25),
        BruteBath([0.8, 0.5], [0.3, -1.1], [14, 14], [0.25, 0.25]),
    ),
}


@pytest.fixture(scope="module", params=list(CASES))
def case(request):
    model, env, bath = CASES[request.param]
    return correlations(model, env), bath


def ordered_times(seed, n=4, t_max=1.5):
    return np.sort(np.random.default_rng(seed).uniform(0, t_max, n))[::-1]


def test_second_order_integrand_matches_brute_force(case):
    corr, bath = case
    t, t1 = 1.1, 0.4
    brute = rates_from_matrix(second_order_integrand(bath, t, t1))
    f, g = corr.f(t - t1), corr.g(t - t1)
    assert np.allclose(brute, [-(f.imag - g.imag), 2 * g.real, 2 * f.real, 0.0], atol=1e-9)


@pytest.mark.parametrize("seed", [1, 2])
def test_fourth_order_integrands_match_brute_force(case, seed):
    corr, bath = case
    ts = ordered_times(seed)
    brute = rates_from_matrix(fourth_order_integrand(bath, *ts))
    ours = integrands_to_rates(fourth_order_integrands(corr, *ts))
    assert np.allclose(ours, brute, atol=1e-8)


def test_tabulated_loss_integrand_disagrees_with_brute_force():
    # the Re f Re f coefficient of the loss integrand must be 2: the tabulated 1 fails the oracle
    corr, bath = correlations(*CASES["single_thermal"][:2]), CASES["single_thermal"][2]
    ts = ordered_times(3)
    brute = rates_from_matrix(fourth_order_integrand(bath, *ts))
    shadow = tabulated_integrands(corr.f, corr.g, corr.h, *ts)
    ours = fourth_order_integrands(corr, *ts)
    assert abs(np.real(shadow["u"]) - brute[2]) > 1e-3
    assert abs(np.real(ours["u"]) - brute[2]) < 1e-8
    for k in "pqrstv":
        assert np.allclose(shadow[k], ours[k], atol=1e-12)


def test_frozen_vacuum_series():
    corr = correlations(SingleMode(ModelParams(1.0, 1.0)))
    o2, o4 = second_order(corr, 1.0), fourth_order(corr, 1.0)
    lamb2, loss2 = FROZEN["vacuum_series_g2"]
    lamb4, loss4 = FROZEN["vacuum_series_g4"]
    assert o2.lamb_shift == pytest.approx(lamb2, abs=1e-10) and o2.loss == pytest.approx(loss2, abs=1e-10)
    assert o4.lamb_shift == pytest.approx(lamb4, abs=1e-8) and o4.loss == pytest.approx(loss4, abs=1e-8)
    assert o2.gain == 0 and o4.gain == pytest.approx(0, abs=1e-12)


def test_fourth_order_dephasing_vacuum_vs_thermal():
    for delta in (0.0, 1.0):
        corr = correlations(SingleMode(ModelParams(1.0, delta)))
        for t in (0.5, 1.5):
            assert abs(fourth_order(corr, t).dephasing) < 1e-8 * t**3
    thermal = fourth_order(correlations(SingleMode(ModelParams(1.0, 1.0)), Thermal(1.0)), 1.0)
    assert abs(thermal.dephasing) > 1e-7


@given(st.floats(0.1, 3.0))
def test_simplex_volume(t):
    t1, t2, t3, w = simplex_rule(t, 8)
    assert w.sum() == pytest.approx(t**3 / 6, rel=1e-12)
    assert np.all((t >= t1) & (t1 >= t2) & (t2 >= t3) & (t3 >= 0))
    assert np.dot(w, t1 * t2 * t3) == pytest.approx(t**6 / 48, rel=1e-12)


def test_fourth_order_scales_with_coupling():
    a = fourth_order(correlations(SingleMode(ModelParams(1.0, 0.5)), Thermal(0.5)), 0.8).as_array()
    b = fourth_order(correlations(SingleMode(ModelParams(0.5, 0.5)), Thermal(0.5)), 0.8).as_array()
    assert np.allclose(b, a / 16, atol=1e-12)


def test_quadrature_guards():
    corr = correlations(SingleMode(ModelParams(1.0, 3.0)), Thermal(1.0))
    with pytest.raises(ValidationError):
        fourth_order(corr, 1.0, n_quad=4)
    with pytest.raises(ConvergenceError):
        fourth_order(corr, 8.0, n_quad=8, tol=1e-12)


def test_perturbative_bundle():
    corr = correlations(SingleMode(ModelParams(1.0, 0.5)))
    pc = perturbative_coefficients(corr, np.array([0.0, 0.5]))
    assert np.allclose(pc.combined.as_array()[0], 0)
    assert np.allclose(pc.combined.loss, pc.order2.loss + pc.order4.loss)


def test_series_vacuum_sixth_order_remainder():
    rep = series_consistency(Vacuum(), ModelParams(1.0, 1.0), 0.4)
    for k in (0, 2):  # lamb shift and loss are the nonzero vacuum rates
        assert np.all((rep.ratios[:, k] > 32) & (rep.ratios[:, k] < 128))
    assert np.max(rep.relative_mismatch) < 1e-4


def test_series_thermal():
    rep = series_consistency(Thermal(0.5), ModelParams(1.0, 0.5), 0.3)
    assert np.max(rep.relative_mismatch) < 1e-4
    assert np.all((rep.ratios[:, 3] > 32) & (rep.ratios[:, 3] < 128))
