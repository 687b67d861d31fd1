import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dressedscope import dynamics as dyn

from oracles import GAMMA, low_sat_direct, rate_population_expm

S_GRID = [1e-3, 1e-2, 0.1, 1.0, 10.0]
GT_GRID = [0.1, 1.0, 10.0, 100.0]


def drive(s):
    return dyn.DriveParams(s, 1.0)


def test_state_validation():
    dyn.ThreeLevelState(0.2, 0.3, 0.5)
    with pytest.raises(ValueError):
        dyn.ThreeLevelState(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        dyn.ThreeLevelState(1.1, -0.1, 0.0)


def test_negative_saturation_rejected():
    with pytest.raises(ValueError):
        dyn.DriveParams(-0.1)


def test_rate_matrix_undriven():
    m = dyn.rate_matrix(dyn.DriveParams(0.0, 1.0))
    expected = np.array([[0, 0.5, 0], [0, -1, 0], [0, 0.5, 0]])
    assert np.array_equal(m, expected)


@given(st.floats(0, 100))
def test_rate_matrix_columns_sum_to_zero(s):
    assert np.allclose(dyn.rate_matrix(drive(s)).sum(axis=0), 0, atol=1e-12 * (1 + s))


def test_eigenvalues_s1():
    lp, lm = dyn.eigenvalues(drive(1.0))
    assert np.isclose(lp, -(2 + np.sqrt(3)) / 2)
    assert np.isclose(lm, -(2 - np.sqrt(3)) / 2)
    ev = np.sort(np.linalg.eigvals(dyn.rate_matrix(drive(1.0))).real)
    assert np.allclose(ev, sorted([lp, lm, 0.0]))


# subnormal s underflows s/4 to zero
@given(st.floats(0, 1e3, allow_subnormal=False))
def test_eigenvalue_signs(s):
    lp, lm = dyn.eigenvalues(drive(s))
    assert lp <= 0 and lm <= 0
    assert (lm == 0) == (s == 0)


def test_analytic_trivial_limits():
    assert dyn.analytic_population(drive(0.0), 5.0) == 0.0
    assert dyn.analytic_population(drive(3.0), 0.0) == 0.0
    assert dyn.analytic_population(drive(1.0), 1e4) == pytest.approx(1.0, abs=1e-12)


def test_analytic_reference_point():
    # s = 1, Gamma t = 1
    val = dyn.analytic_population(drive(1.0), 1.0)
    assert abs(val - rate_population_expm(1.0, 1.0)) < 1e-12
    assert val == pytest.approx(0.0697, abs=5e-5)


@pytest.mark.parametrize("s", S_GRID)
@pytest.mark.parametrize("gt", GT_GRID)
def test_analytic_vs_expm_oracle(s, gt):
    d = dyn.DriveParams(s, GAMMA)
    assert abs(dyn.analytic_population(d, gt / GAMMA) - rate_population_expm(s, gt)) < 1e-12


@pytest.mark.parametrize("s", S_GRID)
@pytest.mark.parametrize("gt", GT_GRID)
def test_analytic_vs_ode(s, gt):
    d = dyn.DriveParams(s, GAMMA)
    num = dyn.integrate_rate_equations(d, gt / GAMMA).rho22
    assert abs(dyn.analytic_population(d, gt / GAMMA) - num) < 1e-8


def test_ode_population_conserved_long_time():
    d = dyn.DriveParams(0.3, GAMMA)
    st_ = dyn.integrate_rate_equations(d, 1e3 / GAMMA)
    assert abs(st_.as_array().sum() - 1) < 1e-9


def test_ode_t0_returns_initial():
    init = dyn.ThreeLevelState(0.7, 0.1, 0.2)
    out = dyn.integrate_rate_equations(drive(1.0), 0.0, init)
    assert np.allclose(out.as_array(), init.as_array())


@settings(max_examples=40, deadline=None)
@given(s=st.floats(1e-3, 10), t1=st.floats(0, 50), t2=st.floats(0, 50))
def test_monotone_in_time(s, t1, t2):
    a, b = sorted([t1, t2])
    assert dyn.analytic_population(drive(s), a) <= dyn.analytic_population(drive(s), b) + 1e-15


@settings(max_examples=40, deadline=None)
@given(s1=st.floats(0, 10), s2=st.floats(0, 10), t=st.floats(0.01, 100))
def test_monotone_in_saturation(s1, s2, t):
    a, b = sorted([s1, s2])
    assert dyn.analytic_population(drive(a), t) <= dyn.analytic_population(drive(b), t) + 1e-15


def test_low_sat_examples():
    t = 100 / GAMMA
    assert dyn.low_sat_population(0.0, 0.0, t) == 0.0
    assert dyn.low_sat_population(0.02, 0.0, t) == pytest.approx(1 - np.exp(-0.4902), abs=1e-4)
    assert dyn.low_sat_population(0.02, 0.0, t) == pytest.approx(0.3875, abs=1e-4)
    assert dyn.low_sat_population(0.02, 1.0, t) == pytest.approx(0.0948, abs=1e-4)


def test_low_sat_matches_direct_formula():
    d = np.linspace(-5, 5, 41)
    got = dyn.low_sat_population(0.01, d, 37 / GAMMA)
    assert np.allclose(got, low_sat_direct(0.01, d, 37), rtol=1e-13, atol=0)


def test_low_sat_warns_and_rejects():
    with pytest.warns(RuntimeWarning):
        dyn.low_sat_population(0.5, 0, 1e-6)
    with pytest.raises(ValueError):
        dyn.low_sat_population(0.01, 0, -1.0)


def test_low_sat_converges_at_long_pulses():
    # the two forms differ by the Gamma t ~ 1 transient only
    s0 = 1e-2
    for gt in (300.0, 1000.0):
        for delta in (0.0, 1.0, 5.0):
            exact = dyn.analytic_population(dyn.DriveParams(s0 / (1 + 4 * delta**2), GAMMA),
                                            gt / GAMMA)
            approx = dyn.low_sat_population(s0, delta, gt / GAMMA)
            assert abs(approx - exact) / max(exact, 1e-6) < 0.02


def test_obe_no_drive():
    assert dyn.integrate_obe(0.0, 0.0, 10 / GAMMA).rho22 == pytest.approx(0.0, abs=1e-12)


def test_obe_agrees_with_rate_equations():
    obe = dyn.integrate_obe(0.1, 0.0, 50 / GAMMA).rho22
    rate = dyn.analytic_population(dyn.DriveParams(0.1, GAMMA), 50 / GAMMA)
    assert abs(obe - rate) < 0.01


def test_obe_detuned_agrees():
    obe = dyn.integrate_obe(0.05, 1.0, 200 / GAMMA).rho22
    rate = dyn.analytic_population(dyn.DriveParams(0.05 / 5, GAMMA), 200 / GAMMA)
    assert abs(obe - rate) < 0.01


def test_obe_population_trace():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = dyn.integrate_obe(1.0, 0.5, 3 / GAMMA)
    assert abs(s.as_array().sum() - 1) < 1e-9
