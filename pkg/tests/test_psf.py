import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dressedscope import psf
from dressedscope.numerics import NumericalError
from dressedscope.psf import DressingLattice, RepumpPulse

from oracles import GAMMA, gaussian_fwhm, half_max_width_bruteforce

I83 = 8.3e-6
NOMINAL = dict(s0=0.022, duration=8e-6)


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def test_types_validate():
    with pytest.raises(ValueError):
        DressingLattice(1.0, 0.0)
    with pytest.raises(ValueError):
        DressingLattice(-1.0, 1e-6)
    with pytest.raises(ValueError):
        RepumpPulse(-0.1, 0.0, 1e-6)
    with pytest.raises(ValueError):
        psf.PsfProfile([0, 1], [0.5, 1.2])


def test_excited_potential_points():
    lat = DressingLattice(7.0, I83)
    assert psf.excited_potential(0.0, lat) == 7.0
    assert psf.excited_potential(I83 / 2, lat) == pytest.approx(0.0, abs=1e-15)
    assert psf.excited_potential(I83 / 4, lat) == pytest.approx(3.5)


def test_local_detuning_resonances():
    lat = DressingLattice(20.0, I83)
    assert psf.local_detuning(I83 / 2, RepumpPulse(0.01, 0.0, 1e-6), lat) == pytest.approx(0, abs=1e-14)
    assert psf.local_detuning(I83 / 4, RepumpPulse(0.01, 10.0, 1e-6), lat) == pytest.approx(0, abs=1e-14)
    assert psf.local_detuning(0.0, RepumpPulse(0.01, 20.0, 1e-6), lat) == 0.0


def test_local_detuning_ground_shift():
    lat = DressingLattice(20.0, I83)
    d = psf.local_detuning(0.0, RepumpPulse(0.01, 20.0, 1e-6), lat, lambda x: 1.5)
    assert d == pytest.approx(1.5)


def test_profile_zero_drive():
    lat = DressingLattice(20.0, I83)
    prof = psf.psf_profile(psf.fringe_grid(lat, 256), RepumpPulse(0.0, 10.0, 8e-6), lat)
    assert np.all(prof.transfer == 0) and prof.peak_indices.size == 0


def test_profile_empty_grid():
    with pytest.raises(ValueError):
        psf.psf_profile([], RepumpPulse(0.01, 0, 1e-6), DressingLattice(1, 1e-6))


def test_two_peaks_at_mid_fringe_one_at_bottom():
    lat = DressingLattice(21.0, I83)
    grid = psf.fringe_grid(lat)
    mid = psf.psf_profile(grid, RepumpPulse(0.022, 10.5, 8e-6), lat)
    bot = psf.psf_profile(grid, RepumpPulse(0.022, 0.0, 8e-6), lat)
    assert mid.peak_indices.size == 2
    assert bot.peak_indices.size == 1
    assert grid[bot.peak_indices[0]] == pytest.approx(I83 / 2, abs=grid[1])


def test_periodicity():
    lat = DressingLattice(15.0, I83, phase_offset=0.3)
    rho = psf.transfer_function(RepumpPulse(0.02, 4.0, 8e-6), lat)
    x = np.linspace(0, I83, 513)
    assert np.allclose(rho(x + I83), rho(x), rtol=1e-12, atol=1e-15)


def test_exact_mode_close_to_low_sat():
    lat = DressingLattice(21.0, I83)
    p = RepumpPulse(0.01, 10.5, 30e-6)
    x = np.linspace(0, I83, 64)
    a = psf.transfer_function(p, lat)(x)
    b = psf.transfer_function(p, lat, exact=True)(x)
    assert np.max(np.abs(a - b)) < 0.02


def test_fwhm_of_gaussian():
    s = 37e-9
    x = np.linspace(-400e-9, 400e-9, 2049)
    f = lambda u: 0.8 * np.exp(-np.asarray(u) ** 2 / (2 * s * s))  # noqa: E731
    prof = psf.PsfProfile(x, f(x), np.array([1024]), f)
    assert psf.fwhm_numeric(prof) == pytest.approx(gaussian_fwhm(s), rel=1e-3)


def test_fwhm_from_samples_only():
    s = 50e-9
    x = np.linspace(-500e-9, 500e-9, 4001)
    prof = psf.PsfProfile(x, np.exp(-x**2 / (2 * s * s)), np.array([2000]))
    assert psf.fwhm_numeric(prof) == pytest.approx(gaussian_fwhm(s), rel=1e-3)


def test_fwhm_matches_bruteforce_oracle():
    lat = DressingLattice(21.0, I83)
    p = RepumpPulse(0.022, 10.5, 8e-6)
    rho = psf.transfer_function(p, lat)
    num = psf.numeric_fwhm_at(p, lat)
    ref = half_max_width_bruteforce(rho, I83 / 4, 1e-6)
    assert num == pytest.approx(ref, rel=1e-5)


def test_fwhm_unresolved_raises():
    lat = DressingLattice(0.5, I83)
    with pytest.raises(NumericalError):
        psf.numeric_fwhm_at(RepumpPulse(0.1, 0.0, 1e-3), lat)


def test_fwhm_no_peak_raises():
    lat = DressingLattice(10.0, I83)
    prof = psf.psf_profile(psf.fringe_grid(lat, 64), RepumpPulse(0.0, 0, 1e-6), lat)
    with pytest.raises(NumericalError):
        psf.fwhm_numeric(prof)


def test_nominal_mid_fringe_numeric():
    lat = DressingLattice(40.0, I83)
    num = psf.numeric_fwhm_at(RepumpPulse(0.022, 20.0, 8e-6), lat)
    assert num == pytest.approx(100e-9, rel=0.10)


def test_closed_form_examples():
    p = RepumpPulse(0.022, 0.0, 8e-6)
    assert psf.fwhm_bottom(p, DressingLattice(21.0, I83)) == pytest.approx(1.02e-6, rel=0.01)
    assert psf.fwhm_middle(p, DressingLattice(21.0, I83)) == pytest.approx(196e-9, rel=0.01)
    assert psf.fwhm_middle(p, DressingLattice(40.0, I83)) == pytest.approx(103e-9, rel=0.01)


def test_closed_form_cross_checked_at_21_gamma():
    lat = DressingLattice(21.0, I83)
    for delta, closed, tol in ((10.5, psf.fwhm_middle, 0.05), (0.0, psf.fwhm_bottom, 0.05)):
        p = RepumpPulse(0.022, delta, 8e-6)
        assert closed(p, lat) == pytest.approx(psf.numeric_fwhm_at(p, lat), rel=tol)


def test_closed_form_scalings():
    p = RepumpPulse(0.022, 0.0, 8e-6)
    p4 = RepumpPulse(0.022, 0.0, 32e-6)
    lat = DressingLattice(21.0, I83)
    assert psf.fwhm_bottom(p4, lat) / psf.fwhm_bottom(p, lat) == pytest.approx(np.sqrt(2))
    lat2 = DressingLattice(21.0, 2 * I83)
    assert psf.fwhm_bottom(p, lat2) / psf.fwhm_bottom(p, lat) == pytest.approx(2)
    counter = DressingLattice(40.0, 0.768e-6)
    ratio = psf.fwhm_middle(p, DressingLattice(40.0, I83)) / psf.fwhm_middle(p, counter)
    assert ratio == pytest.approx(10.8, abs=0.05)


@settings(max_examples=30, deadline=None)
@given(u=st.floats(1.0, 100.0), k=st.floats(0.1, 10.0))
def test_mid_linear_bottom_sqrt(u, k):
    p = RepumpPulse(0.02, 0.0, 10e-6)
    a, b = DressingLattice(u, I83), DressingLattice(k * u, I83)
    assert psf.fwhm_middle(p, b) * k == pytest.approx(psf.fwhm_middle(p, a), rel=1e-12)
    assert psf.fwhm_bottom(p, b) * np.sqrt(k) == pytest.approx(psf.fwhm_bottom(p, a), rel=1e-12)


def test_closed_form_errors_and_warnings():
    with pytest.raises(ZeroDivisionError):
        psf.fwhm_middle(RepumpPulse(0.02, 0, 1e-5), DressingLattice(0.0, I83))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(RuntimeWarning):
            psf.fwhm_middle(RepumpPulse(0.001, 0, 1e-7), DressingLattice(20.0, I83))


@pytest.mark.parametrize("u", [11.6, 15.8, 21.0, 40.0])
def test_sub_diffraction(u):
    num = psf.numeric_fwhm_at(RepumpPulse(0.022, u / 2, 8e-6), DressingLattice(u, I83))
    assert num < 390e-9


def test_validity_warning_above_f1():
    lat = DressingLattice(30.0, I83)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(RuntimeWarning):
            psf.psf_profile(psf.fringe_grid(lat, 16), RepumpPulse(0.01, 0, 1e-6), lat)


def test_bottom_numeric_nominal_point():
    lat = DressingLattice(21.0, I83)
    num = psf.numeric_fwhm_at(RepumpPulse(0.022, 0.0, 8e-6), lat)
    assert num == pytest.approx(1.0e-6, rel=0.03)


def test_sweep_resolution_bottom_branch():
    # bottom formula inside the resolved regime: within 5%
    for u in (20.0, 40.0):
        for s0, gt in ((0.01, 1000.0), (0.1, 100.0), (0.1, 1000.0)):
            p = RepumpPulse(s0, 0.0, gt / GAMMA)
            lat = DressingLattice(u, I83)
            num = psf.numeric_fwhm_at(p, lat)
            assert abs(psf.fwhm_bottom(p, lat) / num - 1) < 0.05
