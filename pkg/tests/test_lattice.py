import numpy as np
import pytest
from hypothesis import given, strategies as st

from dressedscope import lattice as lt


def test_ground_potential():
    g = lt.GroundLattice(100.0)
    assert lt.ground_potential(0.0, g) == 100.0
    assert lt.ground_potential(0.0, lt.GroundLattice(100.0, phi0=np.pi)) == pytest.approx(0, abs=1e-12)
    x = np.linspace(0, 1e-6, 7)
    assert np.allclose(lt.ground_potential(x + lt.I_1064, g), lt.ground_potential(x, g))
    with pytest.raises(ValueError):
        lt.GroundLattice(1.0, interfringe=0.0)


def test_interfringe_from_angle():
    assert lt.interfringe_from_angle(0.0) == pytest.approx(764.680e-9, abs=1e-12)
    assert lt.interfringe_from_angle(np.deg2rad(5.92)) == pytest.approx(768.8e-9, abs=0.1e-9)
    with pytest.raises(ValueError):
        lt.interfringe_from_angle(np.pi / 2)


def test_nominal_config():
    c = lt.NOMINAL_CONFIG
    assert np.rad2deg(c.theta) == pytest.approx(5.92, abs=0.01)
    assert c.super_period == pytest.approx(6.92e-6, abs=0.01e-6)
    assert c.interfringe_1529 == pytest.approx(768.8e-9, abs=0.1e-9)


def test_enumeration():
    configs = lt.commensurate_angles(13)
    pairs = [(c.n_1529, c.n_1064) for c in configs]
    assert (9, 13) in pairs
    assert (18, 26) not in lt.commensurate_angles(26) and (18, 26) not in [
        (c.n_1529, c.n_1064) for c in lt.commensurate_angles(26)]
    thetas = [c.theta for c in configs]
    assert thetas == sorted(thetas)
    for c in configs:
        assert c.n_1529 * lt.LAMBDA_1529 <= c.n_1064 * lt.LAMBDA_1064
    assert lt.commensurate_angles(1) == []
    with pytest.raises(ValueError):
        lt.commensurate_angles(0)


@given(st.integers(1, 60))
def test_commensurability_identity(max_sites):
    for c in lt.commensurate_angles(max_sites):
        lhs = c.n_1529 * lt.interfringe_from_angle(c.theta)
        rhs = c.n_1064 * lt.I_1064
        assert abs(lhs / rhs - 1) < 1e-12
        assert c.super_period == pytest.approx(rhs, rel=1e-15)


def test_incommensurable_pair():
    with pytest.raises(ValueError):
        lt.commensurate_config(3, 2)


def test_piezo_phase():
    un, wr = lt.phase_from_piezo(lt.I_1064)
    assert un == pytest.approx(2 * np.pi) and wr == pytest.approx(0, abs=1e-12)
    assert lt.phase_from_piezo(0.0) == (0.0, 0.0)
    un, _ = lt.phase_from_piezo(lt.NOMINAL_CONFIG.interfringe_1529 / 4)
    assert un / np.pi == pytest.approx(0.722, abs=1e-3)


@given(st.floats(-1e-5, 1e-5), st.floats(-1e-5, 1e-5))
def test_piezo_linear_and_periodic(a, b):
    ua, wa = lt.phase_from_piezo(a)
    ub, _ = lt.phase_from_piezo(b)
    assert lt.phase_from_piezo(a + b)[0] == pytest.approx(ua + ub, abs=1e-9)
    _, wp = lt.phase_from_piezo(a + lt.I_1064)
    assert np.cos(wp) == pytest.approx(np.cos(wa), abs=1e-9)
    assert 0 <= wa < 2 * np.pi
    assert lt.displacement_from_phase(ua) == pytest.approx(a, abs=1e-18)


def test_site_offsets():
    c = lt.NOMINAL_CONFIG
    assert lt.site_resonance_offset(0) == 0.0
    for m in (3, -3):
        off = lt.site_resonance_offset(m)
        assert off == pytest.approx(abs(3 * lt.I_1064 - 2 * c.interfringe_1529), rel=1e-12)
        assert off == pytest.approx(59.3e-9, abs=1e-9)
    assert lt.site_resonance_offset(13) == 0.0
    with pytest.raises(ValueError):
        lt.site_resonance_offset(14)
