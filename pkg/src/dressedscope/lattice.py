"""Geometry of the 1064 nm ground-state lattice and the tilted 1529 nm lattice."""

from dataclasses import dataclass
from math import gcd

import numpy as np

I_1064 = 532.23e-9
LAMBDA_1064 = 2 * I_1064
LAMBDA_1529 = 1529.36098e-9
K_1064 = 2 * np.pi / I_1064


@dataclass(frozen=True)
class GroundLattice:
    """Ground-state potential u_5s0 cos^2(k x / 2 + phi0 / 2), depth in E_r."""

    u_5s0: float
    interfringe: float = I_1064
    phi0: float = 0.0

    def __post_init__(self):
        if self.interfringe <= 0:
            raise ValueError("interfringe must be positive")


@dataclass(frozen=True)
class CommensurateConfig:
    n_1529: int
    n_1064: int
    theta: float  # rad
    super_period: float  # m
    wavelength_1529: float = LAMBDA_1529
    interfringe_1064: float = I_1064

    @property
    def interfringe_1529(self):
        return interfringe_from_angle(self.theta, self.wavelength_1529)


def ground_potential(x, lattice):
    k = 2 * np.pi / lattice.interfringe
    return lattice.u_5s0 * np.cos(k * np.asarray(x) / 2 + lattice.phi0 / 2) ** 2


def interfringe_from_angle(theta, wavelength=LAMBDA_1529):
    if not 0 <= theta < np.pi / 2:
        raise ValueError("theta must lie in [0, pi/2)")
    return wavelength / (2 * np.cos(theta))


def commensurate_config(n_1529, n_1064, wavelength_1529=LAMBDA_1529, i_1064=I_1064):
    ratio = n_1529 * wavelength_1529 / (n_1064 * 2 * i_1064)
    if ratio > 1:
        raise ValueError(f"({n_1529}, {n_1064}) cannot be made commensurate")
    theta = float(np.arccos(ratio))
    return CommensurateConfig(n_1529, n_1064, theta, n_1064 * i_1064, wavelength_1529, i_1064)


def commensurate_angles(max_sites, wavelength_1529=LAMBDA_1529, i_1064=I_1064):
    """All coprime (n_1529, n_1064) with n_1064 <= max_sites, sorted by angle."""
    if max_sites < 1:
        raise ValueError("max_sites must be >= 1")
    out = []
    for n1064 in range(1, max_sites + 1):
        for n1529 in range(1, n1064 + 1):
            if gcd(n1529, n1064) != 1:
                continue
            if n1529 * wavelength_1529 > n1064 * 2 * i_1064:
                continue
            out.append(commensurate_config(n1529, n1064, wavelength_1529, i_1064))
    out.sort(key=lambda c: (c.theta, c.n_1064))
    return out


NOMINAL_CONFIG = commensurate_config(9, 13)


def phase_from_piezo(displacement, i_1064=I_1064):
    """Relative lattice phase for a piezo displacement: ``(unwrapped, wrapped)``."""
    phi = 2 * np.pi / i_1064 * np.asarray(displacement, dtype=float)
    wrapped = np.mod(phi, 2 * np.pi)
    # mod of a tiny negative number rounds up to exactly 2 pi
    wrapped = np.where(wrapped >= 2 * np.pi, 0.0, wrapped)
    return phi[()], wrapped[()]


def displacement_from_phase(phi0, i_1064=I_1064):
    return np.asarray(phi0) * i_1064 / (2 * np.pi)


def site_position(site_index, config=NOMINAL_CONFIG):
    return site_index * config.interfringe_1064


def site_resonance_offset(site_index, config=NOMINAL_CONFIG):
    """Distance from site ``m`` to the nearest point with site 0's dressing shift.

    Site 0 sits at a dressing extremum (position 0), so equivalent points
    are the multiples of the 1529 nm interfringe; mirror points coincide.
    """
    if abs(site_index) > config.n_1064:
        raise ValueError("site index outside one super-cell")
    x = site_position(site_index, config)
    i1529 = config.interfringe_1529
    nearest = np.round(x / i1529) * i1529
    off = abs(x - nearest)
    return 0.0 if off < 1e-9 * i1529 else float(off)
