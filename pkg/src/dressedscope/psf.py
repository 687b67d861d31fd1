"""Spatial point-spread function of a repump pulse in a dressing lattice.

Lengths are in meters; light shifts and detunings are in units of Gamma.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from . import dynamics
from .levels import RB87, check_three_level_validity
from .numerics import NumericalError, root_find

LN2 = np.log(2)


@dataclass(frozen=True)
class DressingLattice:
    """Excited-state modulation U_5P(x) = u_5p0 cos^2(k x / 2 + phase_offset / 2)."""

    u_5p0: float  # Gamma
    interfringe: float  # m
    phase_offset: float = 0.0  # rad

    def __post_init__(self):
        if self.interfringe <= 0 or self.u_5p0 < 0:
            raise ValueError("need interfringe > 0 and u_5p0 >= 0")

    @property
    def k(self):
        return 2 * np.pi / self.interfringe


@dataclass(frozen=True)
class RepumpPulse:
    s0: float
    delta_780: float  # Gamma, bare detuning omega_780 - omega_0
    duration: float  # s

    def __post_init__(self):
        if self.s0 < 0 or self.duration < 0:
            raise ValueError("need s0 >= 0 and duration >= 0")


@dataclass
class PsfProfile:
    positions: np.ndarray
    transfer: np.ndarray
    peak_indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    evaluate: object = None  # exact rho_22(x) callable, if available
    period: float = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.transfer = np.asarray(self.transfer, dtype=float)
        if np.any(self.transfer < -1e-12) or np.any(self.transfer > 1 + 1e-12):
            raise ValueError("transfer fractions must lie in [0, 1]")


def excited_potential(x, lattice):
    """Excited-state light shift at ``x``, in units of Gamma."""
    return lattice.u_5p0 * np.cos(lattice.k * np.asarray(x) / 2 + lattice.phase_offset / 2) ** 2


def local_detuning(x, pulse, dressing, ground_shift=None):
    """Local repumper detuning Delta_780 - (U_5P(x) - U_5S(x)), in Gamma."""
    u5s = 0.0 if ground_shift is None else ground_shift(x)
    return pulse.delta_780 - (excited_potential(x, dressing) - u5s)


def transfer_function(pulse, dressing, system=RB87, ground_shift=None, exact=False):
    """Return the callable x -> rho_22(x) for one pulse.

    ``exact=True`` uses the full rate-equation solution with
    s(x) = s0 / (1 + 4 Delta(x)^2) instead of the low-saturation form.
    """
    g, c22 = system.gamma, system.c22

    def rho(x):
        delta = local_detuning(x, pulse, dressing, ground_shift)
        if not exact:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return dynamics.low_sat_population(pulse.s0, delta, pulse.duration, g, c22)
        delta = np.atleast_1d(delta)
        out = np.array([
            dynamics.analytic_population(
                dynamics.DriveParams(pulse.s0 / (1 + 4 * d * d), g, system.c21, c22),
                pulse.duration)
            for d in delta.ravel()
        ]).reshape(delta.shape)
        return out if np.ndim(x) else float(out[0])

    return rho


def fringe_grid(dressing, points_per_fringe=2048, fringes=1, start=0.0):
    """Uniform grid over ``fringes`` interfringes, endpoint excluded."""
    n = int(points_per_fringe * fringes)
    return start + np.arange(n) * (dressing.interfringe * fringes / n)


def _local_maxima(y, periodic):
    if periodic:
        left, right = np.roll(y, 1), np.roll(y, -1)
        idx = np.flatnonzero((y > left) & (y >= right))
    else:
        idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    return idx[y[idx] > 0]


def psf_profile(grid, pulse, dressing, system=RB87, ground_shift=None, exact=False):
    """Transferred fraction rho_22 on ``grid`` plus its resolved peaks."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty position grid")
    check_three_level_validity(dressing.u_5p0)
    rho = transfer_function(pulse, dressing, system, ground_shift, exact)
    transfer = np.asarray(rho(grid), dtype=float)
    span = grid[-1] - grid[0]
    step = span / max(grid.size - 1, 1)
    periodic = ground_shift is None and abs(span + step - dressing.interfringe) < 1e-9 * dressing.interfringe
    peaks = _local_maxima(transfer, periodic) if transfer.max() > 0 else np.array([], dtype=int)
    return PsfProfile(grid, transfer, peaks, rho,
                      dressing.interfringe if periodic else None)


def fwhm_numeric(profile, peak_index=None, refine=1e-4):
    """Full width at half of the local peak value.

    The peak position is refined on the exact transfer function when the
    profile carries one (a cubic spline of the samples otherwise), then both
    half-maximum crossings are bracketed on the grid and solved by Brent's
    method.
    """
    x, y = profile.positions, profile.transfer
    if peak_index is None:
        if profile.peak_indices.size == 0:
            raise NumericalError("profile has no resolved peak")
        peak_index = int(profile.peak_indices[np.argmax(y[profile.peak_indices])])
    step = x[1] - x[0]
    period = profile.period
    if profile.evaluate is not None:
        f = profile.evaluate
    else:
        f = CubicSpline(x, y)

    x0 = x[peak_index]
    res = minimize_scalar(lambda u: -float(f(u)), bounds=(x0 - step, x0 + step),
                          method="bounded", options={"xatol": step * 1e-9})
    xp = res.x if float(f(res.x)) >= float(f(x0)) else x0
    half = float(f(xp)) / 2
    if half <= 0:
        raise NumericalError("peak value is zero")

    limit = period / 2 if period is not None else None

    def crossing(direction):
        # walk the grid outwards from the peak until the level is crossed
        inner = xp
        k = 1
        while True:
            outer = xp + direction * k * step
            if limit is not None and abs(outer - xp) > limit:
                raise NumericalError("half maximum not crossed within one period")
            if limit is None and not (x[0] - 1e-12 <= outer <= x[-1] + 1e-12):
                raise NumericalError("half maximum not crossed inside the grid")
            if float(f(outer)) < half:
                break
            inner = outer
            k += 1
        return root_find(lambda u: float(f(u)) - half, sorted((inner, outer)),
                         tol=refine * step * 1e-6)

    return crossing(+1) - crossing(-1)


def _regime_check(pulse, dressing, system):
    g_t = pulse.s0 * system.gamma * pulse.duration
    if dressing.u_5p0 == 0:
        raise ZeroDivisionError("u_5p0 = 0: resolution formula diverges")
    if g_t <= 1 or 1 / dressing.u_5p0 >= 1:
        warnings.warn("outside the long-pulse, resolved-fringe regime of the FWHM formulas",
                      RuntimeWarning, stacklevel=3)


def _photon_factor(pulse, system):
    return system.c22 * system.gamma * pulse.s0 * pulse.duration / (2 * LN2)


def fwhm_bottom(pulse, dressing, system=RB87):
    """Closed-form FWHM at the bottom of the modulation (Delta_780 = 0)."""
    _regime_check(pulse, dressing, system)
    return (np.sqrt(2) * np.sqrt(1 / dressing.u_5p0) * dressing.interfringe / np.pi
            * _photon_factor(pulse, system) ** 0.25)


def fwhm_middle(pulse, dressing, system=RB87):
    """Closed-form FWHM at mid-fringe (Delta_780 = U_5P,0 / 2)."""
    _regime_check(pulse, dressing, system)
    return (1 / dressing.u_5p0) * dressing.interfringe / np.pi * np.sqrt(_photon_factor(pulse, system))


def numeric_fwhm_at(pulse, dressing, system=RB87, points_per_fringe=2048):
    """Numeric FWHM of the strongest peak of the single-fringe profile."""
    grid = fringe_grid(dressing, points_per_fringe)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        prof = psf_profile(grid, pulse, dressing, system)
    return fwhm_numeric(prof)
