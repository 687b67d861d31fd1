"""Virtual dual-lattice experiment: single-site preparation and wavepacket imaging.

Geometry
--------
Positions are measured in the frame of the 1064 nm lattice: site ``m`` sits
at ``m * i_1064``. The relative phase ``phi0`` moves the dressing lattice by
``d = phi0 / k_1064`` and, at ``phi0 = 0``, site 0 coincides with a node of
the excited-state modulation (the bottom of the 1529 nm pattern). A
displacement of ``i_1529 / 4`` then places site 0 at mid-fringe.

Each occupied site holds a frozen Gaussian density of std ``sigma_x``. A
repump pulse removes from site ``m`` the fraction
``integral n_m(x) rho_22(x) dx``.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as sc

from .lattice import I_1064, K_1064, LAMBDA_1064, NOMINAL_CONFIG
from .levels import RB87
from .numerics import NumericalError, least_squares_fit, quadrature
from .psf import DressingLattice, RepumpPulse, excited_potential, transfer_function

_GRID = np.linspace(-9.0, 9.0, 2401)  # site-local grid, units of sigma_x
_WEIGHTS = np.exp(-_GRID**2 / 2)
_WEIGHTS /= np.trapezoid(_WEIGHTS, _GRID)


def recoil_frequency(wavelength=LAMBDA_1064, mass=RB87.mass):
    """Recoil energy E_r / hbar in rad/s."""
    k = 2 * np.pi / wavelength
    return sc.hbar * k**2 / (2 * mass)


@dataclass(frozen=True)
class WavepacketModel:
    lattice_depth: float  # E_r
    recoil_energy: float  # rad/s
    trap_freq: float  # rad/s
    a_ho: float  # m
    sigma_x: float  # m
    site_populations: dict = field(default_factory=dict)
    site_spacing: float = I_1064
    origin: float = 0.0  # position of site 0, m
    ground_shift: bool = True  # include the 1064 nm potential in the local detuning

    def __post_init__(self):
        for m, p in self.site_populations.items():
            if not -1e-12 <= p <= 1 + 1e-12:
                raise ValueError(f"population of site {m} outside [0, 1]: {p!r}")

    def site_center(self, m):
        return self.origin + m * self.site_spacing

    def density(self, x):
        """Linear density (populations per meter) summed over sites."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        norm = 1 / (np.sqrt(2 * np.pi) * self.sigma_x)
        for m, p in self.site_populations.items():
            out += p * norm * np.exp(-(x - self.site_center(m)) ** 2 / (2 * self.sigma_x**2))
        return out

    def total(self):
        return float(sum(self.site_populations.values()))

    def ground_potential(self, system=RB87):
        """x -> U_5S(x) in Gamma (attractive, minima on the sites), or None."""
        if not self.ground_shift:
            return None
        depth = self.lattice_depth * self.recoil_energy / system.gamma
        k = 2 * np.pi / self.site_spacing
        return lambda x: -depth * np.cos(k * (np.asarray(x) - self.origin) / 2) ** 2


def build_wavepacket(lattice_depth, populations=None, mass=RB87.mass, wavelength=LAMBDA_1064):
    """Harmonic approximation of a deep lattice site of ``lattice_depth`` E_r."""
    if lattice_depth <= 0:
        raise ValueError("lattice depth must be positive")
    er = recoil_frequency(wavelength, mass)
    omega = 2 * np.sqrt(lattice_depth) * er
    a_ho = np.sqrt(sc.hbar / (mass * omega))
    if populations is None:
        populations = uniform_supercell()
    return WavepacketModel(lattice_depth, er, omega, a_ho, a_ho / np.sqrt(2),
                           dict(populations), wavelength / 2)


def uniform_supercell(config=NOMINAL_CONFIG, population=1.0):
    half = config.n_1064 // 2
    return {m: population for m in range(-half, config.n_1064 - half)}


def dressing_at(phi0, u_5p0, config=NOMINAL_CONFIG):
    """Dressing lattice for relative phase ``phi0`` (node at ``phi0 / k_1064``)."""
    return position_dressing(DressingLattice(u_5p0, config.interfringe_1529), phi0)


def site_transfer(model, pulse, dressing, system=RB87):
    """Fraction of each site's atoms repumped by one pulse."""
    rho = transfer_function(pulse, dressing, system, model.ground_potential(system))
    out = {}
    for m in model.site_populations:
        x = model.site_center(m) + model.sigma_x * _GRID
        out[m] = float(np.clip(np.trapezoid(_WEIGHTS * rho(x), _GRID), 0.0, 1.0))
    return out


def position_dressing(dressing, phi0):
    """Copy of ``dressing`` with its node moved to ``phi0 / k_1064``."""
    return replace(dressing, phase_offset=np.pi - dressing.k * phi0 / K_1064)


@dataclass
class PulseOutcome:
    transferred: dict  # site index -> population moved to |2>
    residual: WavepacketModel
    density: object  # x -> repumped linear density n(x) rho_22(x), 1/m

    def total(self):
        return float(sum(self.transferred.values()))


def apply_repump_pulse(model, pulse, dressing, phi0=None, system=RB87):
    """Apply one pulse; ``phi0`` (if given) repositions the dressing lattice."""
    if phi0 is not None:
        dressing = position_dressing(dressing, phi0)
    frac = site_transfer(model, pulse, dressing, system)
    moved = {m: p * frac[m] for m, p in model.site_populations.items()}
    left = {m: p - moved[m] for m, p in model.site_populations.items()}
    rho = transfer_function(pulse, dressing, system, model.ground_potential(system))
    return PulseOutcome(moved, replace(model, site_populations=left),
                        lambda x: model.density(x) * rho(x))


@dataclass(frozen=True)
class CoarseSweep:
    u_5p0: float = 17.0  # Gamma
    start: float = 0.4  # fraction of u_5p0
    stop: float = 1.0
    duration: float = 10e-3
    s0: float = 2e-3
    segments: int = 100


@dataclass(frozen=True)
class CleaningPlan:
    """Coarse sweep at phi0 = 0, then M pulses at U - 3 Gamma and N at 3 Gamma.

    The fine pulses are applied after moving the dressing lattice by
    ``i_1529 / 4``. M empties site -3, N empties site +3.
    """

    coarse: CoarseSweep = CoarseSweep()
    m_pulses: int = 0
    n_pulses: int = 0
    fine_u_5p0: float = 17.0
    fine_offset: float = 3.0  # Gamma from the modulation edges
    fine_s0: float = 0.02
    fine_duration: float = 16e-6
    skip_coarse: bool = False

    def __post_init__(self):
        if self.m_pulses < 0 or self.n_pulses < 0:
            raise ValueError("pulse counts must be non-negative")
        if self.coarse.segments < 1:
            raise ValueError("coarse sweep needs at least one segment")


def _segment_exponent(u, lo, hi, s0, dt, system):
    """Eq.-6 exponent of one linear-chirp segment from ``lo`` to ``hi`` (Gamma).

    The low-saturation rate is averaged exactly over the chirp (an arctan),
    so the result does not depend on where the detuning is sampled.
    """
    width = np.sqrt(1 + s0)
    rate = system.c22 * system.gamma * s0 * dt / 2
    avg = (np.arctan(2 * (hi - u) / width) - np.arctan(2 * (lo - u) / width)) / (
        2 * width * (hi - lo))
    return rate * avg


def coarse_clean(model, sweep, config=NOMINAL_CONFIG, system=RB87):
    """Linear Delta_780 chirp at phi0 = 0, split into constant-rate segments.

    The density is frozen during the sweep, so the depletion exponents of
    the segments add up point by point; site populations are formed once
    at the end of the stage.
    """
    dressing = dressing_at(0.0, sweep.u_5p0, config)
    edges = np.linspace(sweep.start, sweep.stop, sweep.segments + 1) * sweep.u_5p0
    dt = sweep.duration / sweep.segments
    ground = model.ground_potential(system)
    pops = {}
    for m, p in model.site_populations.items():
        x = model.site_center(m) + model.sigma_x * _GRID
        u = excited_potential(x, dressing) - (0.0 if ground is None else ground(x))
        expo = sum(_segment_exponent(u, lo, hi, sweep.s0, dt, system)
                   for lo, hi in zip(edges[:-1], edges[1:]))
        pops[m] = p * float(np.clip(np.trapezoid(_WEIGHTS * np.exp(-expo), _GRID), 0, 1))
    return replace(model, site_populations=pops)


def mid_fringe_phase(config=NOMINAL_CONFIG):
    """phi0 that moves site 0 from the node to mid-fringe (i_1529 / 4)."""
    return K_1064 * config.interfringe_1529 / 4


def run_cleaning_sequence(model, plan=CleaningPlan(), config=NOMINAL_CONFIG, system=RB87):
    """Coarse sweep, realignment to mid-fringe, then the M/N fine pulses."""
    if not plan.skip_coarse:
        model = coarse_clean(model, plan.coarse, config, system)
    dressing = dressing_at(mid_fringe_phase(config), plan.fine_u_5p0, config)
    u = plan.fine_u_5p0
    for delta, count in ((u - plan.fine_offset, plan.m_pulses), (plan.fine_offset, plan.n_pulses)):
        if not 0 <= delta <= u:
            raise ValueError("fine pulse detuning outside [0, U_5P,0]")
        pulse = RepumpPulse(plan.fine_s0, delta, plan.fine_duration)
        frac = site_transfer(model, pulse, dressing, system)
        # identical pulses compose multiplicatively in the frozen-density model
        left = {m: p * (1 - frac[m]) ** count for m, p in model.site_populations.items()}
        model = replace(model, site_populations=left)
    return model


@dataclass
class ScanResult:
    phases: np.ndarray
    positions: np.ndarray
    signal: np.ndarray
    center: float
    std: float
    center_err: float
    std_err: float
    amplitude: float = np.nan
    offset: float = np.nan
    converged: bool = True

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("fitted std must be positive")


def _gauss(x, amp, center, std, offset):
    return amp * np.exp(-(x - center) ** 2 / (2 * std**2)) + offset


def scan_signal(model, pulse, u_5p0, phases, config=NOMINAL_CONFIG, system=RB87, threads=1):
    """Total repumped population for each relative phase."""
    def one(phi):
        frac = site_transfer(model, pulse, dressing_at(phi, u_5p0, config), system)
        return sum(model.site_populations[m] * frac[m] for m in frac)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.array(list(pool.map(one, phases)))
    return np.array([one(phi) for phi in phases])


def default_phase_grid(config=NOMINAL_CONFIG, points=385):
    """Dressing displacements from 0 to i_1529 / 2 (node to top for site 0)."""
    return np.linspace(0.0, K_1064 * config.interfringe_1529 / 2, points)


def fit_gaussian(positions, signal):
    x = np.asarray(positions, dtype=float)
    y = np.asarray(signal, dtype=float)
    scale = 1e-9  # fit in nm for conditioning
    xs = x / scale
    amp0 = y.max() - y.min()
    c0 = xs[np.argmax(y)]
    above = xs[y >= y.min() + amp0 / 2]
    s0 = max((above.max() - above.min()) / 2.355, xs[1] - xs[0])
    res = least_squares_fit(_gauss, xs, y, [amp0, c0, s0, y.min()])
    amp, c, s, off = res.params
    if not res.converged or not np.isfinite(s):
        raise NumericalError(f"Gaussian fit failed: {res.message}")
    return amp, c * scale, abs(s) * scale, off, res.stderr[1] * scale, res.stderr[2] * scale


def phase_scan_microscopy(model, pulse, u_5p0=16.0, phases=None, config=NOMINAL_CONFIG,
                          system=RB87, threads=1):
    """Scan the relative phase, record the repumped signal and fit a Gaussian."""
    phases = default_phase_grid(config) if phases is None else np.asarray(phases, dtype=float)
    signal = scan_signal(model, pulse, u_5p0, phases, config, system, threads)
    positions = phases / K_1064
    try:
        amp, c, s, off, ce, se = fit_gaussian(positions, signal)
    except NumericalError as exc:
        raise NumericalError(f"{exc}; raw scan: {list(zip(positions, signal))}") from exc
    return ScanResult(phases, positions, signal, c, s, ce, se, amp, off)


def imaging_pulse(u_5p0=16.0, s0=0.02, duration=16e-6):
    """Final imaging pulse, resonant at mid-fringe."""
    return RepumpPulse(s0, u_5p0 / 2, duration)


def central_shift_vs_population(relative_population, lattice_depth=1000.0, u_5p0=16.0,
                                pulse=None, phases=None, emptied=-3, config=NOMINAL_CONFIG,
                                system=RB87):
    """Centroid shift of the imaged wavepacket caused by one residual +-3 site.

    Site ``emptied`` is empty, the opposite site holds ``relative_population``
    (relative to site 0); the shift is taken against site 0 alone.
    """
    pulse = imaging_pulse(u_5p0) if pulse is None else pulse
    if relative_population == 0:
        return 0.0
    ref = build_wavepacket(lattice_depth, {0: 1.0})
    other = build_wavepacket(lattice_depth, {0: 1.0, -emptied: float(relative_population)})
    base = phase_scan_microscopy(ref, pulse, u_5p0, phases, config, system)
    test = phase_scan_microscopy(other, pulse, u_5p0, phases, config, system)
    return test.center - base.center


def misaligned_width(sigma_x, sigma_transverse, eta):
    """Small-angle effective std of a wavepacket tilted by ``eta`` (rad)."""
    if sigma_transverse < sigma_x:
        warnings.warn("transverse width smaller than sigma_x", RuntimeWarning, stacklevel=2)
    return sigma_x * np.sqrt(1 + eta**2 * (sigma_transverse / sigma_x) ** 2)


def misaligned_width_numeric(sigma_x, sigma_transverse, eta):
    """Std of the x-profile of a rotated 2D Gaussian, by numerical integration.

    The density exp(-x'^2 / 2 sx^2 - i'^2 / 2 st^2) with (x', i') the frame
    rotated by ``eta`` is integrated over the transverse axis for every x,
    then the second moment of the resulting profile is integrated in x.
    """
    c, s = np.cos(eta), np.sin(eta)
    # exponent = -(a x^2 + 2 b x i + q i^2) / 2
    a = c**2 / sigma_x**2 + s**2 / sigma_transverse**2
    b = (-c * s / sigma_x**2 + s * c / sigma_transverse**2)
    q = s**2 / sigma_x**2 + c**2 / sigma_transverse**2

    def profile(x):
        i0 = -b * x / q
        w = 1 / np.sqrt(q)
        return quadrature(
            lambda i: np.exp(-(a * x * x + 2 * b * x * i + q * i * i) / 2),
            i0 - 12 * w, i0 + 12 * w, epsabs=0.0, epsrel=1e-11, points=[i0],
        )

    reach = 12 * max(abs(c) * sigma_x + abs(s) * sigma_transverse, sigma_x)
    scale = reach / 12
    m0 = quadrature(lambda u: profile(u * scale), -12.0, 12.0, epsabs=0.0, epsrel=1e-10,
                    points=[0.0])
    m2 = quadrature(lambda u: u * u * profile(u * scale), -12.0, 12.0, epsabs=0.0,
                    epsrel=1e-10, points=[0.0])
    return float(np.sqrt(m2 / m0) * scale)


def rotated_std(sigmas, axis, eta):
    """Exact std along x of a 3D Gaussian (sx, sy, sz) rotated about ``axis``."""
    cov = np.diag(np.square(sigmas))
    c, s = np.cos(eta), np.sin(eta)
    rot = {
        "x": np.array([[1, 0, 0], [0, c, -s], [0, s, c]]),
        "y": np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]]),
        "z": np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]),
    }[axis]
    return float(np.sqrt((rot @ cov @ rot.T)[0, 0]))
