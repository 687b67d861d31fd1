"""Calibrated absorption imaging and expected atom numbers per fringe.

The optical density is corrected by the density-dependent cross-section
reduction alpha(b) = alpha0 + beta * b, which gives the closed form

    b = (-alpha0 ln T + s_im (1 - T)) / (1 + beta ln T).
"""

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .levels import RB87
from .numerics import NumericalError, quadrature, root_find
from .psf import excited_potential, transfer_function

CM2 = 1e-4


@dataclass(frozen=True)
class ImagingModel:
    alpha0: float = 1.17
    beta: float = 0.255
    s_im: float = 1.0
    sigma0: float = RB87.sigma0  # cm^2

    def __post_init__(self):
        if self.alpha0 < 1 or self.beta < 0 or self.s_im < 0:
            raise ValueError("need alpha0 >= 1, beta >= 0, s_im >= 0")


BEER_LAMBERT = ImagingModel(alpha0=1.0, beta=0.0, s_im=0.0)


@dataclass(frozen=True)
class CloudProfile:
    n_total: float
    sigma_x: float
    sigma_y: float
    sigma_z: float
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.sigma_x, self.sigma_y, self.sigma_z) <= 0 or self.n_total < 0:
            raise ValueError("need positive widths and n_total >= 0")

    def column_density(self, x, y):
        """Density integrated along z (atoms / m^2)."""
        x0, y0 = self.center[0], self.center[1]
        norm = self.n_total / (2 * np.pi * self.sigma_x * self.sigma_y)
        return norm * np.exp(-(x - x0) ** 2 / (2 * self.sigma_x**2)
                             - (y - y0) ** 2 / (2 * self.sigma_y**2))


@dataclass(frozen=True)
class MwPulse:
    p_max: float = 0.96
    period: float = 56e-6
    duration: float = 8e-6

    def __post_init__(self):
        if not 0 <= self.p_max <= 1 or self.period <= 0:
            raise ValueError("need 0 <= p_max <= 1 and period > 0")


def optical_depth_from_transmission(t_value, model=ImagingModel()):
    """Corrected optical density b for transmission T."""
    t = np.asarray(t_value, dtype=float)
    if np.any(t <= 0) or np.any(t > 1):
        raise ValueError("transmission must lie in (0, 1]")
    log_t = np.log(t)
    den = 1 + model.beta * log_t
    if np.any(den <= 0):
        raise ValueError("transmission below the validity range of the alpha(b) calibration")
    return ((-model.alpha0 * log_t + model.s_im * (1 - t)) / den)[()]


def transmission_from_depth(b, model=ImagingModel()):
    """Invert :func:`optical_depth_from_transmission` for one b >= 0.

    Solved in u = ln T, where the residual is strictly decreasing on
    (-1/beta, 0].
    """
    if b < 0:
        raise ValueError("optical depth must be non-negative")
    if b == 0:
        return 1.0
    a, beta, s = model.alpha0, model.beta, model.s_im

    def resid(u):
        return -a * u + s * (1 - np.exp(u)) - b * (1 + beta * u)

    lo = -1 / beta if beta > 0 else -(b + s) / a - 1.0
    try:
        u = root_find(resid, (lo, 0.0), tol=1e-15)
    except NumericalError as exc:
        raise ValueError(f"no transmission in (0, 1] gives b={b!r}") from exc
    return float(np.exp(u))


def atom_number_from_depth_map(depth_map, pixel_area, model=ImagingModel()):
    """Atom number sum(b) * pixel_area / sigma0; pixel_area in m^2."""
    if pixel_area <= 0:
        raise ValueError("pixel_area must be positive")
    b = np.asarray(depth_map, dtype=float)
    total = b.sum()
    negative = -b[b < 0].sum()
    if negative > 0.05 * abs(total):
        warnings.warn(f"negative optical depths sum to {negative / abs(total):.1%} of the total",
                      RuntimeWarning, stacklevel=2)
    return float(total * pixel_area / (model.sigma0 * CM2))


def synthetic_depth_map(cloud, pixel_pitch, shape, model=ImagingModel()):
    """Optical-depth image b = sigma0 * n_2D of a Gaussian cloud.

    Each pixel holds the column density averaged over the pixel, so the
    map sums exactly to the atoms inside the field of view.
    """
    from scipy.special import erf

    ny, nx = shape
    x_edges = (np.arange(nx + 1) - nx / 2) * pixel_pitch
    y_edges = (np.arange(ny + 1) - ny / 2) * pixel_pitch

    def cell_fraction(edges, center, sigma):
        c = 0.5 * (1 + erf((edges - center) / (np.sqrt(2) * sigma)))
        return np.diff(c)

    fx = cell_fraction(x_edges, cloud.center[0], cloud.sigma_x)
    fy = cell_fraction(y_edges, cloud.center[1], cloud.sigma_y)
    atoms = cloud.n_total * np.outer(fy, fx)
    return atoms * model.sigma0 * CM2 / pixel_pitch**2


def write_depth_map_csv(path, depth_map, pixel_pitch):
    with open(path, "w", newline="") as fh:
        fh.write(f"# pixel_pitch_m={pixel_pitch!r}\n")
        writer = csv.writer(fh)
        for row in np.asarray(depth_map, dtype=float):
            writer.writerow([repr(float(v)) for v in row])


def read_depth_map_csv(path_or_text):
    """Read a depth map; returns ``(array, pixel_pitch_m)``."""
    if "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# pixel_pitch_m="):
        raise ValueError("depth map CSV must start with '# pixel_pitch_m=<value>'")
    pitch = float(lines[0].split("=", 1)[1])
    rows = [list(map(float, r)) for r in csv.reader(io.StringIO("\n".join(lines[1:]))) if r]
    return np.array(rows), pitch


def mw_transfer_probability(pulse):
    if pulse.duration < 0:
        raise ValueError("duration must be non-negative")
    return pulse.p_max * np.sin(np.pi * pulse.duration / pulse.period) ** 2


def _resonance_points(pulse, dressing):
    """Fractions of one period where the repumper is locally resonant."""
    if dressing.u_5p0 <= 0:
        return []
    c = pulse.delta_780 / dressing.u_5p0
    if not 0 <= c <= 1:
        return []
    # cos^2(pi u + phase/2) = c
    base = np.arccos(np.sqrt(c)) / np.pi
    shift = dressing.phase_offset / (2 * np.pi)
    pts = {(sgn * base - shift) % 1.0 for sgn in (1, -1)}
    return sorted(pts)


def fringe_integral(pulse, dressing, system=RB87, rel_tol=1e-6):
    """Integral of rho_22 over one interfringe, in meters."""
    rho = transfer_function(pulse, dressing, system)
    i = dressing.interfringe
    resonances = _resonance_points(pulse, dressing)
    peak = max([float(rho(p * i)) for p in resonances] + [float(rho(0.0)), float(rho(i / 2))])
    if peak == 0:
        return 0.0
    val = quadrature(lambda u: float(rho(u * i)), 0.0, 1.0, epsabs=rel_tol * peak,
                     epsrel=1e-8, points=resonances)
    return val * i


def fringe_atom_number(cloud, mw, pulse, dressing, system=RB87):
    """Expected number of repumped atoms in one interfringe.

    N_th = P(t_MW) N0 / (sqrt(2 pi) sigma_y) * integral of rho_22 over one period.
    """
    if cloud.sigma_y < 3 * dressing.interfringe:
        warnings.warn("cloud is not homogeneous over one interfringe", RuntimeWarning,
                      stacklevel=2)
    p = mw_transfer_probability(mw)
    return p * cloud.n_total / (np.sqrt(2 * np.pi) * cloud.sigma_y) * fringe_integral(
        pulse, dressing, system)


def tomography_curve(detunings, cloud, mw, s0, duration, dressing, system=RB87, nodes=None):
    """N_th as a function of the bare repumper detuning (units of Gamma).

    All detunings share one adaptive vector quadrature over the fringe.
    With ``nodes`` set, the periodic trapezoid rule on that many equispaced
    points is used instead; it is smooth in the parameters, which the fits
    need.
    """
    from .psf import RepumpPulse

    detunings = np.asarray(detunings, dtype=float)
    if s0 == 0 or dressing.u_5p0 < 0:
        return np.zeros_like(detunings)
    g, c22 = system.gamma, system.c22
    rate = c22 * g * duration * s0 / 2
    i = dressing.interfringe

    def integrand(u):
        shift = excited_potential(u * i, dressing)
        return -np.expm1(-rate / (1 + s0 + 4 * (detunings - shift) ** 2))

    p = mw_transfer_probability(mw)
    scale = p * cloud.n_total / (np.sqrt(2 * np.pi) * cloud.sigma_y) * i
    if nodes is not None:
        u = np.arange(int(nodes)) / int(nodes)
        return scale * integrand(u[:, None]).mean(axis=0)
    points = sorted({p for d in detunings
                     for p in _resonance_points(RepumpPulse(s0, d, duration), dressing)})
    peak = -np.expm1(-rate / (1 + s0))
    # quad_vec bisects adaptively; too many break points only slow it down
    if len(points) > 64:
        points = list(np.linspace(0, 1, 65)[1:-1])
    val = quadrature(integrand, 0.0, 1.0, epsabs=1e-6 * peak, epsrel=1e-8, points=points)
    return scale * np.asarray(val)


def tomography_edge_width(detunings, curve):
    """Distance between the outermost half-maximum crossings of a curve."""
    d = np.asarray(detunings, dtype=float)
    y = np.asarray(curve, dtype=float)
    half = y.max() / 2
    above = np.flatnonzero(y >= half)
    if half <= 0 or above[0] == 0 or above[-1] == y.size - 1:
        raise NumericalError("curve does not fall below half maximum on both sides")

    def cross(i, j):
        return d[i] + (half - y[i]) * (d[j] - d[i]) / (y[j] - y[i])

    return cross(above[-1], above[-1] + 1) - cross(above[0] - 1, above[0])


def fit_tomography(detunings, counts, cloud, mw, s0, duration, interfringe, system=RB87,
                   weights=None, starts=None, nodes=4096):
    """Fit N_th(Delta) with the light shift U_5P,0 and N0 free.

    Multi-start over U_5P,0 (8 log-spaced values in [1, 50] Gamma by
    default); each start seeds N0 with its linear least-squares value.
    Returns the best :class:`FitResult` with params ``(u_5p0, n0)``.
    """
    from .numerics import multistart_fit
    from .psf import DressingLattice

    d = np.asarray(detunings, dtype=float)
    y = np.asarray(counts, dtype=float)
    unit = CloudProfile(1.0, cloud.sigma_y, cloud.sigma_y, cloud.sigma_z)

    def model(x, u, n0):
        lat = DressingLattice(abs(u), interfringe)
        return n0 * tomography_curve(x, unit, mw, s0, duration, lat, system, nodes=nodes)

    if starts is None:
        starts = np.geomspace(1.0, 50.0, 8)
    seeds = []
    for u in starts:
        f = model(d, u, 1.0)
        norm = float(f @ f)
        seeds.append([u, float(y @ f) / norm if norm > 0 else 1.0])
    res = multistart_fit(model, d, y, seeds, weights=weights, tol=1e-12)
    res.params[0] = abs(res.params[0])
    return res


def poisson_weights(counts, floor=1.0):
    """1 / sqrt(N) residual weights for Poissonian atom-number noise."""
    return 1 / np.sqrt(np.maximum(np.asarray(counts, dtype=float), floor))
