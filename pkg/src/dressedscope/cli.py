"""Batch command-line front end.

Every subcommand reads one TOML scenario file and writes one plot-ready CSV
(``psf`` also writes ``<stem>_profile.csv``). Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import hashlib
import io
import logging
import os
import sys
import tempfile
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, experiment, imaging, lattice, levels, psf
from .numerics import NumericalError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

log = logging.getLogger("dressedscope")

TOMOGRAPHY_SHIFTS = [2.5, 7.2, 11.6, 15.8, 21.0]

# allowed keys per section; the suffix carries the unit
SCHEMA = {
    "atom": {"gamma_mhz", "c21", "c22", "mass_amu", "i_sat_mw_cm2"},
    "dressing": {"u5p0_gamma", "interfringe_um", "wavelength_nm"},
    "pulse": {"s0", "duration_us", "delta_gamma"},
    "lightshift": {"intensity_w_m2", "u5p0_gamma", "wavelength_nm"},
    "psf": {"u5p0_gamma", "points_per_fringe", "profile_points"},
    "tomography": {"u5p0_gamma", "detuning_min_gamma", "detuning_max_gamma", "detuning_points"},
    "cloud": {"n_total", "sigma_x_um", "sigma_y_um", "sigma_z_um"},
    "mw": {"p_max", "period_us", "duration_us"},
    "resolve": {"u5p0_gamma", "s0", "gamma_t", "interfringe_um", "points_per_fringe"},
    "lattice": {"n_1529", "n_1064", "max_sites"},
    "wavepacket": {"lattice_depth_er", "populations"},
    "cleaning": {"enabled", "coarse_u5p0_gamma", "coarse_start", "coarse_stop",
                 "coarse_duration_ms", "coarse_s0", "segments", "m_pulses", "n_pulses",
                 "fine_u5p0_gamma", "fine_offset_gamma", "fine_s0", "fine_duration_us"},
    "scan": {"u5p0_gamma", "s0", "duration_us", "points", "displacement_min_nm",
             "displacement_max_nm"},
    "shift": {"relative_population", "emptied_site"},
    "misalign": {"sigma_x_nm", "sigma_transverse_um", "eta_deg"},
    "fit": {"input", "kind", "starts_gamma", "weighting"},
}


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, data, path):
        self.data = data
        self.path = Path(path)
        for section, body in data.items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            if not isinstance(body, dict):
                raise ConfigError(f"[{section}] must be a table")
            for key in body:
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
        self.get("atom.gamma_mhz")  # always required

    def get(self, dotted, default=..., kind=float):
        section, key = dotted.split(".")
        body = self.data.get(section, {})
        if key not in body:
            if default is ...:
                raise ConfigError(f"missing required key {dotted}")
            return default
        value = body[key]
        try:
            if kind is list:
                return [float(v) for v in (value if isinstance(value, list) else [value])]
            if kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
                return value
            if kind is int:
                if isinstance(value, bool) or int(value) != value:
                    raise TypeError
                return int(value)
            if kind is str:
                return str(value)
            if kind is dict:
                return dict(value)
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"key {dotted} has an invalid value {value!r}") from None


def load_config(path):
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return Config(data, path), hashlib.sha256(raw).hexdigest()


def atomic_system(cfg):
    gamma = cfg.get("atom.gamma_mhz")
    if gamma <= 0:
        raise ConfigError("key atom.gamma_mhz must be positive")
    sys_ = replace(levels.RB87, gamma=2 * np.pi * gamma * 1e6,
                   c21=cfg.get("atom.c21", levels.RB87.c21),
                   c22=cfg.get("atom.c22", levels.RB87.c22),
                   i_sat_rep=cfg.get("atom.i_sat_mw_cm2", levels.RB87.i_sat_rep))
    if "mass_amu" in cfg.data.get("atom", {}):
        from scipy.constants import atomic_mass
        sys_ = replace(sys_, mass=cfg.get("atom.mass_amu") * atomic_mass)
    return sys_


def _pulse(cfg):
    return psf.RepumpPulse(cfg.get("pulse.s0", 0.022), cfg.get("pulse.delta_gamma", 0.0),
                           cfg.get("pulse.duration_us", 8.0) * 1e-6)


def _cloud(cfg):
    return imaging.CloudProfile(cfg.get("cloud.n_total", 1e5),
                                cfg.get("cloud.sigma_x_um", 20.0) * 1e-6,
                                cfg.get("cloud.sigma_y_um", 60.0) * 1e-6,
                                cfg.get("cloud.sigma_z_um", 20.0) * 1e-6)


def _mw(cfg):
    return imaging.MwPulse(cfg.get("mw.p_max", 0.96), cfg.get("mw.period_us", 56.0) * 1e-6,
                           cfg.get("mw.duration_us", 8.0) * 1e-6)


def _config_lattice(cfg):
    return lattice.commensurate_config(cfg.get("lattice.n_1529", 9, int),
                                       cfg.get("lattice.n_1064", 13, int))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path, columns, rows, config_hash, summary=()):
    """Write atomically: temp file in the target directory, then rename."""
    buf = io.StringIO()
    buf.write(f"# dressedscope {__version__} config_sha256={config_hash}\n")
    for key, value in summary:
        buf.write(f"# {key}={_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %s (%d rows)", path, len(rows))


def read_csv(path):
    """Columns of a CSV with '#' comment lines and one header row."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    reader = csv.reader(lines)
    header = next(reader)
    cols = {h: [] for h in header}
    for row in reader:
        for h, v in zip(header, row):
            cols[h].append(v)
    out = {}
    for h, v in cols.items():
        try:
            out[h] = np.array([float(x) for x in v])
        except ValueError:  # text column such as 'branch'
            out[h] = np.array(v)
    return out


def cmd_lightshift(cfg, out, hash_, args):
    system = atomic_system(cfg)
    wl = cfg.get("lightshift.wavelength_nm", lattice.LAMBDA_1529 * 1e9)
    intensities = cfg.get("lightshift.intensity_w_m2", None, list)
    if intensities is None:
        shifts = cfg.get("lightshift.u5p0_gamma", TOMOGRAPHY_SHIFTS + [40.0], list)
        intensities = [levels.intensity_for_shift(u * system.gamma, wl) for u in shifts]
    rows = []
    for inten in intensities:
        spec = levels.hyperfine_stark_spectrum(inten, wl, system=system)
        u_lin = levels.excited_shift_amplitude(inten, wl) / system.gamma
        for f in sorted(spec.levels):
            for mf, e in sorted(spec.levels[f].energies.items()):
                rows.append((inten, u_lin, f, mf, e / spec.gamma, spec.f2_spread / spec.gamma,
                             spec.three_level_valid))
    write_csv(out, ["intensity_w_m2", "u5p0_linear_gamma", "f", "mf", "shift_gamma",
                    "f2_spread_gamma", "three_level_valid"], rows, hash_,
              [("wavelength_nm", wl)])


def cmd_psf(cfg, out, hash_, args):
    system = atomic_system(cfg)
    i = cfg.get("dressing.interfringe_um", 8.3) * 1e-6
    shifts = cfg.get("psf.u5p0_gamma", None, list)
    if shifts is None:
        shifts = cfg.get("dressing.u5p0_gamma", TOMOGRAPHY_SHIFTS + [40.0], list)
    npts = cfg.get("psf.points_per_fringe", 2048, int)
    base = _pulse(cfg)
    rows, prof_rows = [], []
    for u in shifts:
        dressing = psf.DressingLattice(u, i)
        row = [u]
        for delta, closed in ((u / 2, psf.fwhm_middle), (0.0, psf.fwhm_bottom)):
            pulse = replace(base, delta_780=delta)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                formula = closed(pulse, dressing, system)
            try:
                numeric = psf.numeric_fwhm_at(pulse, dressing, system, npts)
            except NumericalError as exc:
                log.warning("U=%g Gamma, Delta=%g Gamma: %s", u, delta, exc)
                numeric = float("nan")
            row += [formula, numeric]
        rows.append(row)
        grid = psf.fringe_grid(dressing, cfg.get("psf.profile_points", 512, int))
        rho_mid = psf.transfer_function(replace(base, delta_780=u / 2), dressing, system)(grid)
        rho_bot = psf.transfer_function(replace(base, delta_780=0.0), dressing, system)(grid)
        prof_rows += [(u, x, a, b) for x, a, b in zip(grid, rho_mid, rho_bot)]
    write_csv(out, ["u5p0_gamma", "fwhm_middle_formula_m", "fwhm_middle_numeric_m",
                    "fwhm_bottom_formula_m", "fwhm_bottom_numeric_m"], rows, hash_,
              [("interfringe_m", i), ("s0", base.s0), ("duration_s", base.duration)])
    out = Path(out)
    write_csv(out.with_name(f"{out.stem}_profile.csv"),
              ["u5p0_gamma", "position_m", "rho22_middle", "rho22_bottom"], prof_rows, hash_)


def cmd_tomography(cfg, out, hash_, args):
    system = atomic_system(cfg)
    i = cfg.get("dressing.interfringe_um", 8.3) * 1e-6
    pulse = _pulse(cfg)
    det = np.linspace(cfg.get("tomography.detuning_min_gamma", -5.0),
                      cfg.get("tomography.detuning_max_gamma", 30.0),
                      cfg.get("tomography.detuning_points", 141, int))
    rows = []
    for u in cfg.get("tomography.u5p0_gamma", TOMOGRAPHY_SHIFTS, list):
        curve = imaging.tomography_curve(det, _cloud(cfg), _mw(cfg), pulse.s0, pulse.duration,
                                         psf.DressingLattice(u, i), system)
        rows += [(u, d, n) for d, n in zip(det, curve)]
    write_csv(out, ["u5p0_gamma", "detuning_gamma", "n_th"], rows, hash_,
              [("interfringe_m", i), ("s0", pulse.s0), ("duration_s", pulse.duration)])


def cmd_resolve(cfg, out, hash_, args):
    system = atomic_system(cfg)
    i = cfg.get("resolve.interfringe_um", cfg.get("dressing.interfringe_um", 8.3)) * 1e-6
    npts = cfg.get("resolve.points_per_fringe", 2048, int)
    rows = []
    for u in cfg.get("resolve.u5p0_gamma", [10.0, 20.0, 40.0], list):
        dressing = psf.DressingLattice(u, i)
        for s0 in cfg.get("resolve.s0", [0.01, 0.1], list):
            for gt in cfg.get("resolve.gamma_t", [100.0, 1000.0], list):
                t = gt / system.gamma
                for branch, delta, closed in (("middle", u / 2, psf.fwhm_middle),
                                              ("bottom", 0.0, psf.fwhm_bottom)):
                    pulse = psf.RepumpPulse(s0, delta, t)
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        formula = closed(pulse, dressing, system)
                    try:
                        numeric = psf.numeric_fwhm_at(pulse, dressing, system, npts)
                    except NumericalError as exc:
                        log.warning("%s U=%g s0=%g Gt=%g: %s", branch, u, s0, gt, exc)
                        numeric = float("nan")
                    rows.append((u, s0, gt, t, branch, formula, numeric, formula / numeric - 1))
    write_csv(out, ["u5p0_gamma", "s0", "gamma_t", "duration_s", "branch", "formula_m",
                    "numeric_m", "relative_error"], rows, hash_, [("interfringe_m", i)])


def _scan_setup(cfg):
    config = _config_lattice(cfg)
    depth = cfg.get("wavepacket.lattice_depth_er", 1000.0)
    pops = cfg.get("wavepacket.populations", None, dict)
    if pops is not None:
        try:
            pops = {int(k): float(v) for k, v in pops.items()}
        except (TypeError, ValueError):
            raise ConfigError("key wavepacket.populations must map site index to number") from None
    else:
        pops = experiment.uniform_supercell(config)
    model = experiment.build_wavepacket(depth, pops)
    u = cfg.get("scan.u5p0_gamma", 16.0)
    pulse = experiment.imaging_pulse(u, cfg.get("scan.s0", 0.02),
                                     cfg.get("scan.duration_us", 16.0) * 1e-6)
    i1529 = config.interfringe_1529
    lo = cfg.get("scan.displacement_min_nm", 0.0) * 1e-9
    hi = cfg.get("scan.displacement_max_nm", i1529 / 2 * 1e9) * 1e-9
    phases = lattice.K_1064 * np.linspace(lo, hi, cfg.get("scan.points", 385, int))
    return config, model, u, pulse, phases


def _cleaning_plan(cfg):
    d = experiment.CoarseSweep()
    coarse = experiment.CoarseSweep(
        cfg.get("cleaning.coarse_u5p0_gamma", d.u_5p0), cfg.get("cleaning.coarse_start", d.start),
        cfg.get("cleaning.coarse_stop", d.stop),
        cfg.get("cleaning.coarse_duration_ms", d.duration * 1e3) * 1e-3,
        cfg.get("cleaning.coarse_s0", d.s0), cfg.get("cleaning.segments", d.segments, int))
    p = experiment.CleaningPlan()
    return experiment.CleaningPlan(
        coarse, cfg.get("cleaning.m_pulses", 0, int), cfg.get("cleaning.n_pulses", 0, int),
        cfg.get("cleaning.fine_u5p0_gamma", p.fine_u_5p0),
        cfg.get("cleaning.fine_offset_gamma", p.fine_offset),
        cfg.get("cleaning.fine_s0", p.fine_s0),
        cfg.get("cleaning.fine_duration_us", p.fine_duration * 1e6) * 1e-6)


def cmd_scan(cfg, out, hash_, args):
    system = atomic_system(cfg)
    config, model, u, pulse, phases = _scan_setup(cfg)
    if cfg.get("cleaning.enabled", False, bool):
        model = experiment.run_cleaning_sequence(model, _cleaning_plan(cfg), config, system)
    res = experiment.phase_scan_microscopy(model, pulse, u, phases, config, system,
                                           threads=args.threads)
    summary = [("center_m", res.center), ("center_err_m", res.center_err), ("std_m", res.std),
               ("std_err_m", res.std_err), ("amplitude", res.amplitude), ("offset", res.offset),
               ("sigma_x_m", model.sigma_x)]
    summary += [(f"population_site_{m}", p) for m, p in sorted(model.site_populations.items())]
    write_csv(out, ["phase_rad", "position_m", "signal"],
              list(zip(res.phases, res.positions, res.signal)), hash_, summary)


def cmd_shift(cfg, out, hash_, args):
    system = atomic_system(cfg)
    config, model, u, pulse, phases = _scan_setup(cfg)
    emptied = cfg.get("shift.emptied_site", -3, int)
    pops = cfg.get("shift.relative_population", list(np.linspace(0, 1, 11)), list)
    rows = [(p, experiment.central_shift_vs_population(
        p, model.lattice_depth, u, pulse, phases, emptied, config, system)) for p in pops]
    write_csv(out, ["relative_population", "shift_m"], rows, hash_,
              [("emptied_site", emptied), ("u5p0_gamma", u)])


def cmd_misalign(cfg, out, hash_, args):
    sx = cfg.get("misalign.sigma_x_nm", 27.0) * 1e-9
    st = cfg.get("misalign.sigma_transverse_um", 6.0) * 1e-6
    rows = []
    for eta_deg in cfg.get("misalign.eta_deg", list(np.linspace(0, 1, 11)), list):
        eta = np.deg2rad(eta_deg)
        closed = experiment.misaligned_width(sx, st, eta)
        numeric = experiment.misaligned_width_numeric(sx, st, eta)
        rows.append((eta_deg, closed, numeric, closed / numeric - 1))
    write_csv(out, ["eta_deg", "closed_form_m", "numeric_m", "relative_difference"], rows,
              hash_, [("sigma_x_m", sx), ("sigma_transverse_m", st)])


def cmd_fit(cfg, out, hash_, args):
    src = Path(cfg.get("fit.input", kind=str))
    if not src.is_absolute():
        src = cfg.path.parent / src
    kind = cfg.get("fit.kind", "tomography", str)
    try:
        data = read_csv(src)
    except (OSError, StopIteration, ValueError) as exc:
        raise ConfigError(f"key fit.input: cannot read {src}: {exc}") from None
    if kind == "gaussian":
        _need(data, "position_m", "signal")
        amp, c, s, off, ce, se = experiment.fit_gaussian(data["position_m"], data["signal"])
        write_csv(out, ["amplitude", "center_m", "std_m", "offset", "center_err_m", "std_err_m"],
                  [(amp, c, s, off, ce, se)], hash_, [("input", src.name)])
        return
    if kind != "tomography":
        raise ConfigError(f"key fit.kind must be 'tomography' or 'gaussian', got {kind!r}")
    _need(data, "detuning_gamma", "n_th")
    system = atomic_system(cfg)
    pulse = _pulse(cfg)
    i = cfg.get("dressing.interfringe_um", 8.3) * 1e-6
    groups = data.get("u5p0_gamma", np.full(data["n_th"].size, np.nan))
    starts = cfg.get("fit.starts_gamma", None, list)
    weighting = cfg.get("fit.weighting", "uniform", str)
    if weighting not in ("uniform", "poisson"):
        raise ConfigError("key fit.weighting must be 'uniform' or 'poisson'")
    rows = []
    for label in _unique(groups):
        sel = np.isnan(groups) if np.isnan(label) else groups == label
        det, y = data["detuning_gamma"][sel], data["n_th"][sel]
        w = imaging.poisson_weights(y) if weighting == "poisson" else None
        res = imaging.fit_tomography(det, y, _cloud(cfg), _mw(cfg), pulse.s0, pulse.duration,
                                     i, system, weights=w, starts=starts)
        rows.append((label, res.params[0], res.stderr[0], res.params[1], res.stderr[1],
                     res.converged, res.residual_norm))
    write_csv(out, ["label_u5p0_gamma", "u5p0_fit_gamma", "u5p0_stderr_gamma", "n0_fit",
                    "n0_stderr", "converged", "residual_norm"], rows, hash_,
              [("input", src.name)])


def cmd_commensurate(cfg, out, hash_, args):
    max_sites = cfg.get("lattice.max_sites", 20, int)
    rows = [(c.n_1529, c.n_1064, np.rad2deg(c.theta), c.super_period * 1e6,
             c.interfringe_1529 * 1e9) for c in lattice.commensurate_angles(max_sites)]
    write_csv(out, ["n1529", "n1064", "theta_deg", "super_period_um", "interfringe_1529_nm"],
              rows, hash_, [("max_sites", max_sites)])


def _need(data, *cols):
    for c in cols:
        if c not in data:
            raise ConfigError(f"key fit.input: column {c!r} missing")


def _unique(values):
    out = []
    for v in values:
        if not any((np.isnan(v) and np.isnan(o)) or v == o for o in out):
            out.append(v)
    return out


COMMANDS = {
    "lightshift": cmd_lightshift,
    "psf": cmd_psf,
    "tomography": cmd_tomography,
    "resolve": cmd_resolve,
    "scan": cmd_scan,
    "shift-analysis": cmd_shift,
    "misalign": cmd_misalign,
    "fit": cmd_fit,
    "commensurate": cmd_commensurate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dressedscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML scenario file")
        p.add_argument("--out", help="output CSV (default: <command>.csv)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--verbose", action="store_true")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    out = args.out or f"{args.command}.csv"
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg, hash_ = load_config(args.config)
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            COMMANDS[args.command](cfg, out, hash_, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
