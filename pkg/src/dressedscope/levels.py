"""Atomic constants and light shifts of the dressed 5P3/2 level of Rb-87.

The 1529 nm dressing field couples 5P3/2 to 4D5/2 and 4D3/2 (and, far off
resonance, to 5S1/2). Each coupling is treated as a two-level problem whose
rotating and counter-rotating light shifts are computed separately and
added. For pi polarization the resulting Stark operator is diagonal in m_J;
it is combined with the 5P3/2 hyperfine Hamiltonian and diagonalized.
"""

import configparser
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import constants as sc
from scipy.optimize import linear_sum_assignment
from sympy import Rational
from sympy.physics.wigner import clebsch_gordan, wigner_3j

E_A0 = sc.e * sc.physical_constants["Bohr radius"][0]
TWO_PI = 2 * np.pi

#: F'=1 sits this many linewidths below the repumped F'=2 level
F1_SEPARATION_GAMMA = 26.0


@dataclass(frozen=True)
class AtomicSystem:
    """Constants of the effective three-level repump system.

    gamma is in rad/s, lambda_probe in m, i_sat_rep in mW/cm^2 and sigma0 in
    cm^2. ``i_sat_rep`` already contains the -sqrt(1/8) coupling of the
    |F=1, mF=-1> -> |F'=2, mF=-1> transition.
    """

    gamma: float = TWO_PI * 6.066e6
    lambda_probe: float = 780.241209686e-9
    i_sat_rep: float = 6.67
    coupling_rep: float = -np.sqrt(1 / 8)
    c21: float = 0.5
    c22: float = 0.5
    sigma0: float = 2.907e-9
    mass: float = 86.909180527 * sc.atomic_mass

    def __post_init__(self):
        if self.gamma <= 0 or self.i_sat_rep <= 0 or self.sigma0 <= 0:
            raise ValueError("gamma, i_sat_rep and sigma0 must be positive")
        if abs(self.c21 + self.c22 - 1) > 1e-12:
            raise ValueError("branching ratios c21 + c22 must equal 1")


RB87 = AtomicSystem()


@dataclass(frozen=True)
class TransitionLine:
    """One dipole transition from 5P3/2 to another fine-structure level."""

    label: str
    wavelength: float  # nm, vacuum
    dipole_moment: float  # reduced element, e*a0
    j: Fraction = Fraction(5, 2)
    side: str = "above"

    def __post_init__(self):
        if self.wavelength <= 0 or self.dipole_moment <= 0:
            raise ValueError(f"{self.label}: wavelength and dipole must be > 0")
        if self.side not in ("above", "below"):
            raise ValueError(f"{self.label}: side must be 'above' or 'below'")

    @property
    def angular_frequency(self):
        return TWO_PI * sc.c / (self.wavelength * 1e-9)


@dataclass(frozen=True)
class HyperfineLevel:
    """A hyperfine manifold of the dressed level and its per-mF energies.

    ``energies`` maps mF to the light shift (rad/s) of the eigenstate
    adiabatically connected to |F, mF>.
    """

    f_quantum: int
    a_hfs: float  # MHz
    b_hfs: float  # MHz
    energies: dict = field(default_factory=dict)

    @property
    def spread(self):
        vals = list(self.energies.values())
        return max(vals) - min(vals) if vals else 0.0


@dataclass(frozen=True)
class DressedLevelData:
    j: Fraction
    nuclear_spin: Fraction
    a_hfs: float  # MHz
    b_hfs: float  # MHz
    lines: tuple


def _frac(text):
    return Fraction(text.strip())


def load_atomic_data(path=None):
    """Read the key/value atomic data file (defaults to the bundled Rb-87 one)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if path is None:
        text = resources.files("dressedscope.data").joinpath("rb87_1529.txt").read_text()
        parser.read_string(text)
    else:
        with open(path) as fh:
            parser.read_file(fh)
    states = [s for s in parser.sections() if s.startswith("state:")]
    if len(states) != 1:
        raise ValueError("atomic data file must hold exactly one [state:...] record")
    st = parser[states[0]]
    lines = []
    for name in parser.sections():
        if not name.startswith("line:"):
            continue
        rec = parser[name]
        lines.append(TransitionLine(
            label=rec.get("label", name[5:]),
            wavelength=rec.getfloat("wavelength_nm"),
            dipole_moment=rec.getfloat("dipole_e_a0"),
            j=_frac(rec["j"]),
            side=rec.get("side", "above"),
        ))
    return DressedLevelData(
        j=_frac(st["j"]),
        nuclear_spin=_frac(parser["atom"]["nuclear_spin"]),
        a_hfs=st.getfloat("A_hfs_MHz"),
        b_hfs=st.getfloat("B_hfs_MHz"),
        lines=tuple(lines),
    )


@lru_cache(maxsize=None)
def default_data():
    return load_atomic_data()


def field_amplitude(intensity):
    """Peak electric field (V/m) of a travelling wave of the given intensity."""
    return np.sqrt(2 * intensity / (sc.epsilon_0 * sc.c))


def two_level_stark_shift(dipole, intensity, laser_freq, transition_freq, state="lower"):
    """Light shift (rad/s) of one level of a two-level transition.

    ``dipole`` is the transition matrix element in e*a0; frequencies are
    angular. The rotating term (detuning ``laser_freq - transition_freq``) and
    the counter-rotating term (``-laser_freq - transition_freq``) are each
    evaluated in their own rotating frame and summed.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    det_rot = laser_freq - transition_freq
    det_counter = -laser_freq - transition_freq
    if det_rot == 0 or det_counter == 0:
        raise ZeroDivisionError("laser exactly on resonance: perturbative shift diverges")
    rabi = dipole * E_A0 * field_amplitude(intensity) / sc.hbar
    lower = rabi**2 / 4 * (1 / det_rot + 1 / det_counter)
    if state == "lower":
        return lower
    if state == "upper":
        return -lower
    raise ValueError("state must be 'lower' or 'upper'")


def _w3j(j1, j2, j3, m1, m2, m3):
    r = lambda q: Rational(q.numerator, q.denominator)  # noqa: E731
    return float(wigner_3j(r(j1), r(j2), r(j3), r(m1), r(m2), r(m3)))


def _mvals(j):
    return [j - k for k in range(int(2 * j) + 1)][::-1]


def mj_stark_shifts(intensity, laser_wavelength, lines=None, j=None):
    """Light shift (rad/s) of each |J, mJ> of 5P3/2 for a pi-polarized field.

    Returns a dict keyed by mJ (as Fraction).
    """
    data = default_data()
    lines = data.lines if lines is None else lines
    j = data.j if j is None else Fraction(j)
    omega_l = TWO_PI * sc.c / (laser_wavelength * 1e-9)
    shifts = {}
    for mj in _mvals(j):
        total = 0.0
        for line in lines:
            # <J mJ| d_0 |J' mJ> = (-1)^(J-mJ) (J 1 J'; -mJ 0 mJ) <J||d||J'>
            w = _w3j(j, Fraction(1), line.j, -mj, Fraction(0), mj)
            if w == 0.0:
                continue
            state = "lower" if line.side == "above" else "upper"
            total += two_level_stark_shift(
                abs(w) * line.dipole_moment, intensity, omega_l,
                line.angular_frequency, state=state,
            )
        shifts[mj] = total
    return shifts


def _cg(j1, m1, j2, m2, j, m):
    r = lambda q: Rational(q.numerator, q.denominator)  # noqa: E731
    return float(clebsch_gordan(r(j1), r(j2), r(j), r(m1), r(m2), r(m)))


def excited_shift_amplitude(intensity_peak, laser_wavelength=1529.36098, lines=None,
                            f=2, mf=-1):
    """Peak light shift U_5P,0 (rad/s) of |5P3/2, F, mF> in the linear regime.

    The Stark operator is projected on the bare hyperfine state, so the
    result is exactly proportional to ``intensity_peak``.
    """
    if intensity_peak < 0:
        raise ValueError("intensity must be non-negative")
    data = default_data()
    j, spin = data.j, data.nuclear_spin
    f, mf = Fraction(f), Fraction(mf)
    shifts = mj_stark_shifts(intensity_peak, laser_wavelength, lines, j)
    total = 0.0
    for mj in _mvals(j):
        mi = mf - mj
        if abs(mi) > spin:
            continue
        total += _cg(j, mj, spin, mi, f, mf) ** 2 * shifts[mj]
    return total


def intensity_for_shift(u_target, laser_wavelength=1529.36098, lines=None, f=2, mf=-1):
    """Peak intensity (W/m^2) giving a linear-regime shift ``u_target`` (rad/s)."""
    unit = excited_shift_amplitude(1.0, laser_wavelength, lines, f, mf)
    return u_target / unit


def _angular_momentum(j):
    ms = np.array([float(m) for m in _mvals(j)])
    jj = float(j)
    jz = np.diag(ms)
    # raising operator: <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    jp = np.diag(np.sqrt(jj * (jj + 1) - ms[:-1] * (ms[:-1] + 1)), -1)
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    return jx, jy, jz


def _hyperfine_hamiltonian(j, spin, a_mhz, b_mhz):
    jx, jy, jz = _angular_momentum(j)
    ix, iy, iz = _angular_momentum(spin)
    dj, di = jz.shape[0], iz.shape[0]
    idj, idi = np.eye(dj), np.eye(di)
    idotj = sum(np.kron(ja, ia) for ja, ia in ((jx, ix), (jy, iy), (jz, iz)))
    jf, sf = float(j), float(spin)
    h = a_mhz * idotj
    if b_mhz and jf > 0.5 and sf > 0.5:
        quad = (3 * idotj @ idotj + 1.5 * idotj
                - sf * (sf + 1) * jf * (jf + 1) * np.kron(idj, idi))
        h = h + b_mhz * quad / (2 * sf * (2 * sf - 1) * jf * (2 * jf - 1))
    return TWO_PI * 1e6 * h


@dataclass(frozen=True)
class StarkSpectrum:
    """Eigen-decomposition of hyperfine plus Stark Hamiltonian of 5P3/2."""

    levels: dict  # F -> HyperfineLevel
    gamma: float
    trace_error: float

    def shift(self, f, mf):
        return self.levels[f].energies[mf]

    @property
    def f2_spread(self):
        return self.levels[2].spread

    @property
    def three_level_valid(self):
        """True if the mF spread inside F'=2 stays below one linewidth."""
        return self.f2_spread < self.gamma


def hyperfine_stark_spectrum(intensity, laser_wavelength=1529.36098, lines=None,
                             system=RB87):
    """Diagonalize H_hf + H_Stark of 5P3/2 for a pi-polarized dressing field.

    Shifts are reported relative to the bare hyperfine energies, with each
    eigenstate labelled by the |F, mF> it is adiabatically connected to
    (maximum-overlap assignment inside each mF block).
    """
    data = default_data()
    j, spin = data.j, data.nuclear_spin
    h_hf = _hyperfine_hamiltonian(j, spin, data.a_hfs, data.b_hfs)
    mj_shift = mj_stark_shifts(intensity, laser_wavelength, lines, j)
    di = int(2 * spin) + 1
    h_stark = np.kron(np.diag([mj_shift[m] for m in _mvals(j)]), np.eye(di))
    h = h_hf + h_stark
    if not np.allclose(h, h.conj().T, atol=1e-9 * np.abs(h).max()):
        raise ArithmeticError("assembled Hamiltonian is not Hermitian")
    h = (h + h.conj().T) / 2

    mjs = [m for m in _mvals(j) for _ in range(di)]
    mis = [m for _ in _mvals(j) for m in _mvals(spin)]
    mf_of = np.array([float(a + b) for a, b in zip(mjs, mis)])
    fvals = [spin + j - k for k in range(int(2 * min(spin, j)) + 1)]

    energies = {f: {} for f in fvals}
    eig_sum = 0.0
    for mf in sorted(set(mf_of)):
        idx = np.flatnonzero(mf_of == mf)
        e_bare, v_bare = np.linalg.eigh(h_hf[np.ix_(idx, idx)])
        e_full, v_full = np.linalg.eigh(h[np.ix_(idx, idx)])
        eig_sum += e_full.sum()
        # bare eigenvectors are ordered by energy; identify F from the CG basis
        fs = [f for f in fvals if abs(mf) <= f]
        cg = np.array([[_cg(j, mjs[k], spin, mis[k], f, Fraction(mf).limit_denominator())
                        for k in idx] for f in fs])
        bare_f = [fs[int(np.argmax(np.abs(cg @ v_bare[:, n])))] for n in range(len(idx))]
        overlap = np.abs(v_bare.conj().T @ v_full) ** 2
        rows, cols = linear_sum_assignment(-overlap)
        for r, c in zip(rows, cols):
            f = bare_f[r]
            energies[f][int(mf)] = float(e_full[c] - e_bare[r])
    trace_error = abs(eig_sum - np.trace(h).real)
    levels = {
        int(f): HyperfineLevel(int(f), data.a_hfs, data.b_hfs, energies[f])
        for f in fvals
    }
    return StarkSpectrum(levels=levels, gamma=system.gamma, trace_error=trace_error)


def saturation_from_intensity(i_780, system=RB87):
    """Repumper saturation parameter s0 = I_780 / I_sat,rep (I in mW/cm^2)."""
    if i_780 < 0:
        raise ValueError("repumper intensity must be non-negative")
    return i_780 / system.i_sat_rep


def check_three_level_validity(u_5p0_gamma):
    """Warn when the dressing shift exceeds the F'=1 separation.

    Beyond it the repumper also couples to |F'=1>, which the three-level
    model leaves out. Returns True when the shift is within range.
    """
    if u_5p0_gamma > F1_SEPARATION_GAMMA:
        warnings.warn(
            f"U_5P,0 = {u_5p0_gamma:.3g} Gamma exceeds the {F1_SEPARATION_GAMMA:g} Gamma "
            "F'=1 separation; the three-level model ignores that coupling",
            RuntimeWarning, stacklevel=2,
        )
        return False
    return True
