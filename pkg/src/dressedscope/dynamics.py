"""Population transfer |1> -> |2> through the dressed excited state |2'>.

Populations are ordered (rho_11, rho_2'2', rho_22). Detunings are
dimensionless, in units of the linewidth Gamma; times are in seconds and
always enter as the product Gamma * t.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .levels import RB87
from .numerics import ode_integrate


@dataclass(frozen=True)
class ThreeLevelState:
    rho11: float
    rho2p2p: float
    rho22: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < -1e-9) or np.any(vals > 1 + 1e-9):
            raise ValueError(f"populations outside [0, 1]: {vals}")
        if abs(vals.sum() - 1) > 1e-9:
            raise ValueError(f"populations do not sum to 1: {vals.sum()!r}")

    def as_array(self):
        return np.array([self.rho11, self.rho2p2p, self.rho22])

    @classmethod
    def ground(cls):
        return cls(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class DriveParams:
    s: float
    gamma: float = RB87.gamma
    c21: float = RB87.c21
    c22: float = RB87.c22

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("saturation parameter must be non-negative")


def rate_matrix(drive):
    """Generator of the rate equations; columns sum to zero."""
    s, g = drive.s, drive.gamma
    return np.array([
        [-s * g / 2, s * g / 2 + drive.c21 * g, 0.0],
        [s * g / 2, -s * g / 2 - g, 0.0],
        [0.0, drive.c22 * g, 0.0],
    ])


def eigenvalues(drive):
    """Non-zero eigenvalues (Lambda_+, Lambda_-) of the rate matrix."""
    s, g = drive.s, drive.gamma
    root = np.sqrt(1 + 2 * s * drive.c21 + s * s)
    # 1 + s - root rationalized, so small s does not cancel
    return -g / 2 * (1 + s + root), -g * s * (1 - drive.c21) / (1 + s + root)


def analytic_population(drive, t):
    """Closed-form rho_22(t) starting from rho_11(0) = 1."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    if drive.s == 0:
        return np.zeros_like(np.asarray(t, dtype=float))[()]
    lp, lm = eigenvalues(drive)
    # rewritten with expm1 so small s * Gamma * t does not cancel
    #   1 - lm/(lm-lp) e^{lp t} - lp/(lp-lm) e^{lm t}
    t = np.asarray(t, dtype=float)
    out = -(lm * np.expm1(lp * t) - lp * np.expm1(lm * t)) / (lm - lp)
    return out[()]


def low_sat_population(s0, delta, t, gamma=RB87.gamma, c22=RB87.c22):
    """Low-saturation transfer 1 - exp(-c22 Gamma t (s0/2) / (1 + s0 + 4 delta^2)).

    ``delta`` may be an array (spatially resolved detuning).
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    if np.any(np.asarray(s0) > 0.1):
        warnings.warn("low-saturation formula used with s0 > 0.1", RuntimeWarning,
                      stacklevel=2)
    delta = np.asarray(delta, dtype=float)
    rate = c22 * gamma * t * (s0 / 2) / (1 + s0 + 4 * delta**2)
    return (-np.expm1(-rate))[()]


def integrate_rate_equations(drive, t, initial=None, tol=1e-10):
    """Numerical solution of the rate equations (validation oracle)."""
    initial = ThreeLevelState.ground() if initial is None else initial
    if t < 0:
        raise ValueError("t must be non-negative")
    m = rate_matrix(drive)
    y = ode_integrate(lambda _t, y: m @ y, initial.as_array(), (0.0, t), tol=tol)
    y = np.clip(y, 0.0, 1.0)
    return ThreeLevelState(*(y / y.sum()))


def obe_rhs(s0, delta, gamma=RB87.gamma, c21=RB87.c21, c22=RB87.c22):
    """Right-hand side of the three-level optical Bloch equations.

    State vector: the 3x3 density matrix flattened as real then imaginary
    parts. The repumper couples |1> and |2'> with Rabi frequency
    Omega = Gamma sqrt(s0 / 2); |2'> decays to |1> and |2>.
    """
    rabi = gamma * np.sqrt(s0 / 2)
    det = delta * gamma
    h = np.array([[0, rabi / 2, 0], [rabi / 2, -det, 0], [0, 0, 0]], dtype=complex)
    jumps = [np.sqrt(c21 * gamma) * np.outer([1, 0, 0], [0, 1, 0]),
             np.sqrt(c22 * gamma) * np.outer([0, 0, 1], [0, 1, 0])]
    anti = sum(j.conj().T @ j for j in jumps)

    def rhs(_t, y):
        rho = (y[:9] + 1j * y[9:]).reshape(3, 3)
        d = -1j * (h @ rho - rho @ h) - 0.5 * (anti @ rho + rho @ anti)
        for j in jumps:
            d += j @ rho @ j.conj().T
        d = d.ravel()
        return np.concatenate([d.real, d.imag])

    return rhs


def integrate_obe(s0, delta, t, gamma=RB87.gamma, c21=RB87.c21, c22=RB87.c22, tol=1e-9):
    """Populations after a square repump pulse, coherences kept."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rho0 = np.zeros(18)
    rho0[0] = 1.0
    y = ode_integrate(obe_rhs(s0, delta, gamma, c21, c22), rho0, (0.0, t), tol=tol)
    pops = np.clip(y[[0, 4, 8]], 0.0, 1.0)
    return ThreeLevelState(*(pops / pops.sum()))
