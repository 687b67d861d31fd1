"""Shared numerical kernels.

Thin, contract-checked wrappers around scipy: adaptive ODE integration,
bracketing root finding, adaptive quadrature and weighted nonlinear least
squares. Every wrapper raises :class:`NumericalError` instead of returning a
silently degraded result.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize


class NumericalError(RuntimeError):
    """A kernel failed to reach its requested accuracy."""


def ode_integrate(rhs, y0, t_span, tol=1e-10, method="DOP853"):
    """Integrate ``dy/dt = rhs(t, y)`` from ``t_span[0]`` to ``t_span[1]``.

    Returns the state at the final time. ``tol`` is used as the relative
    tolerance; the absolute tolerance is ``tol * 1e-2``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y0 = np.asarray(y0)
    t0, t1 = map(float, t_span)
    if t1 == t0:
        return y0.copy()
    sol = integrate.solve_ivp(
        rhs, (t0, t1), y0, method=method, rtol=tol, atol=tol * 1e-2
    )
    if not sol.success:
        raise NumericalError(
            f"ODE integration failed at t={sol.t[-1]!r} after {sol.nfev} "
            f"evaluations: {sol.message}"
        )
    return sol.y[:, -1]


def root_find(f, bracket, tol=1e-12):
    """Root of ``f`` inside ``bracket`` by Brent's method."""
    a, b = map(float, bracket)
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise NumericalError(
            f"no sign change on [{a!r}, {b!r}]: f(a)={fa!r}, f(b)={fb!r}"
        )
    root, info = optimize.brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500, full_output=True)
    if not info.converged:
        raise NumericalError(f"brentq did not converge: {info.flag}")
    return root


def quadrature(f, a, b, epsabs=1e-10, epsrel=1e-10, points=None, limit=500):
    """Adaptive quadrature of a scalar or vector valued ``f`` on ``[a, b]``.

    Vector-valued integrands (``f`` returning an array) go through
    :func:`scipy.integrate.quad_vec`, scalar ones through ``quad``.
    """
    probe = np.asarray(f(0.5 * (a + b)))
    if probe.ndim == 0:
        pts = None
        if points is not None:
            pts = sorted(p for p in points if a < p < b) or None
        val, err, info = integrate.quad(
            f, a, b, epsabs=epsabs, epsrel=epsrel, points=pts, limit=limit,
            full_output=True,
        )[:3]
        if err > max(epsabs, epsrel * abs(val)) * 10:
            raise NumericalError(
                f"quad did not converge: estimate {val!r}, error {err!r}"
            )
        return val
    pts = None
    if points is not None:
        pts = sorted(p for p in points if a < p < b) or None
    val, err, info = integrate.quad_vec(
        f, a, b, epsabs=epsabs, epsrel=epsrel, points=pts, limit=limit,
        norm="max", full_output=True,
    )
    if not info.success:
        raise NumericalError(f"quad_vec did not converge: {info.message}")
    return val


@dataclass
class FitResult:
    params: np.ndarray
    stderr: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    message: str = ""
    cost: float = field(default=np.nan, repr=False)


def least_squares_fit(model, x, y, p0, weights=None, bounds=None, x_scale="jac", tol=1e-15):
    """Weighted nonlinear least squares of ``model(x, *p)`` against ``y``.

    ``weights`` multiply the residuals (pass ``1/sigma``). ``tol`` is passed
    to scipy as xtol, ftol and gtol. Standard errors
    come from the Gauss-Newton curvature ``(J^T J)^-1`` scaled by the reduced
    chi-square. A singular curvature matrix marks the fit as not converged.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if y.size < p0.size:
        raise ValueError("need at least as many data points as parameters")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)

    def resid(p):
        return w * (model(x, *p) - y)

    kwargs = {} if bounds is None else {"bounds": bounds}
    # trust-region reflective: MINPACK's lm stalls ~1e-9 short of the optimum
    # with its forward-difference Jacobian on noiseless data
    res = optimize.least_squares(
        resid, p0, method="trf", x_scale=x_scale, xtol=tol, ftol=tol, gtol=tol, max_nfev=2000 * (p0.size + 1), **kwargs
    )
    jac = res.jac
    dof = max(y.size - p0.size, 1)
    chi2 = float(res.fun @ res.fun)
    converged = res.status > 0
    message = res.message
    try:
        jtj = jac.T @ jac
        if np.linalg.cond(jtj) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned curvature")
        cov = np.linalg.inv(jtj) * (chi2 / dof)
        stderr = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError as exc:
        stderr = np.full(p0.size, np.inf)
        converged = False
        message = f"{message}; singular curvature: {exc}"
    return FitResult(
        params=res.x, stderr=stderr, residual_norm=float(np.sqrt(chi2)),
        converged=bool(converged), iterations=int(res.nfev), message=message,
        cost=float(res.cost),
    )


def multistart_fit(model, x, y, starts, weights=None, bounds=None, tol=1e-15):
    """Run :func:`least_squares_fit` from every start and keep the best.

    Ties in the cost are broken by the lexicographically smallest parameter
    vector so the selection does not depend on evaluation order.
    """
    results = [least_squares_fit(model, x, y, p0, weights=weights, bounds=bounds, tol=tol)
               for p0 in starts]
    ok = [r for r in results if np.all(np.isfinite(r.params))]
    if not ok:
        raise NumericalError("every start of the multi-start fit failed")
    best_cost = min(r.cost for r in ok)
    tied = [r for r in ok if r.cost <= best_cost * (1 + 1e-12) + 1e-300]
    tied.sort(key=lambda r: tuple(r.params))
    return tied[0]
