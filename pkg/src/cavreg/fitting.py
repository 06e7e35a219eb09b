"""Least-squares fitters used by the experiment harness.

Both fitters are dependency-free: ordinary least squares in closed form, and
a saturating-exponential fit that solves the amplitude linearly for each
trial decay time and refines the decay time by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    intercept_stderr: float
    slope_stderr: float


def fit_linear(xs, ys) -> LinearFit:
    """Ordinary least squares y = intercept + slope*x with standard errors."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    if n < 3 or len(ys) != n:
        raise ConfigurationError("linear fit needs at least 3 (x, y) points")
    sxx = float(((xs - xs.mean()) ** 2).sum())
    if sxx == 0.0:
        raise ConfigurationError("degenerate x-range in linear fit")
    slope = float(((xs - xs.mean()) * (ys - ys.mean())).sum() / sxx)
    intercept = float(ys.mean() - slope * xs.mean())
    resid = ys - intercept - slope * xs
    s2 = float((resid**2).sum()) / (n - 2)
    slope_se = math.sqrt(s2 / sxx)
    intercept_se = math.sqrt(s2 * (1.0 / n + xs.mean() ** 2 / sxx))
    return LinearFit(intercept, slope, intercept_se, slope_se)


@dataclass(frozen=True)
class SaturatingExpFit:
    p_inf: float
    tau: float
    p_inf_stderr: float
    tau_stderr: float
    rss: float
    converged: bool
    note: str = ""


def _amplitude(ts: np.ndarray, ps: np.ndarray, tau: float, p_inf_max: float):
    basis = 1.0 - np.exp(-ts / tau)
    denom = float((basis * basis).sum())
    if denom == 0.0:
        return 0.0, float((ps**2).sum()), basis
    p_inf = float((ps * basis).sum() / denom)
    p_inf = min(max(p_inf, 0.0), p_inf_max)
    resid = ps - p_inf * basis
    return p_inf, float((resid**2).sum()), basis


def fit_saturating_exponential(
    ts,
    ps,
    *,
    p_inf_max: float = 1.0,
    rel_tol: float = 1e-9,
    max_iter: int = 10_000,
) -> SaturatingExpFit:
    """Fit p(t) = p_inf * (1 - exp(-t/tau)) by least squares.

    For each candidate tau the amplitude has a closed-form least-squares
    solution (clamped to [0, p_inf_max]); tau is located on a log-spaced grid
    and refined by golden-section search.  A fit whose optimum sticks to the
    grid boundary, or data with no rise at all, is returned flagged rather
    than raising.
    """
    ts = np.asarray(ts, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if len(ts) < 5 or len(ts) != len(ps):
        raise ConfigurationError("saturating-exponential fit needs >= 5 points")
    if np.any((ps < 0) | (ps > 1)):
        raise ConfigurationError("probabilities must lie in [0, 1]")
    if np.any(ts <= 0):
        raise ConfigurationError("times must be positive")

    if float(ps.max()) == 0.0:
        return SaturatingExpFit(
            0.0, math.nan, 0.0, math.nan, 0.0, False, "no rise: tau unidentifiable"
        )

    t_lo = float(ts.min()) / 100.0
    t_hi = float(ts.max()) * 100.0
    grid = np.logspace(math.log10(t_lo), math.log10(t_hi), 200)
    rss_grid = [_amplitude(ts, ps, tau, p_inf_max)[1] for tau in grid]
    best = int(np.argmin(rss_grid))
    at_edge = best in (0, len(grid) - 1)

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _amplitude(ts, ps, c, p_inf_max)[1]
    fd = _amplitude(ts, ps, d, p_inf_max)[1]
    iterations = 0
    while abs(b - a) > rel_tol * (abs(a) + abs(b)) and iterations < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _amplitude(ts, ps, c, p_inf_max)[1]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _amplitude(ts, ps, d, p_inf_max)[1]
        iterations += 1
    tau = 0.5 * (a + b)
    p_inf, rss, basis = _amplitude(ts, ps, tau, p_inf_max)

    # linearized standard errors at the optimum
    d_pinf = basis
    d_tau = -p_inf * ts / tau**2 * np.exp(-ts / tau)
    jac = np.column_stack([d_pinf, d_tau])
    dof = max(len(ts) - 2, 1)
    sigma2 = rss / dof
    note = ""
    try:
        cov = sigma2 * np.linalg.inv(jac.T @ jac)
        p_inf_se = math.sqrt(max(cov[0, 0], 0.0))
        tau_se = math.sqrt(max(cov[1, 1], 0.0))
    except np.linalg.LinAlgError:
        p_inf_se = tau_se = math.nan
        note = "singular Jacobian: parameter errors unavailable"

    converged = not at_edge and iterations < max_iter
    if at_edge:
        note = (note + "; " if note else "") + (
            f"optimum at tau grid boundary ({tau:.3g} ms): saturation not resolved"
        )
    if p_inf == p_inf_max:
        note = (note + "; " if note else "") + "amplitude at its upper bound"
    return SaturatingExpFit(p_inf, tau, p_inf_se, tau_se, rss, converged, note)
