"""Closed-form Riemann-Liouville fractional calculus on piecewise-linear
and polynomial functions of one variable.

A compactly supported piecewise-linear function can be written as a sum of
clamped ramps, v(x) = sum_j c_j (x - s_j)_+, where the c_j are the jumps of
the slope at the breakpoints s_j.  Fractional derivatives of ramps are
single power functions, so derivatives of traces reduce to short power
sums.  These power sums are the numeric kernel under the stiffness
assembly and the manufactured right-hand sides.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, rgamma

__all__ = [
    "PiecewiseLinearTrace",
    "SlopeJumpForm",
    "to_slope_jumps",
    "rl_left_deriv",
    "rl_right_deriv",
    "rl_power_rule",
    "frac_deriv_polynomial",
]


def _check_order(alpha):
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"fractional order alpha must lie in (1/2, 1), got {alpha}")


@dataclass(frozen=True)
class PiecewiseLinearTrace:
    """Continuous piecewise-linear function with compact support.

    Parameters
    ----------
    breakpoints : array
        Strictly increasing abscissae s_0 < ... < s_m.
    values : array
        Function values at the breakpoints.  The first and last value must
        be zero (the function is zero outside [s_0, s_m]); values within
        1e-12 of the overall scale are snapped to exact zero.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __init__(self, breakpoints, values):
        s = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float).copy()
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise ValueError("breakpoints and values must be 1D arrays of equal length >= 2")
        if not np.all(np.diff(s) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        scale = np.max(np.abs(v)) if v.size else 0.0
        tol = 1e-12 * max(scale, 1.0)
        if abs(v[0]) > tol or abs(v[-1]) > tol:
            raise ValueError("trace must vanish at its first and last breakpoint")
        v[0] = 0.0
        v[-1] = 0.0
        object.__setattr__(self, "breakpoints", s)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.breakpoints, self.values, left=0.0, right=0.0)
        return y if y.ndim else float(y)

    def dilate(self, lam):
        """Return the trace stretched by ``lam`` (same values at lam*s_j)."""
        return PiecewiseLinearTrace(lam * self.breakpoints, self.values)


@dataclass(frozen=True)
class SlopeJumpForm:
    """Slope-jump representation v(x) = sum_j coeffs_j * (x - locations_j)_+.

    Compact support forces sum(coeffs) = 0 and sum(coeffs * locations) = 0.
    """

    locations: np.ndarray
    coeffs: np.ndarray

    def __init__(self, locations, coeffs):
        s = np.asarray(locations, dtype=float)
        c = np.asarray(coeffs, dtype=float)
        if s.shape != c.shape or s.ndim != 1:
            raise ValueError("locations and coeffs must be 1D arrays of equal length")
        object.__setattr__(self, "locations", s)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x):
        """Reconstruct the piecewise-linear function at ``x``."""
        x = np.asarray(x, dtype=float)
        d = x[..., None] - self.locations
        y = np.sum(self.coeffs * np.maximum(d, 0.0), axis=-1)
        return y if y.ndim else float(y)

    def reflect(self):
        """Slope-jump form of x -> v(-x) (same coefficients at -locations)."""
        return SlopeJumpForm(-self.locations[::-1], self.coeffs[::-1])


def to_slope_jumps(trace):
    """Convert a trace to its slope-jump form.

    The jump at breakpoint s_j is slope(j+1) - slope(j) with the outside
    slopes equal to zero; exact-zero jumps are dropped.

    Parameters
    ----------
    trace : PiecewiseLinearTrace

    Returns
    -------
    SlopeJumpForm
        Satisfies v(x) = sum_j c_j (x - s_j)_+ for all x.
    """
    s = trace.breakpoints
    v = trace.values
    slopes = np.diff(v) / np.diff(s)
    padded = np.concatenate(([0.0], slopes, [0.0]))
    jumps = np.diff(padded)
    keep = jumps != 0.0
    return SlopeJumpForm(s[keep], jumps[keep])


def rl_left_deriv(form, alpha, x):
    """Left Riemann-Liouville derivative of order ``alpha`` of a slope-jump form.

    The lower limit is -infinity, which coincides with the support start
    for compactly supported functions.  The derivative of a clamped ramp
    (x - s)_+ is (x - s)_+^(1-alpha) / Gamma(2-alpha), so

        D^alpha v(x) = sum_j c_j (x - s_j)_+^(1-alpha) / Gamma(2-alpha).

    Parameters
    ----------
    form : SlopeJumpForm
    alpha : float
        Order in (1/2, 1).
    x : float or array

    Returns
    -------
    float or ndarray
        Zero for x at or below the support start; continuous in x.
    """
    _check_order(alpha)
    x = np.asarray(x, dtype=float)
    d = x[..., None] - form.locations
    powed = np.where(d > 0.0, np.power(np.maximum(d, 0.0), 1.0 - alpha), 0.0)
    out = powed @ form.coeffs / gamma(2.0 - alpha)
    return out if out.ndim else float(out)


def rl_right_deriv(form, alpha, x):
    """Right Riemann-Liouville derivative (upper limit +infinity).

    Mirror of :func:`rl_left_deriv`: equals the left derivative of the
    reflected form evaluated at -x, i.e.

        D^alpha v(x) = sum_j c_j (s_j - x)_+^(1-alpha) / Gamma(2-alpha),

    with the same jump coefficients (compact support makes the reflected
    ramp expansion share them).
    """
    _check_order(alpha)
    x = np.asarray(x, dtype=float)
    d = form.locations - x[..., None]
    powed = np.where(d > 0.0, np.power(np.maximum(d, 0.0), 1.0 - alpha), 0.0)
    out = powed @ form.coeffs / gamma(2.0 - alpha)
    return out if out.ndim else float(out)


def rl_power_rule(p, mu, x):
    """Fractional derivative of a monomial on [0, infinity).

    Order-``mu`` left derivative with lower limit 0 of x**p:

        Gamma(p+1) / Gamma(p+1-mu) * x**(p-mu).

    The reciprocal Gamma is used so that nonpositive-integer poles of
    Gamma(p+1-mu) give an exact zero factor.

    Parameters
    ----------
    p : int
        Nonnegative monomial exponent; p >= 1 is required when mu > 1 so
        the result is integrable at 0.
    mu : float
        Order in [0, 2).
    x : float or array
        Coordinate(s), >= 0.

    Returns
    -------
    float or ndarray
    """
    if p < 0 or p != int(p):
        raise ValueError(f"exponent p must be a nonnegative integer, got {p}")
    if not 0.0 <= mu < 2.0:
        raise ValueError(f"order mu must lie in [0, 2), got {mu}")
    if mu > 1.0 and p < 1:
        raise ValueError("need p >= 1 when mu > 1 so the derivative is integrable")
    p = int(p)
    x = np.asarray(x, dtype=float)
    coef = gamma(p + 1.0) * rgamma(p + 1.0 - mu)
    if coef == 0.0:
        out = np.zeros_like(x)
    else:
        out = coef * np.power(x, p - mu)
    return out if out.ndim else float(out)


def frac_deriv_polynomial(coeffs, mu, x):
    """Order-``mu`` left derivative (lower limit 0) of sum_p coeffs[p] x**p.

    Parameters
    ----------
    coeffs : sequence
        Monomial coefficients, coeffs[p] multiplying x**p.
    mu : float
        Order in [0, 2); when mu > 1 the polynomial must vanish at 0
        (coeffs[0] == 0).
    x : float or array

    Returns
    -------
    float or ndarray
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if mu > 1.0 and coeffs.size and coeffs[0] != 0.0:
        raise ValueError("polynomial must vanish at 0 when mu > 1")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p, a in enumerate(coeffs):
        if a != 0.0:
            out = out + a * rl_power_rule(p, mu, x)
    return out if out.ndim else float(out)
