"""Empirical moments, moment-ratio curves and their relaxation fits."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .distributions import DistributionSpec, Kind, theoretical_moment
from .errors import InsufficientDataError, ValidationError
from .series import tau_returns

_FAMILY_KIND = {
    "heston": Kind.HESTON_PD,
    "ga": Kind.HESTON_PD,
    "multiplicative": Kind.MULT_PD,
    "iga": Kind.MULT_PD,
}


@dataclass(frozen=True)
class MomentFitResult:
    """Parameters of ratio(tau) = 1 + b exp(-a tau) for moment half-order n."""

    n: int
    a: float
    b: float
    residual_rms: float
    degenerate: bool = False

    def __call__(self, tau):
        if self.degenerate:
            return np.ones_like(np.asarray(tau, dtype=float))
        return 1.0 + self.b * np.exp(-self.a * np.asarray(tau, dtype=float))


def empirical_moment(sample, order):
    z = np.asarray(getattr(sample, "values", sample), dtype=float)
    if order < 2 or order % 2:
        raise ValidationError(f"order must be a positive even integer, got {order}")
    if z.size == 0:
        raise InsufficientDataError("empty sample")
    return float(np.mean(z**order))


def pd_kind(family):
    try:
        return _FAMILY_KIND[str(getattr(family, "value", family)).lower()]
    except KeyError:
        raise ValidationError(f"unknown model family {family!r}") from None


def moment_ratio(sample, spec, n):
    """(mean z^2n / E(z^2n))^(1/2n) for one return sample."""
    return (empirical_moment(sample, 2 * n) / theoretical_moment(spec, 2 * n)) ** (1.0 / (2 * n))


def moment_ratio_curve(series, mu, family, params, n, taus):
    """Moment ratio against tau, with fixed (alpha, theta) for every horizon."""
    alpha, theta = params
    kind = pd_kind(family)
    # fail before any work if the moment does not exist
    theoretical_moment(DistributionSpec(kind, alpha, theta, 1.0), 2 * n)
    out = []
    for tau in taus:
        spec = DistributionSpec(kind, alpha, theta, tau)
        out.append((int(tau), moment_ratio(tau_returns(series, tau, mu), spec, n)))
    return out


def linear_fit(points):
    """Ordinary least squares y = slope x + intercept; returns (slope, intercept, r_squared)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValidationError("need at least two points")
    x, y = pts[:, 0], pts[:, 1]
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0.0:
        raise ValidationError("all x values are equal")
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - slope * x - intercept) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, r2


def fit_relaxation(curve, n=0):
    """Least-squares fit of 1 + b exp(-a tau) with a > 0.

    Started from a straight-line fit of ln|ratio - 1| against tau.  A curve
    that sits exactly at 1 gives a degenerate result (b = 0, a = nan).
    """
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise ValidationError("relaxation fit needs at least 3 points")
    tau, ratio = pts[:, 0], pts[:, 1]
    dev = ratio - 1.0
    if np.all(dev == 0.0):
        return MomentFitResult(n, math.nan, 0.0, 0.0, degenerate=True)

    sign = 1.0 if dev[np.argmax(np.abs(dev))] > 0 else -1.0
    use = sign * dev > 0
    a0, b0 = 1.0 / max(np.ptp(tau), 1.0), sign * float(np.max(np.abs(dev)))
    if np.count_nonzero(use) >= 2 and np.ptp(tau[use]) > 0:
        slope, intercept, _ = linear_fit(np.column_stack([tau[use], np.log(sign * dev[use])]))
        if slope < 0:
            a0, b0 = -slope, sign * math.exp(intercept)

    def resid(p):
        return 1.0 + p[1] * np.exp(-math.exp(p[0]) * tau) - ratio

    res = optimize.least_squares(resid, [math.log(a0), b0], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=10000)
    a, b = math.exp(res.x[0]), float(res.x[1])
    rms = float(np.sqrt(np.mean(resid(res.x) ** 2)))
    return MomentFitResult(n, a, b, rms)
