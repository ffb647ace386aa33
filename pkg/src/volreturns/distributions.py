"""Closed-form densities of tau-day log returns.

Two variance laws are mixed with Gaussian noise:

* Heston: stationary variance ~ Gamma(shape alpha, scale theta/alpha), which
  gives a variance-gamma (Bessel-K) return density;
* multiplicative: stationary variance ~ InvGamma(shape alpha/theta + 1,
  scale alpha), which gives a Student-type return density.

The product-distribution (PD) kinds ignore the Ito drift ``-v/2 dt``; the
joint-probability (JP) kinds keep it, which adds the ``exp(-z/2)`` skew and
shifts the Bessel argument.  All densities are evaluated in log space.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .errors import DomainError, MomentDoesNotExistError, NumericalError, ValidationError
from .special import log_bessel_k, log_gamma_ratio

LOG_SQRT_PI = 0.5 * math.log(math.pi)
LN2 = math.log(2.0)


class Kind(str, Enum):
    HESTON_PD = "ga"
    HESTON_JP = "ga-jp"
    MULT_PD = "iga"
    MULT_JP = "iga-jp"
    NORMAL = "normal"

    @property
    def family(self):
        if self in (Kind.HESTON_PD, Kind.HESTON_JP):
            return "heston"
        if self in (Kind.MULT_PD, Kind.MULT_JP):
            return "multiplicative"
        return "normal"

    @property
    def is_jp(self):
        return self in (Kind.HESTON_JP, Kind.MULT_JP)


@dataclass(frozen=True)
class DistributionSpec:
    """A return density with its parameters.

    ``alpha`` and ``theta`` parameterize the Heston and multiplicative kinds
    (``theta`` is the mean daily variance), ``sigma`` the zero-mean normal.
    ``tau`` is the return horizon in trading days.
    """

    kind: Kind
    alpha: Optional[float] = None
    theta: Optional[float] = None
    tau: float = 1.0
    sigma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if self.kind is Kind.NORMAL:
            if self.sigma is None or not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise ValidationError(f"normal kind needs sigma > 0, got {self.sigma}")
            return
        for name in ("alpha", "theta"):
            value = getattr(self, name)
            if value is None or not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive, got {value}")
        # the Bessel order alpha - 1/2 must be positive for a finite density at z = 0
        if self.kind.family == "heston" and self.alpha <= 0.5:
            raise ValidationError(f"Heston kinds need alpha > 1/2, got {self.alpha}")

    @property
    def family(self):
        return self.kind.family

    @property
    def scale(self):
        """Standard deviation of the PD density (sqrt(theta tau)) or sigma."""
        if self.kind is Kind.NORMAL:
            return self.sigma
        return math.sqrt(self.theta * self.tau)

    @property
    def shape(self):
        """Shape of the stationary variance law: alpha (Gamma) or alpha/theta + 1 (InvGamma)."""
        if self.family == "heston":
            return self.alpha
        if self.family == "multiplicative":
            return self.alpha / self.theta + 1.0
        raise ValidationError("normal kind has no variance law")

    def with_kind(self, kind):
        return DistributionSpec(Kind(kind), self.alpha, self.theta, self.tau, self.sigma)


def _as_array(z):
    za = np.asarray(z, dtype=float)
    return za.ndim == 0, np.atleast_1d(za)


def _log_xnu_knu(nu, x):
    """ln(x^nu K_nu(x)) with the x -> 0 limit 2^(nu-1) Gamma(nu) at x = 0."""
    out = np.empty_like(x)
    zero = x == 0
    out[zero] = (nu - 1.0) * LN2 + gammaln(nu)
    if np.any(~zero):
        xs = x[~zero]
        out[~zero] = nu * np.log(xs) + log_bessel_k(nu, xs)
    return out


def _log_heston_pd(spec, z):
    alpha = spec.alpha
    nu = alpha - 0.5
    c = math.sqrt(2.0 * alpha / (spec.theta * spec.tau))
    const = -nu * LN2 - LOG_SQRT_PI - gammaln(alpha) + math.log(c)
    return const + _log_xnu_knu(nu, c * np.abs(z))


def _log_heston_jp(spec, z):
    alpha = spec.alpha
    nu = alpha - 0.5
    c0sq = 2.0 * alpha / (spec.theta * spec.tau)
    c1sq = c0sq + 0.25
    # alpha ln c0^2 - nu ln c1^2, written without the large cancelling logs
    power = -alpha * math.log1p(0.25 / c0sq) + 0.5 * math.log(c1sq)
    const = -nu * LN2 - LOG_SQRT_PI - gammaln(alpha) + power
    return const + _log_xnu_knu(nu, math.sqrt(c1sq) * np.abs(z)) - 0.5 * z


def _log_mult_pd(spec, z):
    a = spec.shape
    two_at = 2.0 * spec.alpha * spec.tau
    const = log_gamma_ratio(a, 0.5) - LOG_SQRT_PI - 0.5 * math.log(two_at)
    return const - (a + 0.5) * np.log1p(z * z / two_at)


def _log_mult_jp(spec, z):
    a = spec.shape
    two_at = 2.0 * spec.alpha * spec.tau
    log1pu2 = np.log1p(z * z / two_at)
    const = -2.0 * a * LN2 - LOG_SQRT_PI - gammaln(a) + 0.25 * (2.0 * a - 1.0) * math.log(two_at)
    arg = 0.5 * math.sqrt(two_at) * np.exp(0.5 * log1pu2)
    return const - 0.25 * (2.0 * a + 1.0) * log1pu2 + log_bessel_k(a + 0.5, arg) - 0.5 * z


def _log_normal(spec, z):
    s2 = spec.sigma**2
    return -0.5 * math.log(2.0 * math.pi * s2) - 0.5 * z * z / s2


_LOG_PDF = {
    Kind.HESTON_PD: _log_heston_pd,
    Kind.HESTON_JP: _log_heston_jp,
    Kind.MULT_PD: _log_mult_pd,
    Kind.MULT_JP: _log_mult_jp,
    Kind.NORMAL: _log_normal,
}


def log_pdf(spec, z):
    """Log density of ``spec`` at ``z`` (scalar or array)."""
    scalar, za = _as_array(z)
    out = _LOG_PDF[spec.kind](spec, za)
    return float(out[0]) if scalar else out


def pdf(spec, z):
    scalar, za = _as_array(z)
    out = np.exp(_LOG_PDF[spec.kind](spec, za))
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Marginalization of the joint law of drift and diffusion parts


def _log_gamma_density(x, shape, scale):
    return (shape - 1.0) * np.log(x) - x / scale - gammaln(shape) - shape * math.log(scale)


def _log_invgamma_density(x, shape, scale):
    return shape * math.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x


def _log_drift_density(spec, x):
    """ln f_X(x) for X = -v tau / 2 (x < 0)."""
    tau = spec.tau
    w = -2.0 * x / tau
    if spec.family == "heston":
        return math.log(2.0 / tau) + math.log(spec.alpha) + _log_gamma_density(spec.alpha * w, spec.alpha, spec.theta)
    shape = (spec.alpha + spec.theta) / spec.theta
    return math.log(2.0 / tau) + _log_invgamma_density(w, shape, spec.alpha)


def _log_conditional_density(spec, y, x):
    """ln f_{Y|X}(y | x): Y = sqrt(v) dW with dW ~ N(0, tau), v = -2x/tau."""
    tau = spec.tau
    v = -2.0 * x / tau
    return -0.5 * math.log(2.0 * math.pi * tau) - y * y / (2.0 * v * tau) - 0.5 * np.log(v)


def pdf_jp_numerical(spec, z, rtol=1e-12):
    """JP density at ``z`` by direct quadrature of the joint law.

    Integrates ``f_X(x) f_{Y|X}(z - x | x)`` over ``x < 0`` in the variable
    ``u = ln(-2x / tau)`` (the log variance), where the integrand is a smooth
    bump.  Independent of the closed forms used by :func:`pdf`.
    """
    if not spec.kind.is_jp:
        raise ValidationError("pdf_jp_numerical needs a JP kind")
    tau = spec.tau
    z = float(z)

    def g(u):
        u = np.asarray(u, dtype=float)
        x = -0.5 * tau * np.exp(u)
        return _log_drift_density(spec, x) + _log_conditional_density(spec, z - x, x) + np.log(0.5 * tau) + u

    grid = math.log(spec.theta) + np.linspace(-60.0, 60.0, 4801)
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        values = g(grid)
    values = np.where(np.isfinite(values), values, -np.inf)
    imax = int(np.argmax(values))
    if not np.isfinite(values[imax]):
        return 0.0
    lo_idx = max(imax - 1, 0)
    hi_idx = min(imax + 1, len(grid) - 1)
    peak = optimize.minimize_scalar(lambda u: -float(g(u)), bounds=(grid[lo_idx], grid[hi_idx]), method="bounded",
                                    options={"xatol": 1e-12})
    u_peak = float(peak.x)
    gmax = max(float(g(u_peak)), float(values[imax]))
    inside = np.nonzero(values > gmax - 80.0)[0]
    lo = grid[max(inside[0] - 1, 0)]
    hi = grid[min(inside[-1] + 1, len(grid) - 1)]

    def integrand(u):
        return math.exp(float(g(u)) - gmax)

    val, err = integrate.quad(integrand, lo, hi, points=[u_peak], epsabs=0.0, epsrel=rtol, limit=500)
    if not (val > 0) or err > 1e-8 * val:
        raise NumericalError("JP marginalization did not converge", achieved=err / val if val > 0 else err)
    return math.exp(gmax) * val


# ---------------------------------------------------------------------------
# Moments, ratios, sampling


def _double_factorial_odd(n):
    return math.prod(range(1, 2 * n, 2))


def theoretical_moment(spec, order):
    """Exact E(z^order) of a PD (or normal) density.

    Heston: (2n-1)!! (theta tau / alpha)^n Gamma(alpha + n) / Gamma(alpha) for
    any even order.  Multiplicative: orders 2 and 4 only; the 4th needs
    alpha > theta and higher ones are not offered because of the power tail.
    """
    if order <= 0 or order % 2:
        raise ValidationError(f"order must be a positive even integer, got {order}")
    n = order // 2
    if spec.kind is Kind.NORMAL:
        return _double_factorial_odd(n) * spec.sigma ** order
    if spec.kind.is_jp:
        raise ValidationError("closed-form moments are defined for PD kinds")
    tt = spec.theta * spec.tau
    if spec.family == "heston":
        return _double_factorial_odd(n) * (tt / spec.alpha) ** n * math.exp(log_gamma_ratio(spec.alpha, n))
    if n == 1:
        return tt
    if n == 2:
        if spec.alpha <= spec.theta:
            raise MomentDoesNotExistError("E_M(z^4) needs alpha > theta")
        return 3.0 * spec.alpha * tt * tt / (spec.alpha - spec.theta)
    raise MomentDoesNotExistError(f"multiplicative moment of order {order} is not available (power-law tail)")


def pd_jp_ratio(spec_pd, spec_jp, z):
    """JP density divided by PD density, phi(z) / psi(z).

    This orientation is the one whose small-z expansion is
    1 - z/2 + (z - 2) theta alpha tau / (8 (2 alpha + theta)) for the
    multiplicative family.
    """
    if spec_pd.kind.is_jp or not spec_jp.kind.is_jp or spec_pd.family != spec_jp.family:
        raise ValidationError("need a PD spec and a JP spec of the same family")
    if (spec_pd.alpha, spec_pd.theta, spec_pd.tau) != (spec_jp.alpha, spec_jp.theta, spec_jp.tau):
        raise ValidationError("PD and JP specs must share alpha, theta and tau")
    log_phi = log_pdf(spec_jp, z)
    log_psi = log_pdf(spec_pd, z)
    if np.any(~np.isfinite(log_phi)) or np.any(~np.isfinite(log_psi)):
        raise NumericalError("density underflow in PD/JP ratio")
    return np.exp(np.asarray(log_phi) - np.asarray(log_psi)) if np.ndim(z) else math.exp(log_phi - log_psi)


def sample_variance(spec, size, rng):
    """Draws from the stationary variance law underlying ``spec`` (per-day units)."""
    if spec.family == "heston":
        return rng.gamma(spec.alpha, spec.theta / spec.alpha, size)
    if spec.family == "multiplicative":
        return spec.alpha / rng.gamma(spec.shape, 1.0, size)
    raise ValidationError("normal kind has no variance law")


def sample(spec, size, rng):
    """Product-construction samples: sqrt(v tau) * eps, minus v tau / 2 for JP kinds."""
    if spec.kind is Kind.NORMAL:
        return spec.sigma * rng.standard_normal(size)
    v = sample_variance(spec, size, rng)
    z = np.sqrt(v * spec.tau) * rng.standard_normal(size)
    if spec.kind.is_jp:
        z -= 0.5 * v * spec.tau
    return z

