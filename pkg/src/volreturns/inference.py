"""Maximum-likelihood fits of the return densities and goodness-of-fit measures."""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .distributions import DistributionSpec, Kind, log_pdf, pdf
from .errors import FitError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 50
ALPHA0_BOUNDS = (1.01, 1e4)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_KNOT_SPAN = 60.0  # knots cover +-60 standard deviations
_HALF_PANELS = 200


@dataclass(frozen=True)
class FitResult:
    spec: DistributionSpec
    log_likelihood: float
    n_samples: int
    converged: bool
    n_evals: int
    initial_log_likelihood: float = math.nan


def _values(sample):
    return np.asarray(getattr(sample, "values", sample), dtype=float)


# ---------------------------------------------------------------------------
# CDF


class _CdfTable:
    """Cumulative probabilities at sinh-spaced knots, built once per spec.

    Between knots the CDF is completed with a 16-point Gauss-Legendre rule
    from the nearest knot on the left, so it is monotone wherever the density
    is positive.  Beyond the outermost knots adaptive quadrature is used.
    """

    def __init__(self, spec):
        self.spec = spec
        s = spec.scale
        u = np.sinh(np.linspace(-math.asinh(_KNOT_SPAN), math.asinh(_KNOT_SPAN), 2 * _HALF_PANELS + 1))
        u[_HALF_PANELS] = 0.0
        self.knots = s * u
        a, b = self.knots[:-1], self.knots[1:]
        panels = self._gauss(a, b)
        left = self._quad(-np.inf, self.knots[0])
        self.values = left + np.concatenate([[0.0], np.cumsum(panels)])

    def _gauss(self, a, b):
        half = 0.5 * (b - a)
        nodes = (a + half)[:, None] + half[:, None] * _GL_NODES[None, :]
        return half * (pdf(self.spec, nodes.ravel()).reshape(nodes.shape) @ _GL_WEIGHTS)

    def _quad(self, a, b):
        val, err = integrate.quad(lambda t: pdf(self.spec, t), a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        if err > 1e-9:
            raise NumericalError("CDF tail quadrature did not converge", achieved=err)
        return val

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape)
        flat = z.ravel()
        res = out.ravel()
        knots = self.knots
        idx = np.searchsorted(knots, flat, side="right") - 1
        inside = (idx >= 0) & (idx < len(knots) - 1)
        if np.any(inside):
            i = idx[inside]
            res[inside] = self.values[i] + self._gauss(knots[i], flat[inside])
        for j in np.nonzero(~inside)[0]:
            zj = flat[j]
            if zj == -np.inf:
                res[j] = 0.0
            elif zj == np.inf:
                res[j] = 1.0
            elif zj < knots[0]:
                res[j] = self._quad(-np.inf, zj)
            else:
                res[j] = self.values[-1] + self._quad(knots[-1], zj)
        np.clip(res, 0.0, 1.0, out=res)
        return out.reshape(z.shape)


@functools.lru_cache(maxsize=64)
def _cdf_table(spec):
    return _CdfTable(spec)


def cdf(spec, z):
    """Distribution function of ``spec`` (absolute accuracy ~1e-10)."""
    out = _cdf_table(spec)(z)
    return float(out) if out.ndim == 0 else out


def ks_statistic(sample, spec, loc=0.0):
    """One-sample Kolmogorov-Smirnov distance between the data and ``spec`` shifted by ``loc``."""
    z = np.sort(_values(sample))
    n = len(z)
    if n < 1:
        raise ValidationError("KS statistic needs at least one value")
    f = cdf(spec, z - loc)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


# ---------------------------------------------------------------------------
# Fits


def fit_normal(sample):
    """Zero-mean normal fit: sigma^2 is the mean of z^2."""
    z = _values(sample)
    n = len(z)
    if n < 2:
        raise FitError("normal fit needs at least 2 values")
    s2 = float(np.mean(z * z))
    if s2 == 0.0:
        raise FitError("sample has zero variance")
    ll = -0.5 * n * (math.log(2.0 * math.pi * s2) + 1.0)
    spec = DistributionSpec(Kind.NORMAL, tau=getattr(sample, "tau", 1), sigma=math.sqrt(s2))
    return FitResult(spec, ll, n, True, 1, ll)


def moment_start(values, tau, family):
    """(alpha0, theta0) from the sample variance and kurtosis.

    Inverts E(z^4) / E(z^2)^2 = 3 (1 + alpha) / alpha (Heston) or
    3 alpha / (alpha - theta) (multiplicative).
    """
    var = float(np.var(values))
    theta0 = var / tau
    kurt = float(np.mean((values - values.mean()) ** 4) / var**2)
    excess = kurt - 3.0
    if family == "heston":
        ratio = 3.0 / excess if excess > 0 else ALPHA0_BOUNDS[1]
        return float(np.clip(ratio, *ALPHA0_BOUNDS)), theta0
    ratio = kurt / excess if excess > 0 else ALPHA0_BOUNDS[1]
    return theta0 * float(np.clip(ratio, *ALPHA0_BOUNDS)), theta0


def log_likelihood(spec, values):
    return float(np.sum(log_pdf(spec, values)))


def mle_fit(sample, family, start=None, max_evals=2000):
    """Maximum-likelihood (alpha, theta) for one kind at fixed tau.

    Nelder-Mead in (ln alpha, ln theta), started from the moment estimate, or
    from ``start`` = (alpha, theta).  JP kinds start from the matching PD fit
    when no start is given.  One restart from a perturbed point is tried if
    the simplex search does not converge.
    """
    kind = Kind(family)
    if kind is Kind.NORMAL:
        return fit_normal(sample)
    z = _values(sample)
    tau = getattr(sample, "tau", 1)
    if len(z) < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} values, got {len(z)}")
    if not np.all(np.isfinite(z)):
        raise FitError("sample contains non-finite values")
    if np.var(z) == 0.0:
        raise FitError("sample has zero variance")

    if start is None:
        if kind.is_jp:
            pd = mle_fit(sample, Kind.HESTON_PD if kind.family == "heston" else Kind.MULT_PD,
                         max_evals=max_evals)
            start = (pd.spec.alpha, pd.spec.theta)
        else:
            start = moment_start(z, tau, kind.family)

    evals = 0

    def nll(p):
        nonlocal evals
        evals += 1
        try:
            spec = DistributionSpec(kind, math.exp(p[0]), math.exp(p[1]), tau)
        except (ValidationError, OverflowError):
            return 1e300
        with np.errstate(all="ignore"):
            val = -log_likelihood(spec, z)
        return val if math.isfinite(val) else 1e300

    x0 = np.log(np.asarray(start, dtype=float))
    initial_ll = -nll(x0)
    converged = False
    res = None
    for attempt in range(2):
        simplex = np.array([x0, x0 + [0.2, 0.0], x0 + [0.0, 0.2]])
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-8,
                                         "maxfev": max_evals})
        converged = bool(res.success and res.fun < 1e300)
        if converged:
            break
        logger.info("Nelder-Mead did not converge for %s at tau=%s, restarting", kind.value, tau)
        x0 = res.x + np.array([0.1, -0.1])
    spec = DistributionSpec(kind, math.exp(res.x[0]), math.exp(res.x[1]), tau)
    return FitResult(spec, -float(res.fun), len(z), converged, evals, initial_ll)


def ll_ratio(fit, baseline):
    """Ratio of log likelihoods, fit / baseline."""
    if baseline.log_likelihood == 0.0:
        raise NumericalError("baseline log likelihood is zero; ratio undefined")
    return fit.log_likelihood / baseline.log_likelihood


def ll_difference(fit, baseline):
    return fit.log_likelihood - baseline.log_likelihood
