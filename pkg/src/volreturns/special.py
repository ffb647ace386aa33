"""Log-space special functions: modified Bessel K of real order, gamma ratios.

``log_bessel_k`` follows the classic Temme / Steed split for the fractional
part of the order (|mu| <= 1/2), climbs to the requested order with the
stable forward recurrence, and switches to the Debye uniform expansion once
the order is large.  Everything is kept in log form so that orders in the
thousands and arguments near zero stay representable.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NumericalError

EPS = 1e-16
DEBYE_MIN_ORDER = 50.0
_DEBYE_TERMS = 12
_MAXIT = 10000

# Taylor coefficients of 1/Gamma(1 + x) about x = 0.
_RGAMMA1P = (
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
)


def _debye_polynomials(n_terms):
    """Coefficients (ascending powers of p) of the Debye polynomials u_k(p)."""
    polys = [[Fraction(1)]]
    for _ in range(1, n_terms):
        u = polys[-1]
        # 1/2 p^2 (1 - p^2) u'(p)
        du = [i * c for i, c in enumerate(u)][1:]
        first = [Fraction(0)] * (len(du) + 4)
        for i, c in enumerate(du):
            first[i + 2] += c / 2
            first[i + 4] -= c / 2
        # 1/8 int_0^p (1 - 5 t^2) u(t) dt
        prod = [Fraction(0)] * (len(u) + 2)
        for i, c in enumerate(u):
            prod[i] += c
            prod[i + 2] -= 5 * c
        second = [Fraction(0)] + [c / (8 * (i + 1)) for i, c in enumerate(prod)]
        size = max(len(first), len(second))
        new = [Fraction(0)] * size
        for i, c in enumerate(first):
            new[i] += c
        for i, c in enumerate(second):
            new[i] += c
        while len(new) > 1 and new[-1] == 0:
            new.pop()
        polys.append(new)
    return [np.array([float(c) for c in poly]) for poly in polys]


_DEBYE_U = _debye_polynomials(_DEBYE_TERMS)


def _gamma_terms(mu):
    """(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) as used by Temme's series."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 0.05:
        mu2 = mu * mu
        gam1 = -sum(_RGAMMA1P[j] * mu2 ** ((j - 1) // 2) for j in range(1, len(_RGAMMA1P), 2))
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    gam2 = 0.5 * (gammi + gampl)
    return gam1, gam2, gampl, gammi


def _temme(mu, x):
    """ln K_mu(x) and x K_{mu+1}(x) / K_mu(x) for x <= 2 and |mu| <= 1/2."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    with np.errstate(invalid="ignore", divide="ignore"):
        fact2 = np.where(np.abs(e) < EPS, 1.0, np.sinh(e) / e)
    gam1, gam2, gampl, gammi = _gamma_terms(mu)
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    ee = np.exp(e)
    p = 0.5 * ee / gampl
    q = 0.5 / (ee * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c = c * dd / i
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if np.all(np.abs(delta) < np.abs(total) * EPS):
            break
    else:
        raise NumericalError("Temme series for K_nu did not converge")
    return np.log(total), 2.0 * total1 / total


def _steed(mu, x):
    """ln K_mu(x) and x K_{mu+1}(x) / K_mu(x) for x > 2 and |mu| <= 1/2."""
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu2
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < np.abs(s) * EPS):
            break
    else:
        raise NumericalError("Steed continued fraction for K_nu did not converge")
    h = a1 * h
    logk = 0.5 * np.log(math.pi / (2.0 * x)) - x - np.log(s)
    return logk, mu + x + 0.5 - h


def _debye(nu, x):
    z = x / nu
    t = np.sqrt(1.0 + z * z)
    p = 1.0 / t
    eta = t + np.log(z / (1.0 + t))
    series = np.zeros_like(x)
    for k in range(_DEBYE_TERMS - 1, -1, -1):
        series = series + (-1) ** k * np.polynomial.polynomial.polyval(p, _DEBYE_U[k]) / nu**k
    return 0.5 * math.log(math.pi / (2.0 * nu)) - nu * eta - 0.5 * np.log(t) + np.log(series)


def log_bessel_k(nu, x):
    """Natural log of the modified Bessel function K_nu(x).

    Parameters
    ----------
    nu : float
        Real order; K_{-nu} = K_nu so only |nu| matters.
    x : float or array_like
        Positive argument(s).

    Returns
    -------
    float or ndarray
        ln K_nu(x), same shape as ``x``.
    """
    nu = abs(float(nu))
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if not np.all(xa > 0):
        raise DomainError("bessel_k requires x > 0")
    if nu >= DEBYE_MIN_ORDER:
        out = _debye(nu, xa)
    else:
        nl = int(nu + 0.5)
        mu = nu - nl
        out = np.empty_like(xa)
        ratio = np.empty_like(xa)
        small = xa <= 2.0
        if np.any(small):
            out[small], ratio[small] = _temme(mu, xa[small])
        if np.any(~small):
            out[~small], ratio[~small] = _steed(mu, xa[~small])
        # ratio holds x K_{mu+k+1} / K_{mu+k}
        logx = np.log(xa)
        x2 = xa * xa
        for k in range(nl):
            if k > 0:
                ratio = x2 / ratio + 2.0 * (mu + k)
            out += np.log(ratio) - logx
    return float(out[0]) if scalar else out


def bessel_k(nu, x):
    return np.exp(log_bessel_k(nu, x))


def _stirling_tail(x):
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * x2)) / x2) / x2) / x2) / x


def log_gamma_ratio(a, d):
    """ln(Gamma(a + d) / Gamma(a)) without the cancellation of large lgamma values."""
    if a < 10.0 or a + d < 10.0:
        return float(gammaln(a + d) - gammaln(a))
    return (a - 0.5) * math.log1p(d / a) + d * math.log(a + d) - d + _stirling_tail(a + d) - _stirling_tail(a)
