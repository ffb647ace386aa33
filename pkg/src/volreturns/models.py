"""Mean-reverting variance models and their Euler-Maruyama simulators.

    dv = -gamma (v - theta) dt + kappa sqrt(v) dW2     (Heston)
    dv = -gamma (v - theta) dt + kappa v dW2           (multiplicative)
    dx = -v/2 dt + sqrt(v) dW1,   dW2 = rho dW1 + sqrt(1 - rho^2) dZ

Both share alpha = 2 gamma theta / kappa^2.  Time is measured in trading days.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .distributions import DistributionSpec, Kind
from .errors import DomainError, StabilityError, ValidationError

MAX_GAMMA_DT = 0.1


class Family(str, Enum):
    HESTON = "heston"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class ModelParams:
    family: Family
    gamma: float
    theta: float
    kappa: float
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("gamma", "theta", "kappa"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive, got {value}")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.family is Family.HESTON and not self.alpha > 1.0:
            raise ValidationError(f"Heston model needs alpha > 1, got {self.alpha}")

    @property
    def alpha(self):
        return 2.0 * self.gamma * self.theta / self.kappa**2

    @classmethod
    def from_alpha(cls, family, gamma, theta, alpha, rho=0.0):
        return cls(family, gamma, theta, math.sqrt(2.0 * gamma * theta / alpha), rho)

    def return_spec(self, tau, jp=False):
        """Return density implied by the stationary variance law at horizon tau."""
        if self.family is Family.HESTON:
            kind = Kind.HESTON_JP if jp else Kind.HESTON_PD
        else:
            kind = Kind.MULT_JP if jp else Kind.MULT_PD
        return DistributionSpec(kind, self.alpha, self.theta, tau)


@dataclass(frozen=True)
class VariancePath:
    dt: float
    values: np.ndarray
    seed: int


def _stationary_law(params):
    if params.family is Family.HESTON:
        return stats.gamma(params.alpha, scale=params.theta / params.alpha)
    return stats.invgamma(params.alpha / params.theta + 1.0, scale=params.alpha)


def steady_state_variance_pdf(params, v):
    """Stationary density of v: Gamma(alpha, theta/alpha) or InvGamma(alpha/theta + 1, alpha)."""
    va = np.asarray(v, dtype=float)
    if not np.all(va > 0):
        raise DomainError("variance must be positive")
    if params.family is Family.HESTON:
        a = params.alpha
        scale = params.theta / a
        logp = (a - 1.0) * np.log(va / scale) - va / scale - math.lgamma(a) - math.log(scale)
    else:
        a = params.alpha / params.theta + 1.0
        b = params.alpha
        logp = -(a + 1.0) * np.log(va / b) - b / va - math.lgamma(a) - math.log(b)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def steady_state_variance_cdf(params, v):
    return _stationary_law(params).cdf(v)


def substream(seed, index):
    """Independent generator for path ``index`` of a batch seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _check_grid(params, dt, n_steps):
    if not (dt > 0 and math.isfinite(dt)):
        raise DomainError(f"dt must be positive, got {dt}")
    if params.gamma * dt >= MAX_GAMMA_DT:
        raise StabilityError(f"gamma*dt = {params.gamma * dt:.3g} must stay below {MAX_GAMMA_DT}")
    if int(n_steps) < 1:
        raise ValidationError("n_steps must be at least 1")


def simulate_paths(params, dt, n_steps, seed, n_paths=1, with_returns=True, include_ito_drift=True,
                   record_every=1):
    """Full-truncation Euler paths for a batch.

    Path ``i`` draws its noise from ``substream(seed, i)`` only, so any path is
    reproducible on its own and independent of batch size.  States are
    recorded at steps 0, record_every, 2*record_every, ... <= n_steps.

    Returns ``(x, v)`` arrays of shape (n_paths, n_records); ``x`` is None
    when ``with_returns`` is false.  Recorded variances are max(v, 0).
    """
    _check_grid(params, dt, n_steps)
    n_steps = int(n_steps)
    record_every = int(record_every)
    n_records = n_steps // record_every + 1
    n_noise = 2 if with_returns else 1
    gens = [substream(seed, i) for i in range(n_paths)]

    v = np.full(n_paths, params.theta)
    x = np.zeros(n_paths)
    v_out = np.empty((n_paths, n_records))
    x_out = np.empty((n_paths, n_records)) if with_returns else None
    v_out[:, 0] = v
    if with_returns:
        x_out[:, 0] = 0.0

    sqdt = math.sqrt(dt)
    gamma, theta, kappa = params.gamma, params.theta, params.kappa
    rho = params.rho
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    heston = params.family is Family.HESTON
    chunk = max(1, min(1024, 2_000_000 // (n_paths * n_noise)))

    step = 0
    while step < n_steps:
        m = min(chunk, n_steps - step)
        noise = np.stack([g.standard_normal((m, n_noise)) for g in gens], axis=1)
        for j in range(m):
            vp = np.maximum(v, 0.0)
            sv = np.sqrt(vp)
            if with_returns:
                xi1 = noise[j, :, 0]
                dw2 = sqdt * (rho * xi1 + rho_c * noise[j, :, 1])
                x = x + sv * (sqdt * xi1)
                if include_ito_drift:
                    x = x - 0.5 * vp * dt
            else:
                dw2 = sqdt * noise[j, :, 0]
            v = v - gamma * (vp - theta) * dt + kappa * (sv if heston else vp) * dw2
            step += 1
            if step % record_every == 0:
                k = step // record_every
                v_out[:, k] = np.maximum(v, 0.0)
                if with_returns:
                    x_out[:, k] = x
    return x_out, v_out


def simulate_variance_path(params, dt, n_steps, seed):
    _, v = simulate_paths(params, dt, n_steps, seed, with_returns=False)
    return VariancePath(dt, v[0], seed)


def simulate_log_return_path(params, dt, n_steps, seed, include_ito_drift=True):
    """One coupled (x, v) path; x starts at 0, v at theta."""
    x, v = simulate_paths(params, dt, n_steps, seed, with_returns=True, include_ito_drift=include_ito_drift)
    return x[0], VariancePath(dt, v[0], seed)


def stationary_variance_samples(params, n_samples, seed, dt=None, n_paths=1000):
    """Variance draws after a 10/gamma burn-in, thinned every 1/gamma days.

    The coupled return/variance system is simulated so that rho enters the
    noise exactly as in the full model.
    """
    if dt is None:
        dt = 0.01 / params.gamma
    thin = max(1, round(1.0 / (params.gamma * dt)))
    burn = 10 * thin
    n_paths = min(n_paths, n_samples)
    per_path = -(-n_samples // n_paths)
    n_steps = (burn // thin + per_path - 1) * thin
    _, v = simulate_paths(params, dt, n_steps, seed, n_paths=n_paths, with_returns=True, record_every=thin)
    return v[:, burn // thin:].reshape(-1)[:n_samples]


def simulate_daily_log_prices(params, n_days, seed, steps_per_day=4, include_ito_drift=True, mu=0.0):
    """Single coupled path sampled once per trading day, with drift mu added back."""
    x, v = simulate_paths(params, 1.0 / steps_per_day, n_days * steps_per_day, seed,
                          with_returns=True, include_ito_drift=include_ito_drift, record_every=steps_per_day)
    return x[0] + mu * np.arange(n_days + 1), v[0]
