"""Stochastic-volatility return distributions and the empirical pipeline that tests them."""

__version__ = "0.1.0"

from .distributions import (DistributionSpec, Kind, log_pdf, pd_jp_ratio, pdf, pdf_jp_numerical, sample,
                            sample_variance, theoretical_moment)
from .errors import (DomainError, FitError, InsufficientDataError, MomentDoesNotExistError, NumericalError,
                     ParseError, StabilityError, ValidationError, VolReturnsError)
from .inference import FitResult, cdf, fit_normal, ks_statistic, ll_difference, ll_ratio, log_likelihood, mle_fit
from .models import (Family, ModelParams, VariancePath, simulate_daily_log_prices, simulate_log_return_path,
                     simulate_paths, simulate_variance_path, stationary_variance_samples, steady_state_variance_cdf,
                     steady_state_variance_pdf)
from .moments import (MomentFitResult, empirical_moment, fit_relaxation, linear_fit, moment_ratio,
                      moment_ratio_curve)
from .series import (PriceSeries, ReturnSample, fit_growth_rate, load_price_series, mean_path_realized_variance,
                     realized_variance_curve, tau_returns)
from .special import bessel_k, log_bessel_k, log_gamma_ratio
