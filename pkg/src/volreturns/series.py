"""Price-series ingestion, detrending, tau-day returns and realized variance."""

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParseError, ValidationError


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    prices: np.ndarray
    log_prices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if len(self.dates) != len(prices):
            raise ValidationError("dates and prices differ in length")
        if not np.all(prices > 0):
            raise ValidationError("prices must be strictly positive")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValidationError("dates must be strictly increasing")
        prices.setflags(write=False)
        log_prices = np.log(prices)
        log_prices.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "log_prices", log_prices)

    def __len__(self):
        return len(self.prices)

    @classmethod
    def from_log_prices(cls, log_prices, start=dt.date(2000, 1, 3)):
        """Series indexed by consecutive days, mainly for synthetic data."""
        dates = tuple(start + dt.timedelta(days=i) for i in range(len(log_prices)))
        return cls(dates, np.exp(np.asarray(log_prices, dtype=float)))


@dataclass(frozen=True)
class ReturnSample:
    """Overlapping detrended tau-day log returns."""

    tau: int
    values: np.ndarray
    drift_mu: float

    def __len__(self):
        return len(self.values)


def _open_text(source):
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def load_price_series(source, format="csv"):
    """Parse a ``date,close`` CSV (bytes, text or binary stream) into a PriceSeries.

    Lines starting with ``#`` are ignored, so files written by the CLI can be
    read back directly.
    Rows may come in any order; they are sorted by date.  Duplicate dates,
    malformed rows and non-positive closes are rejected with the offending
    line number.
    """
    if format != "csv":
        raise ValidationError(f"unsupported format {format!r}")
    # comment lines ("# ...") and blank lines are skipped but still counted
    lines = ((n, text) for n, text in enumerate(_open_text(source), start=1)
             if text.strip() and not text.lstrip().startswith("#"))
    try:
        line, text = next(lines)
    except StopIteration:
        raise InsufficientDataError("empty input") from None
    header = next(csv.reader([text]))
    if [h.strip().lower() for h in header] != ["date", "close"]:
        raise ParseError(f"expected header 'date,close', got {','.join(header)!r}", line=line)
    rows = {}
    for line, text in lines:
        row = next(csv.reader([text]))
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line=line)
        try:
            date = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"bad date {row[0]!r}", line=line) from None
        try:
            close = float(row[1])
        except ValueError:
            raise ParseError(f"bad close {row[1]!r}", line=line) from None
        if not math.isfinite(close):
            raise ParseError(f"bad close {row[1]!r}", line=line)
        if close <= 0:
            raise ValidationError(f"line {line}: close must be positive, got {close}")
        if date in rows:
            raise ValidationError(f"line {line}: duplicate date {date.isoformat()}")
        rows[date] = close
    if len(rows) < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {len(rows)}")
    dates = sorted(rows)
    return PriceSeries(tuple(dates), np.array([rows[d] for d in dates]))


def write_price_series(series, stream):
    stream.write("date,close\n")
    for d, p in zip(series.dates, series.prices):
        stream.write(f"{d.isoformat()},{float(p)!r}\n")


def fit_growth_rate(series):
    """OLS slope of log price against trading-day index."""
    n = len(series)
    if n < 2:
        raise InsufficientDataError("need at least 2 points to fit a growth rate")
    t = np.arange(n, dtype=float)
    t -= t.mean()
    y = series.log_prices - series.log_prices.mean()
    return float(np.dot(t, y) / np.dot(t, t))


def tau_returns(series, tau, mu):
    """Detrended log returns over every window of ``tau`` consecutive trading days."""
    tau = int(tau)
    if tau < 1:
        raise ValidationError(f"tau must be a positive integer, got {tau}")
    if tau >= len(series):
        raise InsufficientDataError(f"tau={tau} needs more than {len(series)} points")
    lp = series.log_prices
    values = (lp[tau:] - lp[:-tau]) - mu * tau
    return ReturnSample(tau, values, float(mu))


def daily_detrended_returns(series, mu):
    return np.diff(series.log_prices) - mu


def realized_variance_curve(series, mu, taus):
    """Mean realized variance for each tau.

    For window k the realized variance is the sum of the squared detrended
    one-day returns from day k to k + tau; the mean runs over all N - tau
    overlapping windows.
    """
    taus = [int(t) for t in taus]
    if not taus:
        raise ValidationError("taus must be non-empty")
    if min(taus) < 1:
        raise ValidationError("taus must be positive")
    if max(taus) >= len(series):
        raise InsufficientDataError(f"tau={max(taus)} needs more than {len(series)} points")
    d2 = daily_detrended_returns(series, mu) ** 2
    csum = np.concatenate([[0.0], np.cumsum(d2)])
    return [(tau, float(np.mean(csum[tau:] - csum[:-tau]))) for tau in taus]


def mean_path_realized_variance(x_paths, taus):
    """Mean over paths of the summed squared daily increments of ``x`` up to day tau.

    ``x_paths`` has one row per path sampled once per day, starting at day 0.
    """
    x_paths = np.atleast_2d(np.asarray(x_paths, dtype=float))
    csum = np.cumsum(np.diff(x_paths, axis=1) ** 2, axis=1)
    return [(int(tau), float(np.mean(csum[:, int(tau) - 1]))) for tau in taus]


def write_rv_csv(curve, stream, header_comment=None):
    if header_comment:
        stream.write(f"# {header_comment}\n")
    stream.write("tau,mean_rv\n")
    for tau, rv in curve:
        stream.write(f"{tau},{rv:.17g}\n")
