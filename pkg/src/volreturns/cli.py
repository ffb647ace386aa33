"""Command-line entry point: ``volreturns <command> [options]``.

Commands: ingest, rv, fit, moments, simulate, density.  Every output file starts with
a comment line holding the exact invocation.  Exit codes: 0 success, 2 I/O,
3 validation (including usage errors), 4 numerical non-convergence.
"""

import argparse
import json
import logging
import math
import shlex
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .distributions import DistributionSpec, Kind, pdf, theoretical_moment
from .errors import MomentDoesNotExistError, NumericalError, ValidationError, VolReturnsError
from .inference import fit_normal, ks_statistic, ll_difference, ll_ratio, mle_fit
from .models import (ModelParams, simulate_log_return_path, simulate_variance_path,
                     steady_state_variance_cdf)
from .moments import fit_relaxation, linear_fit, moment_ratio_curve, pd_kind
from .series import (PriceSeries, fit_growth_rate, load_price_series, realized_variance_curve, tau_returns,
                     write_price_series)

logger = logging.getLogger("volreturns")

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def parse_taus(text):
    """'1:250', '1:250:5', '1,5,10' or a mix like '1:5,10,20'; must be strictly increasing."""
    taus = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                if len(bits) not in (2, 3):
                    raise ValueError
                step = bits[2] if len(bits) == 3 else 1
                if step < 1:
                    raise ValueError
                taus.extend(range(bits[0], bits[1] + 1, step))
            else:
                taus.append(int(part))
        except ValueError:
            raise UsageError(f"bad tau list {text!r}") from None
    if not taus:
        raise UsageError("tau list is empty")
    if taus[0] < 1 or any(b <= a for a, b in zip(taus, taus[1:])):
        raise UsageError(f"taus must be positive and strictly increasing: {text!r}")
    return taus


def parse_families(text):
    out = []
    for name in str(text).split(","):
        name = name.strip().lower()
        if not name:
            continue
        try:
            out.append(Kind(name))
        except ValueError:
            raise UsageError(f"unknown family {name!r}; choose from {', '.join(k.value for k in Kind)}") from None
    if not out:
        raise UsageError("family list is empty")
    return out


def parse_orders(text):
    try:
        orders = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad order list {text!r}") from None
    if not orders or min(orders) < 1:
        raise UsageError("orders must be positive integers")
    return orders


def _flag(value):
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


# (dest, type, default) per command; config-file values pass through the same type.
_COMMON = [("input", str, None), ("out", str, "."), ("format", str, "csv"), ("seed", int, 0)]
_OPTIONS = {
    "ingest": [],
    "rv": [("taus", parse_taus, "1:100")],
    "fit": [("taus", parse_taus, "1:250"), ("families", parse_families, "ga,iga,ga-jp,iga-jp,normal")],
    "moments": [("taus", parse_taus, "1:250"), ("families", parse_families, "ga,iga"),
                ("orders", parse_orders, None), ("ref_tau", int, 1), ("alpha", float, None),
                ("theta", float, None)],
    "simulate": [("model", str, "heston"), ("gamma", float, 0.05), ("theta", float, 1e-4),
                 ("kappa", float, None), ("alpha", float, None), ("rho", float, 0.0), ("dt", float, 0.25),
                 ("steps", int, 4000), ("ito_drift", _flag, True)],
    "density": [("family", Kind, "ga"), ("alpha", float, None), ("theta", float, None), ("sigma", float, None),
                ("tau", float, 1.0), ("width", float, 6.0), ("points", int, 241)],
}


def build_parser():
    parser = _Parser(prog="volreturns", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, extra in _OPTIONS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value file; flags override it")
        for dest, _, default in _COMMON + extra:
            opt = "--" + dest.replace("_", "-")
            if dest == "ito_drift":
                p.add_argument("--ito-drift", dest=dest, action="store_const", const=True)
                p.add_argument("--no-ito-drift", dest=dest, action="store_const", const=False)
            elif dest == "format":
                p.add_argument(opt, dest=dest, choices=["csv", "json"])
            else:
                p.add_argument(opt, dest=dest, help=f"default: {default}")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def read_config(path):
    config = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            config[key.strip().replace("-", "_")] = value.strip()
    return config


def resolve(args):
    """Merge flags > config file > defaults and apply each option's parser."""
    config = read_config(args.config) if args.config else {}
    opts = {}
    for dest, conv, default in _COMMON + _OPTIONS[args.command]:
        raw = getattr(args, dest)
        if raw is None:
            raw = config.get(dest, default)
        if raw is None:
            opts[dest] = None
            continue
        try:
            opts[dest] = conv(raw)
        except UsageError:
            raise
        except (TypeError, ValueError):
            raise UsageError(f"bad value for --{dest.replace('_', '-')}: {raw!r}") from None
    if opts["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {opts['format']!r}")
    return opts


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else f"{float(value):.17g}"
    return str(value)


def _json_value(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


class Writer:
    def __init__(self, out_dir, fmt, invocation):
        self.out_dir = Path(out_dir)
        self.fmt = fmt
        self.invocation = invocation
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def table(self, stem, columns, rows):
        path = self.out_dir / f"{stem}.{self.fmt}"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if self.fmt == "csv":
                fh.write(f"# {self.invocation}\n")
                fh.write(",".join(columns) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
            else:
                # one row per line keeps large tables readable and diffable
                fh.write("{\n")
                fh.write(f' "invocation": {json.dumps(self.invocation)},\n')
                fh.write(f' "columns": {json.dumps(list(columns))},\n')
                body = ",\n  ".join(json.dumps([_json_value(v) for v in row]) for row in rows)
                fh.write(f' "rows": [\n  {body}\n ]\n}}\n' if rows else ' "rows": []\n}\n')
        return path


def _report(summary):
    for key, value in summary.items():
        print(f"{key}={_fmt(value)}")


def _load(opts):
    if not opts["input"]:
        raise UsageError("--input is required")
    with open(opts["input"], "rb") as fh:
        return load_price_series(fh)


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(opts, writer):
    series = _load(opts)
    mu = fit_growth_rate(series)
    path = writer.out_dir / "series.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {writer.invocation}\n")
        write_price_series(series, fh)
    summary = {"n": len(series), "first_date": series.dates[0].isoformat(),
               "last_date": series.dates[-1].isoformat(), "mu": mu}
    writer.table("summary", list(summary), [list(summary.values())])
    _report(summary)
    return EXIT_OK


def cmd_rv(opts, writer):
    series = _load(opts)
    mu = fit_growth_rate(series)
    curve = realized_variance_curve(series, mu, opts["taus"])
    slope, intercept, r2 = linear_fit(curve)
    writer.table("rv", ["tau", "mean_rv"], curve)
    writer.table("rv_fit", ["slope", "intercept", "r_squared", "mu"], [[slope, intercept, r2, mu]])
    _report({"mu": mu, "slope": slope, "intercept": intercept, "r_squared": r2})
    return EXIT_OK


def cmd_fit(opts, writer):
    series = _load(opts)
    mu = fit_growth_rate(series)
    families = opts["families"]
    fit_rows, ratio_rows = [], []
    all_converged = True
    for tau in opts["taus"]:
        sample = tau_returns(series, tau, mu)
        baseline = fit_normal(sample)
        fits = {}
        for kind in families:
            if kind is Kind.NORMAL:
                fits[kind] = baseline
                continue
            start = None
            if kind.is_jp:
                pd = Kind.HESTON_PD if kind.family == "heston" else Kind.MULT_PD
                if pd in fits:
                    start = (fits[pd].spec.alpha, fits[pd].spec.theta)
            fits[kind] = mle_fit(sample, kind, start=start)
        for kind in families:
            fit = fits[kind]
            spec = fit.spec
            all_converged &= fit.converged
            if kind is Kind.NORMAL:
                alpha, theta = math.nan, spec.sigma**2 / tau
            else:
                alpha, theta = spec.alpha, spec.theta
            fit_rows.append([tau, kind.value, alpha, theta, fit.log_likelihood, ks_statistic(sample, spec),
                             fit.converged])
            ratio_rows.append([tau, kind.value, ll_ratio(fit, baseline), ll_difference(fit, baseline)])
        logger.info("tau=%d done", tau)
    writer.table("fits", ["tau", "family", "alpha", "theta", "loglik", "ks", "converged"], fit_rows)
    writer.table("ll_ratio", ["tau", "family", "ll_ratio", "ll_difference"], ratio_rows)
    _report({"mu": mu, "n_fits": len(fit_rows), "all_converged": all_converged})
    if not all_converged:
        print("warning: some fits did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_moments(opts, writer):
    families = [pd_kind(k.value) if k is not Kind.NORMAL else None for k in opts["families"]]
    if None in families:
        raise UsageError("moment analysis is defined for ga and iga families")
    families = list(dict.fromkeys(families))
    # without --orders each family gets every order it supports up to n = 3
    default_orders = {Kind.HESTON_PD: [1, 2, 3], Kind.MULT_PD: [1, 2]}
    orders_for = {k: opts["orders"] or default_orders[k] for k in families}
    # surface non-existent moments before doing any work
    for kind in families:
        for n in orders_for[kind]:
            if kind is Kind.MULT_PD and n > 2:
                raise MomentDoesNotExistError(f"multiplicative moment of order {2 * n} is not available")
    series = _load(opts)
    mu = fit_growth_rate(series)
    override = opts["alpha"] is not None or opts["theta"] is not None
    if override and (opts["alpha"] is None or opts["theta"] is None or len(families) != 1):
        raise UsageError("--alpha/--theta need each other and a single family")
    ref_rows = []
    summary = {"mu": mu}
    for kind in families:
        if override:
            alpha, theta, ll = opts["alpha"], opts["theta"], math.nan
        else:
            ref = mle_fit(tau_returns(series, opts["ref_tau"], mu), kind)
            alpha, theta, ll = ref.spec.alpha, ref.spec.theta, ref.log_likelihood
        orders = orders_for[kind]
        for n in orders:
            theoretical_moment(DistributionSpec(kind, alpha, theta, 1.0), 2 * n)
        ref_rows.append([kind.value, opts["ref_tau"], alpha, theta, ll])
        relax_rows = []
        for n in orders:
            curve = moment_ratio_curve(series, mu, kind, (alpha, theta), n, opts["taus"])
            writer.table(f"ratio_{kind.value}_n{n}", ["tau", "ratio"], curve)
            if len(curve) >= 3:
                fit = fit_relaxation(curve, n=n)
                relax_rows.append([n, fit.a, fit.b, fit.residual_rms])
                summary[f"{kind.value}_n{n}_a"] = fit.a
                summary[f"{kind.value}_n{n}_b"] = fit.b
        writer.table(f"relaxation_{kind.value}", ["n", "a", "b", "residual_rms"], relax_rows)
    writer.table("reference", ["family", "ref_tau", "alpha", "theta", "loglik"], ref_rows)
    _report(summary)
    return EXIT_OK


def cmd_simulate(opts, writer):
    model = opts["model"].lower()
    if model in ("ga", "heston"):
        family = "heston"
    elif model in ("iga", "mult", "multiplicative"):
        family = "multiplicative"
    else:
        raise UsageError(f"unknown model {opts['model']!r}")
    if (opts["kappa"] is None) == (opts["alpha"] is None):
        raise UsageError("give exactly one of --kappa and --alpha")
    if opts["kappa"] is not None:
        params = ModelParams(family, opts["gamma"], opts["theta"], opts["kappa"], opts["rho"])
    else:
        params = ModelParams.from_alpha(family, opts["gamma"], opts["theta"], opts["alpha"], opts["rho"])
    dt, steps, seed = opts["dt"], opts["steps"], opts["seed"]

    vpath = simulate_variance_path(params, dt, steps, seed)
    writer.table("variance_path", ["step", "v"], list(enumerate(vpath.values)))
    x, coupled = simulate_log_return_path(params, dt, steps, seed, include_ito_drift=opts["ito_drift"])
    writer.table("return_path", ["step", "x", "v"], [[i, xi, vi] for i, (xi, vi) in enumerate(zip(x, coupled.values))])

    summary = {"family": family, "alpha": params.alpha, "kappa": params.kappa}
    per_day = 1.0 / dt
    if abs(per_day - round(per_day)) < 1e-9 and steps >= round(per_day):
        k = int(round(per_day))
        daily = x[::k]
        series = PriceSeries.from_log_prices(np.log(100.0) + daily)
        path = writer.out_dir / "prices.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {writer.invocation}\n")
            write_price_series(series, fh)
        summary["n_days"] = len(series)

    thin = max(1, round(1.0 / (params.gamma * dt)))
    kept = vpath.values[10 * thin::thin]
    if len(kept) >= 20:
        ks = stats.kstest(kept, lambda v: steady_state_variance_cdf(params, v)).statistic
        critical = 1.36 / math.sqrt(len(kept))
        summary.update(stationary_samples=len(kept), stationary_ks=ks, stationary_ks_critical=critical,
                       stationary_pass=bool(ks < critical))
    writer.table("simulate_summary", list(summary), [list(summary.values())])
    _report(summary)
    return EXIT_OK


def cmd_density(opts, writer):
    """Tabulate one density on an even z grid spanning +-width standard deviations."""
    spec = DistributionSpec(opts["family"], opts["alpha"], opts["theta"], opts["tau"], opts["sigma"])
    if opts["points"] < 2:
        raise UsageError("--points must be at least 2")
    half = opts["width"] * spec.scale
    z = np.linspace(-half, half, opts["points"])
    writer.table("density", ["z", "pdf"], list(zip(z, pdf(spec, z))))
    _report({"family": spec.kind.value, "scale": spec.scale, "points": len(z)})
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "rv": cmd_rv, "fit": cmd_fit, "moments": cmd_moments, "simulate": cmd_simulate,
            "density": cmd_density}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    invocation = "volreturns " + " ".join(shlex.quote(a) for a in argv)
    try:
        opts = resolve(args)
        writer = Writer(opts["out"], opts["format"], invocation)
        return COMMANDS[args.command](opts, writer)
    except OSError as exc:
        print(f"volreturns: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"volreturns: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VolReturnsError as exc:
        print(f"volreturns: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
