"""Command-line front end: ``rminar <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
Errors are reported on stderr as a single ``error code=<n> type=<Name>: <message>`` line.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import InvalidInput, InvalidSpec, NotSupported, NumericalError, ParseError
from .estimation import FitConfig, dispersion_test, fit, nb2_shape_estimates
from .diagnostics import diagnose, order_selection_report, rolling_forecast_eval
from .mc_study import StudyConfig, run_study
from .model import ModelClass, ModelSpec, Series, simulate, validate
from .theory import fourth_moment_check, lyapunov_mc, stationarity_report, tail_index

__all__ = ["main", "read_series_csv", "write_series_csv", "load_config"]

CONFIG_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# -- input / output -------------------------------------------------------------------

def read_series_csv(path) -> Series:
    """One integer per row with an optional ``y`` header; any negative value makes the domain Z."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 1:
                raise ParseError(lineno, "expected exactly one column")
            cell = row[0].strip()
            if lineno == 1 and cell == "y":
                continue
            try:
                values.append(int(cell))
            except ValueError:
                raise ParseError(lineno, f"not an integer: {cell!r}") from None
    if not values:
        raise ParseError(1, "no data rows")
    return Series.from_values(values)


def write_series_csv(series: Series, path=None) -> None:
    text = "y\n" + "".join(f"{int(v)}\n" for v in series.values)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _clean(obj):
    """Replace non-finite floats by tokens so the output never holds NaN text."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "none"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _emit(doc, out=None) -> None:
    text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def load_config(path, allowed: set[str], required: set[str] = frozenset()) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InvalidSpec("config", "top level must be an object")
    if doc.get("version") != CONFIG_VERSION:
        raise InvalidSpec("version", f"expected version {CONFIG_VERSION}")
    unknown = set(doc) - allowed - {"version"}
    if unknown:
        raise InvalidSpec("config", f"unknown key(s) {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise InvalidSpec("config", f"missing key(s) {sorted(missing)}")
    return {k: v for k, v in doc.items() if k != "version"}


def load_model(path) -> ModelSpec:
    doc = load_config(path, {"class", "coefficients", "innovation", "intercept"})
    return ModelSpec.from_dict(doc)


# -- argument helpers -------------------------------------------------------------------

def _vector(text: str | None, name: str):
    if text is None:
        return None
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise InvalidSpec(name, f"expected comma-separated numbers, got {text!r}") from None


def _link(text: str) -> tuple[str, float | None]:
    if text.startswith("proportional:"):
        try:
            return "proportional", float(text.split(":", 1)[1])
        except ValueError:
            raise InvalidSpec("variance-link", f"bad constant in {text!r}") from None
    if text == "proportional":
        raise InvalidSpec("variance-link", "use proportional:<c>")
    return text, None


def _fit_config(args) -> FitConfig:
    link, c = _link(args.variance_link)
    return FitConfig(
        model_class=args.model_class, p=args.order, variance_link=link, c=c,
        lambda_star=_vector(args.lambda_star, "lambda-star"),
        theta_star=_vector(args.theta_star, "theta-star"),
    )


def _series_for(args) -> Series:
    s = read_series_csv(args.series)
    if s.domain == "Z" and args.model_class != ModelClass.ADDITIVE_Z.value:
        raise InvalidSpec("series", f"negative values need --class additive-z, not {args.model_class}")
    return s


# -- subcommands ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    spec = load_model(args.model)
    s = simulate(spec, args.n, burn_in=args.burn_in, seed=args.seed)
    write_series_csv(s, args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    spec = load_model(args.model)
    v = validate(spec)
    st = stationarity_report(spec)
    doc = {
        "model": spec.to_dict(),
        "validation": {"a0": v.a0, "a0_innovation": v.a0_innovation, "warnings": list(v.warnings)},
        "sum_phi": float(spec.theta()[1:].sum()),
        "stationarity": vars(st),
    }
    with warnings.catch_warnings():
        # the flag is part of the document, no need to repeat it on stderr
        warnings.simplefilter("ignore", UserWarning)
        doc["fourth_moment_condition"] = fourth_moment_check(spec)
    if spec.p == 1:
        mode = {"additive": "raw", "additive-z": "absolute", "multiplicative": "product_with_innovation"}
        t = tail_index(spec, mode=mode[spec.model_class.value])
        doc["tail"] = {"tau1": t.tau1, "mode": t.mode, "bracket": list(t.bracket)}
    ly = lyapunov_mc(spec, horizon=args.horizon, reps=args.reps, seed=args.seed)
    doc["lyapunov"] = {"gamma": ly.gamma, "std_error": ly.std_error, "horizon": ly.horizon,
                       "replications": ly.replications}
    _emit(doc, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _fit_config(args)
    s = _series_for(args)
    res = fit(s, cfg)
    doc = res.to_dict()
    doc["nb2_shape"] = nb2_shape_estimates(res.theta2, res.lambda2, cfg.model_class)
    if cfg.model_class.is_additive:
        doc["dispersion_z"] = {
            kind: dispersion_test(res.theta2, res.lambda2, res.Sigma_hat, res.Omega_hat, kind, res.n_eff)
            for kind in ("poisson", "geometric")
        }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cfg = _fit_config(args)
    s = _series_for(args)
    res = fit(s, cfg)
    rep = diagnose(s, args.max_lag, res)
    doc = rep.to_dict()
    if args.p_max:
        doc["order_selection"] = order_selection_report(s, args.p_max, cfg)
    if args.lags_csv:
        with open(args.lags_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["lag", "acf", "pacf"])
            for k in range(1, args.max_lag + 1):
                w.writerow([k, f"{rep.acf[k]:.10g}", f"{rep.pacf[k - 1]:.10g}"])
    _emit(doc, args.out)
    return EXIT_OK


def cmd_forecast_eval(args) -> int:
    cfg = _fit_config(args)
    s = _series_for(args)
    sizes = [int(x) for x in _vector(args.train_sizes, "train-sizes")]
    _emit(rolling_forecast_eval(s, cfg, sizes).to_dict(), args.out)
    return EXIT_OK


_FIT_KEYS = {"variance_link", "c", "lambda_star", "theta_star", "cascade_tol", "cascade_max_iters"}


def cmd_mc_study(args) -> int:
    doc = load_config(args.config, {"model", "n", "reps", "burn_in", "fit"}, {"model", "n", "reps"})
    if not isinstance(doc["model"], dict):
        raise InvalidSpec("model", "must be an object")
    spec = ModelSpec.from_dict(doc["model"])
    fit_doc = doc.get("fit", {})
    unknown = set(fit_doc) - _FIT_KEYS
    if unknown:
        raise InvalidSpec("fit", f"unknown key(s) {sorted(unknown)}")
    fcfg = FitConfig(model_class=spec.model_class, p=spec.p, **fit_doc)
    cfg = StudyConfig(
        spec=spec, n=int(doc["n"]), reps=int(args.reps or doc["reps"]), master_seed=args.seed,
        fit=fcfg, workers=args.workers, burn_in=int(doc.get("burn_in", 500)),
    )
    res = run_study(cfg)
    _emit(res.to_dict(), args.out)
    if args.out is not None:
        sys.stderr.write(res.table() + "\n")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------------

def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--series", required=True, help="CSV file, one integer per row")
    p.add_argument("--class", dest="model_class", default="additive",
                   choices=[c.value for c in ModelClass])
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--variance-link", default="free",
                   help="free | poisson | geometric | proportional:<c>")
    p.add_argument("--lambda-star", help="comma-separated initial variance weights")
    p.add_argument("--theta-star", help="comma-separated initial mean parameters (multiplicative)")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rminar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a series from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="stationarity, tail index and Lyapunov exponent of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--horizon", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="four-stage weighted least squares fit")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="ACF/PACF, residual metrics and order selection")
    _add_fit_flags(p)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--p-max", type=int, default=0)
    p.add_argument("--lags-csv", help="write lag,acf,pacf rows here")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("forecast-eval", help="one-step out-of-sample evaluation")
    _add_fit_flags(p)
    p.add_argument("--train-sizes", required=True, help="comma-separated n_c values")
    p.set_defaults(func=cmd_forecast_eval)

    p = sub.add_parser("mc-study", help="replicated simulation study")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc_study)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(f"error code={code} type={type(exc).__name__}: {exc}\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, NotSupported, OSError, TypeError, ValueError) as exc:
        # plain ValueError/TypeError come from malformed config values
        return _fail(EXIT_INPUT, exc)
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())
