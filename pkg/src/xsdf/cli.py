"""Command-line front end.

Subcommands: validate, estimate, backtest, synth, analyze. Options can come
from a ``key = value`` config file (``--config``); explicit flags override file
values. Every command writes a ``manifest.json`` recording the command, the
resolved configuration, SHA-256 digests of all inputs, the seed and package
version, so a run can be audited and reproduced bit-for-bit (timestamps aside).

Exit codes: 0 ok, 2 data error, 3 alignment error, 4 config error,
5 numerical error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__, backtest, estimators, network, regress, strategy, synth
from .errors import (
    AllMonthsRankDeficient,
    AssetMismatch,
    CoverageGap,
    DateMisalignment,
    DimensionMismatch,
    DuplicateKey,
    InsufficientHistory,
    LabelMismatch,
    MissingCell,
    NoOverlap,
    NotPsd,
    NotSquare,
    ParseError,
    RankDeficient,
    SingularCovariance,
    SingularMoment,
    TooShort,
    XsdfError,
    ZeroMatrix,
)
from .panel import (
    STANDARDIZATION_POLICY,
    MonthStamp,
    ReturnPanel,
    SignalPanel,
    align,
    load_returns,
    load_signals,
    standardize,
    write_returns,
    write_signals,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_ALIGNMENT = 3
EXIT_CONFIG = 4
EXIT_NUMERICAL = 5

_DATA_ERRORS = (ParseError, MissingCell, DuplicateKey, TooShort)
_ALIGNMENT_ERRORS = (
    NoOverlap,
    AssetMismatch,
    DateMisalignment,
    CoverageGap,
    InsufficientHistory,
)
_NUMERICAL_ERRORS = (
    ZeroMatrix,
    SingularMoment,
    SingularCovariance,
    RankDeficient,
    AllMonthsRankDeficient,
    NotSquare,
    DimensionMismatch,
    LabelMismatch,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors map to the config exit code."""

    def error(self, message):
        raise _UsageError(message)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, _DATA_ERRORS):
        return EXIT_DATA
    if isinstance(exc, _ALIGNMENT_ERRORS):
        return EXIT_ALIGNMENT
    if isinstance(exc, NotPsd):
        return EXIT_CONFIG  # a bad covariance in a spec file is a config problem
    if isinstance(exc, _NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    if isinstance(exc, (_UsageError, ValueError, KeyError, FileNotFoundError)):
        return EXIT_CONFIG
    raise exc


# ---------------------------------------------------------------------------
# config files (key = value) and manifests
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "signals": str,
    "returns": str,
    "layout": str,
    "window_months": int,
    "objective": str,
    "restriction": str,
    "zero_cost": bool,
    "leverage": float,
    "ridge": str,  # number or "cv"
    "cv_grid": str,  # comma-separated shrinkage values
    "cv_folds": int,
    "oos_start": str,
    "tol": float,
    "max_iter": int,
    "warm_start": bool,
    "standardize": bool,
    "start": str,
    "end": str,
}


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def read_config(path) -> dict:
    """Parse a `key = value` config file; keys mirror the backtest options."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path} line {lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path} line {lineno}: unknown key {key!r}")
            kind = _CONFIG_KEYS[key]
            if kind is bool:
                values[key] = _parse_bool(raw)
            elif kind in (int, float):
                values[key] = kind(raw)
            else:
                values[key] = raw
    return values


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command: str, config: dict, inputs: Sequence, seed, extra: Optional[dict] = None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": {k: (str(v) if isinstance(v, MonthStamp) else v) for k, v in config.items()},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _merge_config(args, file_keys: Sequence[str]) -> dict:
    """File values first, explicit command-line flags override them."""
    cfg: dict = {}
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in file_keys:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _restrict_signals(panel: SignalPanel, start: Optional[MonthStamp], end: Optional[MonthStamp]) -> SignalPanel:
    keep = [
        i
        for i, d in enumerate(panel.dates)
        if (start is None or d >= start) and (end is None or d <= end)
    ]
    return SignalPanel(
        tuple(panel.dates[i] for i in keep), panel.assets, panel.signals, panel.values[keep]
    )


def _restrict_returns(panel: ReturnPanel, start: Optional[MonthStamp], end: Optional[MonthStamp]) -> ReturnPanel:
    keep = [
        i
        for i, d in enumerate(panel.dates)
        if (start is None or d >= start) and (end is None or d <= end)
    ]
    return ReturnPanel(tuple(panel.dates[i] for i in keep), panel.assets, panel.values[keep])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _merge_config(args, ("signals", "returns", "layout"))
    issues = []
    signals = returns = None
    try:
        signals = load_signals(cfg["signals"], layout=cfg.get("layout", "long"))
    except XsdfError as exc:
        issues.append((exc, f"signals: {exc}"))
    try:
        returns = load_returns(cfg["returns"])
    except XsdfError as exc:
        issues.append((exc, f"returns: {exc}"))
    if signals is not None and returns is not None:
        try:
            standardize(signals)
            sample = align(signals, returns)
            print(
                f"ok: {sample.T} aligned months, {len(sample.assets)} assets, "
                f"{len(sample.signals)} signals"
            )
        except XsdfError as exc:
            issues.append((exc, f"alignment: {exc}"))
    _write_manifest(args.out, "validate", cfg, [p for p in (cfg.get("signals"), cfg.get("returns")) if p and os.path.exists(p)], args.seed)
    if issues:
        for _, msg in issues:
            print(msg, file=sys.stderr)
        return max(_exit_code(exc) for exc, _ in issues)
    return EXIT_OK


def _load_aligned(cfg):
    signals = load_signals(cfg["signals"], layout=cfg.get("layout", "long"))
    returns = load_returns(cfg["returns"])
    start = MonthStamp.parse(cfg["start"]) if "start" in cfg else None
    end = MonthStamp.parse(cfg["end"]) if "end" in cfg else None
    signals = _restrict_signals(signals, start, end)
    returns = _restrict_returns(returns, start, end.shift(1) if end else None)
    if cfg.get("standardize", True):
        signals = standardize(signals)
    return signals, returns, align(signals, returns)


def cmd_estimate(args) -> int:
    from .managed import build_managed

    cfg = _merge_config(
        args,
        (
            "signals", "returns", "layout", "objective", "restriction",
            "zero_cost", "ridge", "cv_folds", "tol", "max_iter",
            "standardize", "start", "end",
        ),
    )
    cfg.setdefault("objective", "max_sharpe")
    cfg.setdefault("restriction", "cross")
    cfg.setdefault("zero_cost", False)
    cfg.setdefault("ridge", "1.0")
    _signals, _returns, sample = _load_aligned(cfg)
    series = build_managed(sample, zero_cost=cfg["zero_cost"])

    chosen = None
    trace = None
    if cfg["objective"] == "max_return":
        if cfg["restriction"] == "self":
            raise ValueError("the self restriction applies to max_sharpe only")
        params = estimators.estimate_max_return(series)
    elif cfg["objective"] == "max_sharpe":
        if str(cfg["ridge"]).lower() == "cv":
            cv = estimators.cross_validate(
                series,
                folds=int(cfg.get("cv_folds", 5)),
                tol=float(cfg.get("tol", 1e-8)),
                max_iter=int(cfg.get("max_iter", 500)),
                restriction=cfg["restriction"],
            )
            chosen = cv.chosen
        else:
            chosen = float(cfg["ridge"])
        params, trace = estimators.estimate_max_sharpe_ridge(
            series,
            chosen,
            tol=float(cfg.get("tol", 1e-8)),
            max_iter=int(cfg.get("max_iter", 500)),
            restriction=cfg["restriction"],
        )
    else:
        raise ValueError(f"unknown objective {cfg['objective']!r}")

    estimators.export_params(
        params,
        sample.signals,
        sample.assets,
        args.out,
        trace=trace,
        extra_meta={
            "tol": float(cfg.get("tol", 1e-8)),
            "max_iter": int(cfg.get("max_iter", 500)),
            "window": [str(sample.return_dates[0]), str(sample.return_dates[-1])],
        },
    )
    _write_manifest(
        args.out,
        "estimate",
        cfg,
        [cfg["signals"], cfg["returns"]],
        args.seed,
        extra={
            "chosen_ridge": chosen,
            "standardization": STANDARDIZATION_POLICY if cfg.get("standardize", True) else "none",
        },
    )
    print(f"estimated {cfg['objective']} ({cfg['restriction']}) on {sample.T} months")
    return EXIT_OK


def cmd_backtest(args) -> int:
    cfg = _merge_config(
        args,
        (
            "signals", "returns", "layout", "window_months", "objective",
            "restriction", "zero_cost", "leverage", "ridge", "cv_folds",
            "oos_start", "tol", "max_iter", "warm_start", "standardize",
        ),
    )
    ridge_raw = str(cfg.get("ridge", "1.0"))
    cv_grid = None
    if cfg.get("cv_grid"):
        cv_grid = tuple(float(v) for v in str(cfg["cv_grid"]).split(","))
    config = backtest.BacktestConfig(
        window_months=int(cfg.get("window_months", 120)),
        objective=cfg.get("objective", "max_sharpe"),
        restriction=cfg.get("restriction", "cross"),
        zero_cost=bool(cfg.get("zero_cost", False)),
        leverage=float(cfg["leverage"]) if cfg.get("leverage") is not None else None,
        ridge="cv" if ridge_raw.lower() == "cv" else float(ridge_raw),
        cv_grid=cv_grid,
        cv_folds=int(cfg.get("cv_folds", 5)),
        oos_start=MonthStamp.parse(cfg["oos_start"]) if cfg.get("oos_start") else None,
        tol=float(cfg.get("tol", 1e-8)),
        max_iter=int(cfg.get("max_iter", 500)),
        warm_start=bool(cfg.get("warm_start", True)),
        standardize=bool(cfg.get("standardize", True)),
    )
    signals = load_signals(cfg["signals"], layout=cfg.get("layout", "long"))
    returns = load_returns(cfg["returns"])
    # warm-started runs are sequential by design; the worker cap applies otherwise
    threads = 1 if config.warm_start else args.threads
    result = backtest.run(signals, returns, config, threads=threads)

    os.makedirs(args.out, exist_ok=True)
    backtest.write_oos_returns(result, os.path.join(args.out, "oos_returns.csv"))
    backtest.write_weights(result, os.path.join(args.out, "weights.csv"))
    backtest.write_lambda_history(result, os.path.join(args.out, "lambda_history.csv"))
    backtest.write_chosen_lambda(result, os.path.join(args.out, "chosen_lambda.csv"))
    strategy.write_report(result.report(), os.path.join(args.out, "report.csv"))
    reports = [
        network.connectedness(p.spillover, date=d)
        for p, d in zip(result.params_history, result.return_dates)
    ]
    network.write_connectedness(
        reports,
        result.assets,
        os.path.join(args.out, "connectedness.csv"),
        total_path=os.path.join(args.out, "total_connectedness.csv"),
    )
    trailing_window = min(120, result.n_months)
    ts = backtest.trailing_sharpe(result, window=trailing_window)
    backtest.write_trailing_sharpe(ts, os.path.join(args.out, "trailing_sharpe.csv"))
    _write_manifest(
        args.out,
        "backtest",
        cfg,
        [cfg["signals"], cfg["returns"]],
        args.seed,
        extra={
            "threads": threads,
            "oos_months": result.n_months,
            "standardization": STANDARDIZATION_POLICY if config.standardize else "none",
        },
    )
    rep = result.report()
    print(
        f"backtest done: {result.n_months} OOS months, "
        f"mu={rep.mu_monthly_pct:.2f}% sigma={rep.sigma_monthly_pct:.2f}% "
        f"SR={rep.sharpe_annualized:.2f}"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synth.load_dgp_spec(args.spec)
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    signals, returns = synth.generate(spec)
    os.makedirs(args.out, exist_ok=True)
    write_signals(signals, os.path.join(args.out, "signals.csv"), layout="long")
    write_returns(returns, os.path.join(args.out, "returns.csv"))
    notes = ["signals are raw draws (standardize before trading)"]
    if not np.any(spec.slopes):
        notes.append("null predictability: all slope entries are zero")
    _write_manifest(
        args.out,
        "synth",
        {"spec": str(args.spec), "t": spec.T, "seed": spec.seed},
        [args.spec],
        spec.seed,
        extra={"notes": notes},
    )
    for note in notes:
        print(f"note: {note}")
    print(f"wrote {spec.T} months for {spec.n_assets} assets to {args.out}")
    return EXIT_OK


def _load_psi(path) -> tuple[np.ndarray, tuple[str, ...]]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != ["from_asset", "to_asset", "value"]:
        raise ParseError(
            f"{path}: expected header from_asset,to_asset,value, got {list(df.columns)}"
        )
    assets: list[str] = []
    for a in list(df["from_asset"]) + list(df["to_asset"]):
        if a not in assets:
            assets.append(a)
    psi = np.zeros((len(assets), len(assets)))
    index = {a: i for i, a in enumerate(assets)}
    for row, rec in enumerate(df.itertuples(index=False), start=2):
        try:
            psi[index[rec.from_asset], index[rec.to_asset]] = float(rec.value)
        except ValueError as exc:
            raise ParseError(f"{path} row {row}: bad value {rec.value!r}") from exc
    return psi, tuple(assets)


def _load_labels(path) -> dict:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != ["asset", "label"]:
        raise ParseError(f"{path}: expected header asset,label, got {list(df.columns)}")
    return {rec.asset: rec.label for rec in df.itertuples(index=False)}


def _load_factors(path) -> tuple[list[MonthStamp], np.ndarray, list[str]]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if df.columns[0] != "date" or df.shape[1] < 2:
        raise ParseError(f"{path}: expected header date,<factor>,... got {list(df.columns)}")
    dates = [MonthStamp.parse(d) for d in df["date"]]
    values = df.iloc[:, 1:].astype(float).to_numpy()
    return dates, values, list(df.columns[1:])


def cmd_analyze(args) -> int:
    inputs = []
    wrote = []
    os.makedirs(args.out, exist_ok=True)

    if args.psi:
        psi, assets = _load_psi(args.psi)
        inputs.append(args.psi)
        rep = network.connectedness(psi)
        network.write_connectedness(
            [rep],
            assets,
            os.path.join(args.out, "connectedness.csv"),
            total_path=os.path.join(args.out, "total_connectedness.csv"),
        )
        wrote += ["connectedness.csv", "total_connectedness.csv"]
        print(f"total connectedness: {rep.total}")
        if args.labels:
            label_map = _load_labels(args.labels)
            inputs.append(args.labels)
            missing = [a for a in assets if a not in label_map]
            if missing:
                raise LabelMismatch(f"{args.labels}: no label for assets {missing}")
            blocks = network.block_average(psi, [label_map[a] for a in assets])
            network.write_blocks([blocks], os.path.join(args.out, "blocks.csv"))
            wrote.append("blocks.csv")

    if args.lambda_history:
        df = pd.read_csv(args.lambda_history, dtype=str, keep_default_na=False)
        if list(df.columns) != ["date", "signal", "value"]:
            raise ParseError(
                f"{args.lambda_history}: expected header date,signal,value"
            )
        inputs.append(args.lambda_history)
        theme_map = None
        if args.themes:
            tdf = pd.read_csv(args.themes, dtype=str, keep_default_na=False)
            if list(tdf.columns) != ["signal", "theme"]:
                raise ParseError(f"{args.themes}: expected header signal,theme")
            theme_map = {rec.signal: rec.theme for rec in tdf.itertuples(index=False)}
            inputs.append(args.themes)
        sig_names = list(dict.fromkeys(df["signal"]))
        by_date: dict = {}
        for rec in df.itertuples(index=False):
            by_date.setdefault(rec.date, {})[rec.signal] = float(rec.value)
        stack = np.array([[row[s] for s in sig_names] for row in by_date.values()])
        importance = np.abs(stack).mean(axis=0)
        report = network.ImportanceReport(
            signals=tuple(sig_names),
            importance=importance,
            theme_importance=None,
        )
        network.write_importance(report, os.path.join(args.out, "importance.csv"), theme_map)
        wrote.append("importance.csv")

    if args.spanning:
        strat_path, factors_path = args.spanning
        sdf = pd.read_csv(strat_path, dtype=str, keep_default_na=False)
        if list(sdf.columns) != ["date", "return"]:
            raise ParseError(f"{strat_path}: expected header date,return")
        strat_dates = [MonthStamp.parse(d) for d in sdf["date"]]
        strat = sdf["return"].astype(float).to_numpy()
        f_dates, factors, names = _load_factors(factors_path)
        inputs += [strat_path, factors_path]
        result = regress.factor_spanning(
            strat, factors, factor_names=names,
            strategy_dates=strat_dates, factor_dates=f_dates,
        )
        regress.write_spanning(result, "user", os.path.join(args.out, "spanning.csv"))
        wrote.append("spanning.csv")
        print(
            f"alpha={result.coefficients[0]:.4f}%/mo "
            f"(t={result.hac_t_stats[0]:.2f}, lag={result.lag_used})"
        )

    if args.panel_reg:
        conn_path, chars_path = args.panel_reg
        cdf = pd.read_csv(conn_path, dtype=str, keep_default_na=False)
        expected = ["date", "asset", "from", "to", "net"]
        if list(cdf.columns) != expected:
            raise ParseError(f"{conn_path}: expected header {expected}")
        xdf = pd.read_csv(chars_path, dtype=str, keep_default_na=False)
        if list(xdf.columns[:2]) != ["date", "asset"] or xdf.shape[1] < 3:
            raise ParseError(f"{chars_path}: expected header date,asset,<char>,...")
        inputs += [conn_path, chars_path]
        char_names = list(xdf.columns[2:])
        measure_col = expected.index(args.measure)  # positional: 'from' is a keyword
        dep_by_month: dict = {}
        for rec in cdf.itertuples(index=False):
            dep_by_month.setdefault(rec[0], {})[rec[1]] = float(rec[measure_col])
        chars_by_month: dict = {}
        for rec in xdf.itertuples(index=False):
            chars_by_month.setdefault(rec[0], {})[rec[1]] = [float(v) for v in rec[2:]]
        months = [m for m in dep_by_month if m in chars_by_month]
        dep_list, char_list = [], []
        for m in months:
            assets_m = sorted(dep_by_month[m])
            if sorted(chars_by_month[m]) != assets_m:
                raise DateMisalignment(
                    f"month {m}: assets differ between {conn_path} and {chars_path}"
                )
            dep_list.append(np.array([dep_by_month[m][a] for a in assets_m]))
            char_list.append(np.array([chars_by_month[m][a] for a in assets_m]))
        result = regress.cross_sectional_panel(
            dep_list, char_list, names=char_names, month_ids=months
        )
        regress.write_panel_regression(
            result, args.measure, os.path.join(args.out, "panel_reg.csv")
        )
        wrote.append("panel_reg.csv")

    if not wrote:
        raise ValueError(
            "nothing to analyze: pass --psi, --lambda-history, --spanning or --panel-reg"
        )
    _write_manifest(args.out, "analyze", {"outputs": wrote}, inputs, args.seed)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="xsdf", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="seed for anything random")
    parser.add_argument("--threads", type=int, default=1, help="worker cap for parallel windows")
    parser.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check panel files and their alignment")
    p.add_argument("--config")
    p.add_argument("--signals")
    p.add_argument("--returns")
    p.add_argument("--layout", choices=("long", "wide"))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("estimate", help="single-window estimation; writes lambda/psi CSVs")
    p.add_argument("--config")
    p.add_argument("--signals")
    p.add_argument("--returns")
    p.add_argument("--layout", choices=("long", "wide"))
    p.add_argument("--objective", choices=("max_return", "max_sharpe"))
    p.add_argument("--restriction", choices=("cross", "self"))
    p.add_argument("--zero-cost", dest="zero_cost", action="store_const", const=True)
    p.add_argument("--ridge", help="shrinkage value, or 'cv'")
    p.add_argument("--cv-folds", dest="cv_folds", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--start", help="first signal month YYYY-MM")
    p.add_argument("--end", help="last signal month YYYY-MM")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("backtest", help="rolling out-of-sample run")
    p.add_argument("--config")
    p.add_argument("--signals")
    p.add_argument("--returns")
    p.add_argument("--layout", choices=("long", "wide"))
    p.add_argument("--window-months", dest="window_months", type=int)
    p.add_argument("--objective", choices=("max_return", "max_sharpe"))
    p.add_argument("--restriction", choices=("cross", "self"))
    p.add_argument("--zero-cost", dest="zero_cost", action="store_const", const=True)
    p.add_argument("--leverage", type=float)
    p.add_argument("--ridge", help="shrinkage value, or 'cv'")
    p.add_argument("--cv-folds", dest="cv_folds", type=int)
    p.add_argument("--oos-start", dest="oos_start", help="first OOS month YYYY-MM")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--no-warm-start", dest="warm_start", action="store_const", const=False)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("synth", help="generate synthetic panels from a DGP spec")
    p.add_argument("--spec", required=True, help="TOML spec file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="network / importance / spanning analytics")
    p.add_argument("--psi", help="psi.csv to compute connectedness from")
    p.add_argument("--labels", help="asset,label CSV for block averages")
    p.add_argument("--lambda-history", dest="lambda_history", help="date,signal,value CSV")
    p.add_argument("--themes", help="signal,theme CSV for importance rollup")
    p.add_argument("--spanning", nargs=2, metavar=("STRATEGY", "FACTORS"))
    p.add_argument("--panel-reg", dest="panel_reg", nargs=2, metavar=("CONNECTEDNESS", "CHARS"))
    p.add_argument("--measure", choices=("from", "to", "net"), default="net")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
