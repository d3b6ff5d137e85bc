"""Command line pipelines.

Subcommands: ``learn-tree``, ``fit``, ``rare-event``, ``simulate``,
``simstudy``, ``decluster``, ``table1``. Exit codes: 0 on success, 2 on
malformed input, 3 on estimation failure. ``TAILTREE_THREADS`` sets the
worker count for ``simstudy``; every report embeds the seed and Monte Carlo
size it used.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import replace
from datetime import date
from pathlib import Path

import numpy as np

from tailtree.depmeasures import SampleMatrix, empirical_tdc_matrix, kendall_tau_matrix
from tailtree.errors import EstimationError, InputError
from tailtree.estimators import EstimatorConfig, fit_tree_model
from tailtree.graph import prim_max_tree, tree_from_json, tree_to_json, tree_weight_sum
from tailtree.margins import (
    GpdFit,
    HybridTailCdf,
    decluster,
    empirical_quantile,
    gpd_fit_mle,
    mean_residual_life,
)
from tailtree.simulate import FIXTURES, SimulationSpec, simulate_sample
from tailtree.study import (
    StudyConfig,
    empirical_union_fraction,
    reference_tree_table,
    run_study,
)
from tailtree.treemodel import (
    approximation_error_D,
    model_from_json,
    model_to_json,
    rare_event_probability,
)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_matrix_csv(path: Path, matrix: np.ndarray, columns) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(matrix.tolist())


def _load_config_file(path: str) -> dict:
    """Key/value config: one ``key = value`` pair per line, # comments."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}: line {lineno} is not of the form key = value")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip().strip("\"'")
    return values


def _apply_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    passed = {tok.split("=", 1)[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, raw in _load_config_file(args.config).items():
        if key in passed or not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            val = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int) and not isinstance(current, bool):
            val = int(raw)
        elif isinstance(current, float):
            val = float(raw)
        else:
            val = raw
        setattr(args, key, val)
    return args


def _weight_matrix(sample: SampleMatrix, weight: str, k_lambda: int) -> np.ndarray:
    if weight == "tau":
        return kendall_tau_matrix(sample)
    if weight == "lambda":
        return empirical_tdc_matrix(sample, k_lambda)
    raise InputError(f"unknown edge weight {weight!r}")


def _check_nondegenerate(sample: SampleMatrix) -> None:
    spans = sample.values.max(axis=0) - sample.values.min(axis=0)
    flat = [sample.columns[j] for j in range(sample.d) if spans[j] == 0.0]
    if flat:
        raise InputError(f"constant column(s) {flat}: ranks are degenerate")


def _default_k_lambda(args, n: int) -> int:
    k = getattr(args, "k_lambda", None)
    return int(k) if k else max(1, round(0.1 * n))


# ---------------------------------------------------------------------------
# Daily series handling (rare-event and decluster subcommands)


def _read_daily_csv(path: str):
    """date,station_1..station_d rows -> (station names, list of per-year periods).

    Periods are the contiguous stretches of the configured months within each
    calendar year.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(header) < 2 or header[0].lower() != "date":
            raise InputError(f"{path}: first column must be 'date'")
        stations = header[1:]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {lineno} has {len(row)} fields")
            try:
                day = date.fromisoformat(row[0].strip())
            except ValueError:
                raise InputError(f"{path}: line {lineno} has a bad date {row[0]!r}") from None
            try:
                vals = [float(c) for c in row[1:]]
            except ValueError:
                raise InputError(f"{path}: line {lineno} has a non-numeric value") from None
            if not all(np.isfinite(vals)):
                raise InputError(f"{path}: line {lineno} has a non-finite value")
            rows.append((day, vals))
    if not rows:
        raise InputError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    return stations, rows


def _split_periods(rows, months: tuple[int, ...]):
    periods = []
    current: list[list[float]] = []
    prev_day = None
    for day, vals in rows:
        if day.month not in months:
            prev_day = None
            continue
        if prev_day is not None and (day - prev_day).days != 1:
            if current:
                periods.append(np.asarray(current))
            current = []
        current.append(vals)
        prev_day = day
    if current:
        periods.append(np.asarray(current))
    return periods


def _parse_months(text: str) -> tuple[int, ...]:
    try:
        months = tuple(int(m) for m in text.split(","))
    except ValueError:
        raise InputError(f"bad month list {text!r}") from None
    if not months or any(not 1 <= m <= 12 for m in months):
        raise InputError(f"months must lie in 1..12, got {text!r}")
    return months


# ---------------------------------------------------------------------------
# Subcommands


def cmd_learn_tree(args) -> int:
    sample = SampleMatrix.from_csv(args.input)
    _check_nondegenerate(sample)
    k_lambda = _default_k_lambda(args, sample.n)
    wmat = _weight_matrix(sample, args.weight, k_lambda)
    tree = prim_max_tree(wmat)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tree.json").write_text(tree_to_json(tree) + "\n")
    _write_matrix_csv(out / "weights.csv", wmat, sample.columns)
    _write_json(
        out / "learn_tree_report.json",
        {
            "input": str(args.input),
            "weight": args.weight,
            "k_lambda": k_lambda if args.weight == "lambda" else None,
            "n": sample.n,
            "d": sample.d,
            "edges": [list(e) for e in tree.edges],
            "weight_sum": tree_weight_sum(tree, wmat),
        },
    )
    print(f"learned tree with edges {list(tree.edges)}")
    return 0


def cmd_fit(args) -> int:
    sample = SampleMatrix.from_csv(args.input)
    _check_nondegenerate(sample)
    tree = tree_from_json(Path(args.tree).read_text())
    cfg = EstimatorConfig(
        method=args.method,
        k=args.k,
        family=args.family,
        grid=args.grid,
    )
    model, diags = fit_tree_model(sample, tree, cfg)
    k_lambda = _default_k_lambda(args, sample.n)
    lam_hat = empirical_tdc_matrix(sample, k_lambda)
    rng = np.random.default_rng(args.seed)
    dhat = approximation_error_D(model, lam_hat, n_mc=args.n_mc, rng=rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model_to_json(model) + "\n")
    _write_json(out / "edge_diagnostics.json", [d.to_dict() for d in diags])
    _write_json(
        out / "fit_report.json",
        {
            "input": str(args.input),
            "method": args.method,
            "family": args.family,
            "k": args.k,
            "k_lambda": k_lambda,
            "dhat": dhat,
            "seed": args.seed,
            "n_mc": args.n_mc,
        },
    )
    print(f"fitted {len(diags)} edges; goodness-of-fit distance {dhat:.4f}")
    return 0


def cmd_rare_event(args) -> int:
    model = model_from_json(Path(args.model).read_text())
    stations, rows = _read_daily_csv(args.daily)
    if len(stations) != model.d:
        raise InputError(
            f"model has {model.d} components but {args.daily} has {len(stations)} stations"
        )
    months = _parse_months(args.months)
    periods = _split_periods(rows, months)
    if not periods:
        raise InputError("no data in the configured months")

    daily = np.concatenate(periods, axis=0)
    events_mv = decluster(periods, window=args.window, mode="multivariate")
    margins = []
    fits = []
    for j in range(model.d):
        uni = decluster([p[:, j] for p in periods], window=args.window, mode="univariate")
        vals = uni.values[:, 0]
        basis = daily[:, j] if args.threshold_on == "daily" else vals
        q = empirical_quantile(basis, args.gpd_p)
        exc = vals[vals > q] - q
        sigma, shape, _ = gpd_fit_mle(exc)
        fit = GpdFit(q, exc.size / vals.size, sigma, shape)
        margins.append(HybridTailCdf(vals, fit))
        fits.append(
            {
                "station": stations[j],
                "n_events": int(vals.size),
                "n_excesses": int(exc.size),
                "mrl": mean_residual_life(vals, (0.8, 0.85, 0.9, 0.95)),
                **fit.to_dict(),
            }
        )

    u = np.full(model.d, np.inf)
    if args.thresholds is not None:
        for part in args.thresholds.split(","):
            if not part.strip():
                continue
            name, _, val = part.partition("=")
            name = name.strip()
            if name not in stations:
                raise InputError(f"unknown station {name!r} in --thresholds")
            u[stations.index(name)] = float(val)
    else:
        if not args.stations:
            raise InputError("provide --thresholds or --stations with --quantile")
        basis_all = daily if args.quantile_on == "daily" else events_mv.values
        for name in args.stations.split(","):
            name = name.strip()
            if name not in stations:
                raise InputError(f"unknown station {name!r} in --stations")
            j = stations.index(name)
            u[j] = empirical_quantile(basis_all[:, j], args.quantile)
    for j in range(model.d):
        if np.isfinite(u[j]) and u[j] < margins[j].fit.threshold:
            warnings.warn(
                f"threshold for {stations[j]} is below its GPD threshold; "
                "using the empirical part of the hybrid margin"
            )

    rng = np.random.default_rng(args.seed)
    prob, se = rare_event_probability(model, margins, u, n_mc=args.n_mc, rng=rng)
    report = {
        "stations": stations,
        "thresholds": [None if np.isinf(x) else float(x) for x in u],
        "probability": prob,
        "std_error": se,
        "empirical_union_fraction": empirical_union_fraction(events_mv.values, u),
        "n_events_multivariate": len(events_mv),
        "margins": fits,
        "seed": args.seed,
        "n_mc": args.n_mc,
        "window": args.window,
        "months": list(months),
        "gpd_p": args.gpd_p,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "rare_event_report.json", report)
    print(f"union exceedance probability {prob:.4%} (se {se:.2e})")
    return 0


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    sample = simulate_sample(spec, noise=not args.no_noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sample.to_csv(out / "sample.csv")
    manifest = {
        "generator": spec.generator,
        "n": spec.n,
        "seed": spec.seed,
        "noise_shape": None if args.no_noise else spec.noise_shape,
        "gamma": spec.gamma,
        "psi": spec.psi,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {spec.n} x {spec.d} sample to {out / 'sample.csv'}")
    return 0


def _spec_from_args(args) -> SimulationSpec:
    gamma = psi = None
    if args.fixture:
        fx = FIXTURES.get(args.fixture.lower())
        if fx is None:
            raise InputError(f"unknown fixture {args.fixture!r}; choose from {sorted(FIXTURES)}")
        if args.fixture.lower().startswith("gamma"):
            gamma = fx
        else:
            psi = fx
    if args.gamma_csv:
        gamma = np.loadtxt(args.gamma_csv, delimiter=",")
    if getattr(args, "psi", None):
        psi = np.array([float(x) for x in args.psi.split(",")])
    if args.generator == "hr" and gamma is None:
        raise InputError("hr generator needs --fixture gammaN or --gamma-csv")
    if args.generator == "alog" and psi is None:
        raise InputError("alog generator needs --fixture psiN or --psi")
    return SimulationSpec(
        generator=args.generator,
        gamma=gamma,
        psi=psi,
        n=args.n,
        noise_shape=args.noise_shape,
        seed=args.seed,
    )


def cmd_simstudy(args) -> int:
    spec = _spec_from_args(args)
    weights = tuple(w.strip() for w in args.weight.split(","))
    est = EstimatorConfig(method=args.method, k=args.k, family=args.family, grid=args.grid)
    metrics = tuple(m.strip() for m in args.metrics.split(","))
    true_tree = None
    true_vario = None
    if args.true_tree:
        true_tree = tree_from_json(Path(args.true_tree).read_text())
    if spec.generator == "hr" and ("vario" in metrics):
        true_vario = spec.gamma
    config = StudyConfig(
        spec=spec,
        reps=args.reps,
        weights=weights,
        estimator=est,
        k_lambda=args.k_lambda,
        metrics=metrics,
        true_tree=true_tree,
        true_variogram=true_vario,
        oracle_tol=args.oracle_tol,
        n_mc=args.n_mc,
    )
    results = run_study(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "simstudy.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(results[0].to_row()))
        writer.writeheader()
        for res in results:
            writer.writerow(res.to_row())
    _write_json(
        out / "simstudy_manifest.json",
        {
            "generator": spec.generator,
            "reps": args.reps,
            "n": spec.n,
            "seed": spec.seed,
            "weights": list(weights),
            "method": args.method,
            "k": args.k,
            "k_lambda": args.k_lambda,
            "metrics": list(metrics),
            "n_mc": args.n_mc,
        },
    )
    n_err = sum(1 for r in results if r.error)
    print(f"wrote {len(results)} replication rows to {path} ({n_err} with errors)")
    return 0


def cmd_decluster(args) -> int:
    stations, rows = _read_daily_csv(args.daily)
    months = _parse_months(args.months)
    periods = _split_periods(rows, months)
    if not periods:
        raise InputError("no data in the configured months")
    events = decluster(periods, window=args.window, mode="multivariate")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(stations)
        writer.writerows(events.values.tolist())
    print(f"wrote {len(events)} events to {out}")
    return 0


def cmd_table1(args) -> int:
    rows = reference_tree_table()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "tree_table.csv"
    with open(path, "w", newline="") as fh:
        names = [k for k in rows[0] if k not in ("structure", "labels")]
        writer = csv.writer(fh)
        writer.writerow(["structure", "labels"] + names)
        for row in rows:
            writer.writerow(
                [row["structure"], "-".join(map(str, row["labels"]))]
                + [f"{row[k]:.6f}" for k in names]
            )
    print(f"wrote analytic tree table to {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailtree",
        description="tree-structured multivariate extreme value modelling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value file; explicit flags win")
        p.add_argument("--out", default="tailtree-out", help="output directory")

    p = sub.add_parser("learn-tree", help="estimate the maximum dependence tree")
    add_common(p)
    p.add_argument("--input", required=True, help="observation CSV (header + rows)")
    p.add_argument("--weight", choices=("tau", "lambda"), default="tau")
    p.add_argument(
        "--k-lambda",
        type=int,
        default=None,
        help="top ranks for the tail coefficient weight (default 0.1*n; "
        "ratios near 0.5*n are worth trying as well)",
    )
    p.set_defaults(func=cmd_learn_tree)

    p = sub.add_parser("fit", help="fit edge families on a given tree")
    add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--tree", required=True, help="tree JSON from learn-tree")
    p.add_argument("--method", choices=("mm", "m", "wls"), default="m")
    p.add_argument("--family", choices=("hr", "alog-sym"), default="hr")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--k-lambda", type=int, default=None)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-mc", type=int, default=100_000)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rare-event", help="joint exceedance probability with GPD margins")
    add_common(p)
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--daily", required=True, help="daily CSV: date,station columns")
    p.add_argument("--months", default="6,7,8")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--gpd-p", type=float, default=0.9)
    p.add_argument(
        "--threshold-on",
        choices=("daily", "events"),
        default="daily",
        help="sample used for the GPD threshold quantile",
    )
    p.add_argument("--thresholds", help="explicit levels, e.g. 'st4=715,st7=553'")
    p.add_argument("--stations", help="stations receiving the quantile threshold")
    p.add_argument("--quantile", type=float, default=0.999)
    p.add_argument(
        "--quantile-on",
        choices=("daily", "events"),
        default="daily",
        help="sample used for the --quantile thresholds",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-mc", type=int, default=100_000)
    p.set_defaults(func=cmd_rare_event)

    p = sub.add_parser("simulate", help="draw from a built-in generator")
    add_common(p)
    p.add_argument("--generator", choices=("hr", "alog"), required=True)
    p.add_argument("--fixture", help="gamma1..gamma4 or psi1..psi3")
    p.add_argument("--gamma-csv", help="variogram matrix CSV (no header)")
    p.add_argument("--psi", help="comma-separated weights")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-shape", type=float, default=2.0)
    p.add_argument("--no-noise", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simstudy", help="replicated generate/learn/fit/score runs")
    add_common(p)
    p.add_argument("--generator", choices=("hr", "alog"), required=True)
    p.add_argument("--fixture", help="gamma1..gamma4 or psi1..psi3")
    p.add_argument("--gamma-csv")
    p.add_argument("--psi")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-shape", type=float, default=2.0)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--weight", default="tau", help="comma list: tau,lambda")
    p.add_argument("--method", choices=("mm", "m", "wls"), default="m")
    p.add_argument("--family", choices=("hr", "alog-sym"), default="hr")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--k-lambda", type=int, default=None)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--metrics", default="tree,dhat", help="comma list: tree,vario,dhat,ae")
    p.add_argument("--true-tree", help="tree JSON to score recovery against")
    p.add_argument("--oracle-tol", type=float, default=1e-5)
    p.add_argument("--n-mc", type=int, default=100_000)
    p.set_defaults(func=cmd_simstudy)

    p = sub.add_parser("decluster", help="extract multivariate events from a daily CSV")
    p.add_argument("--config", help="key = value file; explicit flags win")
    p.add_argument("--daily", required=True)
    p.add_argument("--months", default="6,7,8")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--out", default="events.csv")
    p.set_defaults(func=cmd_decluster)

    p = sub.add_parser("table1", help="analytic tree table for the example models")
    add_common(p)
    p.set_defaults(func=cmd_table1)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, argv)
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"estimation failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
