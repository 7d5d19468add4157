"""Command-line front end: ``robust-tps {fit,predict,select,outliers,simulate}``.

Exit codes: 0 success, 2 input/config parse error, 3 design or dimension
validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
import warnings
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from .design import build_design, mesh_stats
from .diagnostics import flag_outliers, write_outlier_table
from .errors import (AllFailed, DimensionError, DuplicatePoints, LeverageOne,
                     NoConvergenceWarning, RankDeficient, SingularSystem)
from .io import ParseError, load_model, read_dataset, read_table, save_model
from .loss import LossSpec
from .select import select_lambda
from .simulate import ConfigError, load_config, run_scenario, write_results
from .solver import fit, objective, predict

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

# residuals below this fraction of max|y| are solver round-off and count as zero
ROUNDOFF_RTOL = 1e-9


class GridSpecError(ValueError):
    pass


def parse_grid(specs: list[str]) -> np.ndarray:
    """Expand ``min:max:steps`` axis specs into lexicographically ordered points."""
    axes = []
    for spec in itertools.chain.from_iterable(s.split(",") for s in specs):
        parts = spec.strip().split(":")
        if len(parts) != 3:
            raise GridSpecError(f"grid axis {spec!r} is not min:max:steps")
        try:
            lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise GridSpecError(f"grid axis {spec!r} is not min:max:steps") from None
        if steps < 1:
            raise GridSpecError(f"grid axis {spec!r} needs at least one step")
        axes.append(np.linspace(lo, hi, steps) if steps > 1 else np.array([lo]))
    return np.array(list(itertools.product(*axes)), dtype=float)


def _loss_from_args(args) -> LossSpec:
    return LossSpec(args.loss, huber_c=args.huber_c, quantile_alpha=args.alpha)


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def cmd_fit(args) -> int:
    names, data = read_dataset(args.data, args.response)
    loss = _loss_from_args(args)
    design = build_design(data, args.m)
    stats = mesh_stats(data, args.m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        if args.rcv:
            result = select_lambda(data, args.m, loss, design=design)
            model = result.model
        else:
            model = fit(data, args.m, args.lam, loss, design=design)
    save_model(model, args.out)
    print(f"n = {data.n}")
    print(f"d = {data.d}  ({', '.join(names)})")
    print(f"M = {design.M}")
    print(f"h_min = {stats.h_min:.6g}")
    print(f"lambda = {model.lam:.6g}{'  (rcv)' if args.rcv else ''}")
    print(f"loss = {loss.family}")
    print(f"iterations = {model.iterations}  converged = {str(model.converged).lower()}")
    print(f"objective = {objective(data, model):.10g}")
    print(f"max_abs_residual = {np.max(np.abs(model.final_residuals)):.6g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if (args.grid is None) == (args.points is None):
        raise ParseError("give exactly one of --grid or --points")
    if args.grid is not None:
        pts = parse_grid(args.grid)
    else:
        _, pts, _ = read_table(args.points, response=None)
    if pts.shape[1] != model.d:
        raise DimensionError(f"model has dimension {model.d}, points have {pts.shape[1]}")
    fhat = predict(model, pts)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(model.d)] + ["fhat"])
        for p, v in zip(pts, fhat):
            w.writerow([f"{c:.17g}" for c in p] + [f"{v:.17g}"])
    return EXIT_OK


def cmd_select(args) -> int:
    _, data = read_dataset(args.data, args.response)
    loss = _loss_from_args(args)
    grid = None
    if args.lambdas:
        try:
            grid = np.array([float(v) for v in args.lambdas.split(",")])
        except ValueError:
            raise ParseError(f"bad --lambdas list {args.lambdas!r}") from None
    result = select_lambda(data, args.m, loss, grid=grid)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "rcv", "chosen"])
        for k, (lam, c) in enumerate(zip(result.grid, result.criteria)):
            w.writerow([f"{lam:.17g}", f"{c:.17g}", int(k == result.chosen_index)])
    print(f"chosen_lambda = {result.chosen_lambda:.6g}  (index {result.chosen_index}, "
          f"{result.n_failed} failed)", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_outliers(args) -> int:
    model = load_model(args.model)
    _, data = read_dataset(args.data, args.response)
    if data.d != model.d:
        raise DimensionError(f"model has dimension {model.d}, data has {data.d}")
    resid = data.responses - predict(model, data.points)
    resid[np.abs(resid) <= ROUNDOFF_RTOL * np.max(np.abs(data.responses))] = 0.0
    report = flag_outliers(resid, args.threshold)
    with _output(args.out) as fh:
        write_outlier_table(report, fh)
    print(f"n_flagged = {report.n_flagged}",
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_simulate(args) -> int:
    configs = load_config(args.config)
    if args.seed is not None:
        configs = [replace(c, seed=args.seed) for c in configs]
    results = [run_scenario(c) for c in configs]
    with _output(args.out) as fh:
        write_results(results, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robust-tps", description="Robust thin-plate spline smoothing.")
    sub = p.add_subparsers(dest="command", required=True)

    def loss_flags(sp):
        sp.add_argument("--m", type=int, default=2, help="penalty order (default 2)")
        sp.add_argument("--loss", default="ls",
                        choices=["ls", "square", "huber", "logistic", "lad", "quantile"])
        sp.add_argument("--huber-c", type=float, default=1.345)
        sp.add_argument("--alpha", type=float, default=0.5, help="quantile level")
        sp.add_argument("--response", default="y", help="response column name")

    sp = sub.add_parser("fit", help="fit a model to a CSV dataset")
    sp.add_argument("data")
    loss_flags(sp)
    lam = sp.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--rcv", action="store_true", help="choose lambda by robust CV")
    sp.add_argument("--out", required=True, help="model file to write")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="evaluate a model on a grid or on points")
    sp.add_argument("model")
    sp.add_argument("--grid", action="append", help="min:max:steps per axis (repeat or comma-separate)")
    sp.add_argument("--points", help="CSV of query points (all columns are coordinates)")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("select", help="tabulate the RCV criterion over a lambda grid")
    sp.add_argument("data")
    loss_flags(sp)
    sp.add_argument("--lambdas", help="comma-separated ascending lambda values")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("outliers", help="flag observations with large standardized residuals")
    sp.add_argument("model")
    sp.add_argument("data")
    sp.add_argument("--threshold", type=float, default=2.5)
    sp.add_argument("--response", default="y")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_outliers)

    sp = sub.add_parser("simulate", help="run a Monte Carlo study from a config file")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError, GridSpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DuplicatePoints, RankDeficient, DimensionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SingularSystem, LeverageOne, AllFailed, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
