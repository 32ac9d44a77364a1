"""``sparse-nb`` command line.

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .bernoulli import BernoulliModel, fit_sparse_bernoulli, predict_bernoulli
from .data import DataError, LabeledDataset, binarize, summarize
from .experiments import (
    METHODS,
    planted_dataset,
    run_gap_experiment,
    run_pipeline,
    run_scaling,
    select_from_dataset,
)
from .multinomial import predict_multinomial, smnb_bound

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

GAP_COLUMNS = ("k", "psi_k", "psi_km4", "primal_value", "a_posteriori_gap", "delta")
PIPELINE_COLUMNS = ("method", "k", "sparsity_pct", "stage2_accuracy", "fit_seconds", "selected")
SCALING_COLUMNS = ("m", "k", "seconds")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _factors(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad factor list {text!r}") from None


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-nb", description="Sparse naive Bayes fitting and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a sparse naive Bayes model")
    p.add_argument("--model", choices=("bnb", "smnb"), required=True)
    p.add_argument("--k", type=_nonneg_int, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=_nonneg_int)

    p = sub.add_parser("select", help="write the indices of k selected features")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--k", type=_nonneg_int, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=_nonneg_int)

    p = sub.add_parser("predict", help="label a data file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gap-experiment", help="duality gap on synthetic data")
    p.add_argument("--m", type=_nonneg_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", help="select features, then train and test MNB")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--k", type=_nonneg_int, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("scaling", help="median run time of the bound as m grows")
    p.add_argument("--base-m", type=_nonneg_int, required=True)
    p.add_argument("--factors", type=_factors, default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--k-ratio", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate-planted", help="write a planted train/test pair")
    p.add_argument("--m", type=_nonneg_int, default=1000)
    p.add_argument("--informative", type=_nonneg_int, default=10)
    p.add_argument("--n-train", type=_nonneg_int, default=2000)
    p.add_argument("--n-test", type=_nonneg_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--truth")
    return parser


def _cmd_fit(args):
    ds = io.read_svmlight(args.input, args.dims)
    if args.model == "bnb":
        occurrence = LabeledDataset(binarize(ds.x), ds.y)
        model, _, _ = fit_sparse_bernoulli(summarize(occurrence), args.k, args.gamma)
    else:
        gamma = args.gamma if args.gamma > 0 else None
        model = smnb_bound(summarize(ds), args.k, gamma=gamma, certify=False).primal_model
    io.save_model(args.out, model)


def _cmd_select(args):
    ds = io.read_svmlight(args.input, args.dims)
    selected = np.sort(select_from_dataset(ds, args.method, args.k, args.gamma))
    io.write_lines(args.out, selected.tolist())


def _cmd_predict(args):
    model = io.load_model(args.model)
    ds = io.read_svmlight(args.input, model.m)
    if isinstance(model, BernoulliModel):
        pred = predict_bernoulli(model, binarize(ds.x))
    else:
        pred = predict_multinomial(model, ds.x)
    io.write_lines(args.out, ["+1" if p == 1 else "-1" for p in pred])


def _cmd_gap(args):
    curve = run_gap_experiment(args.m, args.seed, args.gamma)
    io.write_csv(
        args.out, GAP_COLUMNS, ([getattr(r, c) for c in GAP_COLUMNS] for r in curve.rows)
    )


def _cmd_pipeline(args):
    train = io.read_svmlight(args.train)
    test = io.read_svmlight(args.test)
    m = max(train.n_features, test.n_features)
    if train.n_features != m:
        train = io.read_svmlight(args.train, m)
    if test.n_features != m:
        test = io.read_svmlight(args.test, m)
    rep = run_pipeline(train, test, args.method, args.k, args.gamma)
    row = [
        rep.method,
        rep.k,
        rep.sparsity_pct,
        rep.stage2_accuracy,
        rep.fit_seconds,
        " ".join(str(i) for i in rep.selected),
    ]
    io.write_csv(args.out, PIPELINE_COLUMNS, [row])
    print(f"accuracy {rep.stage2_accuracy:.4f} with {len(rep.selected)} features")


def _cmd_scaling(args):
    rep = run_scaling(args.base_m, args.factors, args.k_ratio, args.seed)
    io.write_csv(args.out, SCALING_COLUMNS, ([p.m, p.k, p.seconds] for p in rep.points))
    print(f"ratio_bound_ok {rep.ratio_bound_ok}")


def _cmd_planted(args):
    train, test, informative = planted_dataset(
        args.n_train, args.n_test, args.m, args.informative, args.seed
    )
    io.write_svmlight(args.train, train)
    io.write_svmlight(args.test, test)
    if args.truth:
        io.write_lines(args.truth, informative.tolist())


_COMMANDS = {
    "fit": _cmd_fit,
    "select": _cmd_select,
    "predict": _cmd_predict,
    "gap-experiment": _cmd_gap,
    "pipeline": _cmd_pipeline,
    "scaling": _cmd_scaling,
    "generate-planted": _cmd_planted,
}


def _origin(exc: BaseException) -> str:
    """Module of the innermost package frame that raised ``exc``."""
    package = Path(__file__).resolve().parent
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        path = Path(frame.filename).resolve()
        if path.parent == package:
            return f"sparse_nb.{path.stem}"
    return "sparse_nb"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        _COMMANDS[args.command](args)
    except (DataError, ValueError, OSError) as exc:
        print(f"{_origin(exc)}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
