"""Command-line interface: ``gcrf generate|train|predict|eval|bench|features``.

Exit codes: 0 success, 1 usage or I/O error, 2 solver did not converge.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .admm import fit_admm
from .core import Dataset, compute_stats, objective, predict
from .datagen import NOISE_CONVENTIONS, sample_dataset, sample_ground_truth
from .evalkit import compare_solvers, roc_auc, standard_suite
from .gd import SolverConfig, fit_gd
from .landmarks import build_feature_matrix, load_landmark_csv

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _existing(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {path}")
    return p


def cmd_generate(args):
    gt = sample_ground_truth(
        args.n, args.p, args.diag_dominance, args.theta_density, seed=args.seed
    )
    data = sample_dataset(gt, args.m, seed=args.seed + 1, noise=args.noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_csv(out / "X.csv", data.x)
    io.write_matrix_csv(out / "Y.csv", data.y)
    io.save_model(out / "truth.model.json", gt.params)
    print(f"wrote {out}/X.csv ({args.m}x{args.n}), {out}/Y.csv ({args.m}x{args.p}), "
          f"{out}/truth.model.json; seed={args.seed}")
    return EXIT_OK


def _load_dataset(args) -> Dataset:
    x = io.read_matrix_csv(_existing(args.x))
    y = io.read_matrix_csv(_existing(args.y))
    if x.shape[0] != y.shape[0]:
        raise UsageError(f"{args.x} has {x.shape[0]} rows but {args.y} has {y.shape[0]}")
    return Dataset(x, y)


def _config(args) -> SolverConfig:
    return SolverConfig(
        max_iter=args.max_iter,
        grad_tol=args.grad_tol,
        armijo_c=args.armijo_c,
        backtrack_factor=args.backtrack_factor,
        initial_step=args.initial_step,
        l1_weight=args.l1,
        mu0=args.mu0,
        beta=args.beta,
        mu_max=args.mu_max,
        primal_tol=args.primal_tol,
        dual_tol=args.dual_tol,
        seed=args.seed,
    )


def cmd_train(args):
    data = _load_dataset(args)
    if args.center:
        data = data.centered()
    stats = compute_stats(data)
    config = _config(args)
    fit = fit_admm if args.solver == "admm" else fit_gd
    result = fit(stats, config)
    io.save_model(args.model, result.params)
    io.write_trace_csv(args.trace, result.trace)
    last = result.trace[-1]
    status = "converged" if result.converged else "did not converge"
    print(f"{args.solver}: {status} after {result.iterations} iterations, "
          f"objective {last.objective:.10g}; model -> {args.model}, trace -> {args.trace}")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_predict(args):
    params = io.load_model(_existing(args.model))
    x = io.read_matrix_csv(_existing(args.x))
    if x.shape[1] != params.n:
        raise UsageError(f"model expects {params.n} input columns, {args.x} has {x.shape[1]}")
    io.write_matrix_csv(args.out, predict(params, x))
    print(f"wrote {x.shape[0]}x{params.p} predictions to {args.out}")
    return EXIT_OK


def cmd_eval(args):
    params = io.load_model(_existing(args.model))
    data = _load_dataset(args)
    if data.x.shape[1] != params.n or data.y.shape[1] != params.p:
        raise UsageError(
            f"model is n={params.n}, p={params.p} but data is n={data.x.shape[1]}, p={data.y.shape[1]}"
        )
    if args.center:
        data = data.centered()
    scores = predict(params, data.x)
    if args.labels:
        labels = io.read_matrix_csv(_existing(args.labels))
        if labels.shape != scores.shape:
            raise UsageError(f"labels must be {scores.shape[0]}x{scores.shape[1]}")
    else:
        labels = data.y > args.threshold
    labels = labels.astype(int)
    rows = []
    for j in range(params.p):
        try:
            auc = roc_auc(scores[:, j], labels[:, j])
        except ValueError:
            auc = None
        mse = float(np.mean((scores[:, j] - data.y[:, j]) ** 2))
        rows.append((j, mse, auc))
    nll = objective(compute_stats(data), params)
    print(f"objective {nll:.10g}")
    print("output,mse,auc")
    for j, mse, auc in rows:
        print(f"{j},{io.fmt(mse)},{io.fmt(auc)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("output,mse,auc\n")
            for j, mse, auc in rows:
                fh.write(f"{j},{io.fmt(mse)},{io.fmt(auc)}\n")
    return EXIT_OK


def _bench_cell(cell, config):
    cmp = compare_solvers(cell.stats(), config)
    return {
        "seed": cell.seed, "n": cell.n, "p": cell.p, "m": cell.m,
        "gd_iters": cmp.gd_iters, "admm_iters": cmp.admm_iters,
        "f_star": cmp.f_star, "agree": cmp.agree,
    }


def cmd_bench(args):
    cells = standard_suite(args.seeds, args.n, args.p, args.m)
    config = _config(args)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_bench_cell, cells, [config] * len(cells)))
    else:
        rows = [_bench_cell(c, config) for c in cells]
    io.write_report_csv(args.out or sys.stdout, rows)
    sys.stdout.flush()
    wins = sum(
        1 for r in rows
        if r["admm_iters"] is not None and (r["gd_iters"] is None or r["admm_iters"] <= r["gd_iters"])
    )
    agree = sum(r["agree"] for r in rows)
    print(f"ADMM reached f*+1e-6 in no more iterations than GD on {wins}/{len(rows)} instances; "
          f"solvers agree on {agree}/{len(rows)}", file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_features(args):
    frames = load_landmark_csv(_existing(args.landmarks))
    if not frames:
        raise UsageError(f"{args.landmarks} contains no frames")
    reference = None
    if args.reference:
        ref_frames = load_landmark_csv(_existing(args.reference))
        if not ref_frames:
            raise UsageError(f"{args.reference} contains no frames")
        reference = ref_frames[0]
    features = build_feature_matrix(frames, reference)
    io.write_matrix_csv(args.out, features)
    print(f"wrote {features.shape[0]}x{features.shape[1]} features to {args.out}")
    return EXIT_OK


def _add_solver_flags(p):
    d = SolverConfig()
    p.add_argument("--max-iter", type=_nonneg_int, default=None,
                   help="iteration cap (default 10000 for gd, 5000 for admm)")
    p.add_argument("--grad-tol", type=float, default=d.grad_tol)
    p.add_argument("--armijo-c", type=float, default=d.armijo_c)
    p.add_argument("--backtrack-factor", type=float, default=d.backtrack_factor)
    p.add_argument("--initial-step", type=float, default=d.initial_step)
    p.add_argument("--l1", type=float, default=d.l1_weight, help="L1 weight (0 disables)")
    p.add_argument("--mu0", type=float, default=d.mu0)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--mu-max", type=float, default=d.mu_max)
    p.add_argument("--primal-tol", type=float, default=d.primal_tol)
    p.add_argument("--dual-tol", type=float, default=d.dual_tol)
    p.add_argument("--seed", type=int, default=d.seed)


def build_parser():
    parser = _Parser(prog="gcrf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a synthetic ground truth and dataset")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diag-dominance", type=float, default=None,
                   help="diagonal shift of the true precision (default: p)")
    p.add_argument("--theta-density", type=float, default=1.0)
    p.add_argument("--noise", choices=NOISE_CONVENTIONS, default="objective")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit a model by gradient descent or ADMM")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--solver", choices=("gd", "admm"), default="admm")
    p.add_argument("--model", default="model.json")
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--center", action="store_true", help="subtract column means first")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="conditional-mean predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="objective, per-output MSE and AUC")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--labels", help="0/1 CSV, same shape as Y (default: Y > threshold)")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--center", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="compare solvers on the standardized suite")
    p.add_argument("--seeds", type=_positive_int, default=5)
    p.add_argument("--n", type=_positive_int, default=5)
    p.add_argument("--p", type=_positive_int, default=3)
    p.add_argument("--m", type=_positive_int, default=1000)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("features", help="align landmark frames and flatten to a feature CSV")
    p.add_argument("--landmarks", required=True)
    p.add_argument("--reference", help="landmark CSV whose first frame is the reference shape")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError, FloatingPointError) as exc:
        print(f"gcrf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
