"""Command-line entry point: ``cabs {sketch,bench,stability,correlate,bound}``."""
import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .bench import DEFAULT_DATASETS, METHODS, DatasetSpec, bench_run, emit, k_for_rate, run_method
from .diagnostics import (
    BoundConfig,
    bound_report,
    correlation_experiment,
    estimate_theta,
    spearman,
    theorem2_gap,
)
from .matcore import MatrixSource, relative_error
from .pipeline import CabsConfig, cabs_run
from .samplers import WeightFn, uniform_indices
from .sketchers import pseudo_skeleton, sample_triple, stabilized_sketch


def _dataset(args):
    if args.input and args.synthetic:
        raise ValueError("give either --input or --synthetic, not both")
    if args.input:
        return DatasetSpec(Path(args.input).stem, args.input)
    text = args.synthetic or "lowrank:m=200,n=150,r=10,noise=0.01,seed=0"
    if text in DEFAULT_DATASETS:
        recipe = DEFAULT_DATASETS[text]
        kind = {"sparse_lowrank": "sparse", "rbf_psd": "psd"}.get(recipe["recipe"], "dense")
        return DatasetSpec(text, dict(recipe), kind)
    return DatasetSpec.from_recipe(text)


def _k(args, source, attr="k1"):
    k = getattr(args, attr, None)
    if k is not None:
        return k
    return k_for_rate(args.rate[0] if isinstance(args.rate, list) else args.rate, *source.shape)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _cabs_config(args, k1):
    return CabsConfig(
        k1=k1, k2=args.k2 if args.k2 is not None else k1, variant=args.variant,
        weight_fn=WeightFn.parse(args.weight_fn) if args.weight_fn else None,
        kmeans_iters=args.iters, seed=args.seed)


def cmd_sketch(args):
    spec = _dataset(args)
    source = spec.load()
    k = _k(args, source)
    if args.method == "cabs":
        view = source.fresh()
        out = cabs_run(view, _cabs_config(args, k))
        err = relative_error(source.fresh(), out.sketch)
        res = {"rel_error": err, "rows_touched": len(view.row_access_log),
               "cols_touched": len(view.col_access_log), "all_access": view.all_accessed}
    else:
        _, res = run_method(args.method, source, k, args.seed)
    print(f"method={args.method} k={k} rel_error={res['rel_error']:.6g} "
          f"rows_touched={res['rows_touched']} cols_touched={res['cols_touched']} "
          f"all_access={str(res['all_access']).lower()}")
    return 0


def cmd_bench(args):
    spec = _dataset(args)
    methods = args.method.split(",") if args.method else \
        ["pseudo_skeleton", "pilot", "cabs_wkmeans"]
    records = bench_run(spec, methods, args.rate, args.repeats, args.seed)
    text = emit(records, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_stability(args):
    spec = _dataset(args)
    source = spec.load()
    m, n = source.shape
    k = _k(args, source)
    rng = np.random.default_rng(args.seed)
    t = sample_triple(source, uniform_indices(m, k, rng), uniform_indices(n, k, rng))
    rows = []
    for r in range(1, k + 1):
        rows.append((r, relative_error(source.fresh(), stabilized_sketch(t, m, n, rank_r=r)),
                     relative_error(source.fresh(), pseudo_skeleton(t, rank_r=r))))
    _write(_table(["rank_r", "stabilized", "pseudo_skeleton"], rows, args.format), args.out)
    return 0


def cmd_correlate(args):
    spec = _dataset(args)
    source = spec.load()
    trials = args.repeats if args.repeats is not None else 200
    res = correlation_experiment(source, trials, seed=args.seed, k=args.k1,
                                 max_iters=args.iters)
    rho = spearman([a + b for a, b, _ in res], [e for _, _, e in res])
    if args.out:
        Path(args.out).write_text(_table(["e_r", "e_c", "rel_error"], res, args.format))
    print(f"trials={len(res)} spearman_rho={rho:.6g}")
    return 0


def cmd_bound(args):
    spec = _dataset(args)
    source = spec.load()
    k = _k(args, source)
    out = cabs_run(source.fresh(), _cabs_config(args, k))
    # evaluation only: the bound needs the exact embedding of the full matrix
    A = source.read_all()
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    P, Q = out.embedding
    lines = []
    reports = {}
    for name, stage in (("pilot", out.pilot), ("followup", out.followup)):
        ri, ci = stage.row_idx.indices, stage.col_idx.indices
        theta = estimate_theta(A, P, Q, ri, ci)
        theta = max(theta, np.finfo(float).tiny)
        rep = bound_report(P, Q, ri, ci, stage.triple.W, BoundConfig(theta))
        reports[name] = (rep, theta)
        W = stage.triple.W
        err = float(np.linalg.norm(A - stage.triple.C @ np.linalg.pinv(W) @ stage.triple.R)
                    / np.linalg.norm(A))
        lines.append(f"{name}: e_r={rep.e_r:.6g} e_c={rep.e_c:.6g} T={rep.T} "
                     f"theta={theta:.6g} bound={rep.bound_value:.6g} rel_error={err:.6g}")
    theta = max(reports["pilot"][1], reports["followup"][1])
    p = bound_report(P, Q, out.pilot.row_idx.indices, out.pilot.col_idx.indices,
                     out.pilot.triple.W, BoundConfig(theta))
    f = bound_report(P, Q, out.followup.row_idx.indices, out.followup.col_idx.indices,
                     out.pilot.triple.W, BoundConfig(theta))
    try:
        gap = theorem2_gap(p, f, k, theta)
        lines.append(f"boost: gap={gap:.6g} conservative_gap="
                     f"{theorem2_gap(p, f, k, theta, conservative=True):.6g}")
    except ValueError as exc:
        lines.append(f"boost: not applicable ({exc})")
    print("\n".join(lines))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="cabs", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, rate_list=False):
        p.add_argument("--input", help="matrix file (.mtx, .npy, .csv)")
        p.add_argument("--synthetic",
                       help="recipe such as 'lowrank:m=200,n=150,r=10,noise=0.01,seed=0' "
                            f"or one of {sorted(DEFAULT_DATASETS)}")
        if rate_list:
            p.add_argument("--rate", type=_floats, default=[0.05],
                           help="comma-separated sampling rates k/sqrt(mn)")
        else:
            p.add_argument("--rate", type=float, default=0.05, help="sampling rate k/sqrt(mn)")
        p.add_argument("--k1", type=int, help="pilot sample size (overrides --rate)")
        p.add_argument("--k2", type=int, help="follow-up sample size (default k1)")
        p.add_argument("--variant", default="wkmeans",
                       choices=["wkmeans", "leverage", "hard_threshold"])
        p.add_argument("--weight-fn", dest="weight_fn", help="e.g. constant, power:2, step:0.5")
        p.add_argument("--iters", type=int, default=5, help="k-means iterations")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--repeats", type=int)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("sketch", help="run one method and print its error")
    common(p)
    p.add_argument("--method", default="cabs", choices=["cabs"] + sorted(METHODS))
    p.set_defaults(fn=cmd_sketch)

    p = sub.add_parser("bench", help="methods x rates x repeats grid")
    common(p, rate_list=True)
    p.add_argument("--method", help=f"comma-separated subset of {sorted(METHODS)}")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("stability", help="error as a function of the truncation rank")
    common(p)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("correlate", help="encoding error vs. sketching error")
    common(p)
    p.set_defaults(fn=cmd_correlate)

    p = sub.add_parser("bound", help="error bound and boosting gap for one cascade run")
    common(p)
    p.set_defaults(fn=cmd_bound)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verb == "bench" and args.repeats is None:
        args.repeats = 1
    try:
        return args.fn(args)
    except (ValueError, IndexError, OSError) as exc:
        print(f"cabs {args.verb}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
