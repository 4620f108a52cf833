"""Command line: fit, predict, sample and scripted experiments.

Exit codes: 0 success, 2 validation error, 3 assertion failure, 4 I/O error.
"""

import argparse
import os
import sys
from importlib import metadata

import numpy as np

from . import io
from .classifiers import DEFAULT_BP, classify
from .experiments import PROCEDURES, SpecError, fit_rule, run_experiment
from .gaussian import sample
from .synth import InfeasibleSpecError, ProblemSpec, make_problem

EXIT_OK, EXIT_VALIDATION, EXIT_ASSERTION, EXIT_IO = 0, 2, 3, 4


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def _bp(text):
    v = float(text)
    if not 0.0 < v < 0.5:
        raise argparse.ArgumentTypeError(f"--bp must lie in (0, 1/2), got {text}")
    return v


def cmd_fit(args):
    data = io.read_dataset(args.data)
    cov = io.read_matrix(args.cov, data.dim) if args.cov else None
    center = None
    if args.center:
        center = np.asarray(io.read_json(args.center), dtype=float)
        if center.shape != (data.dim,):
            raise io.SchemaError(f"center must have length {data.dim}")
    rule = fit_rule(args.procedure, data, cov, center, args.bp)
    _emit_json(args.out, io.rule_to_dict(rule))
    return EXIT_OK


def cmd_predict(args):
    rule = io.read_rule(args.rule)
    feats, _ = io.read_table(args.data, require_label=False)
    if feats.shape[1] != rule.dim:
        raise ValueError(f"dimension mismatch: rule has p={rule.dim}, "
                         f"data has p={feats.shape[1]}")
    values = rule.value(feats) if len(feats) else np.empty(0)
    labels = classify(rule, feats) if len(feats) else np.empty(0, int)
    rows = [{"label": int(y), "value": float(v)} for y, v in zip(labels, values)]
    if not rows:
        rows_out = [["label", "value"]]
        _emit(args.out, lambda fh: io._write_rows(fh, rows_out))
    else:
        _emit(args.out, lambda fh: io.write_table(fh, rows))
    return EXIT_OK


def cmd_sample(args):
    spec = ProblemSpec.from_dict(io.read_json(args.problem))
    problem = make_problem(spec)
    ss1, ss0 = np.random.SeedSequence(args.seed).spawn(2)
    from .classifiers import LabeledDataset
    data = LabeledDataset.from_classes(sample(problem.class1, args.n1, ss1),
                                       sample(problem.class0, args.n0, ss0))
    _emit(args.out, lambda fh: io.write_dataset(fh, data))
    return EXIT_OK


def cmd_experiment(args):
    spec = io.read_json(args.spec)
    base = os.path.dirname(os.path.abspath(args.spec))
    resolve = lambda p: p if os.path.isabs(p) else os.path.join(base, p)
    result = run_experiment(spec, load_dataset=lambda p: io.read_dataset(resolve(p)),
                            load_rule=lambda p: io.read_rule(resolve(p)))
    out_dir = args.out or spec.get("output")
    if out_dir is None:
        out_dir = os.path.splitext(os.path.abspath(args.spec))[0] + "_results"
    elif not os.path.isabs(out_dir) and not args.out:
        out_dir = resolve(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    io.write_table(os.path.join(out_dir, "results.csv"), result.rows)
    io.write_json(os.path.join(out_dir, "results.json"),
                  {"kind": result.kind, "version": tool_version(), "spec": spec,
                   "rows": result.rows, "assertions": result.assertions,
                   "passed": result.passed})
    for name, rule in result.artifacts.items():
        io.write_rule(os.path.join(out_dir, f"{name}.json"), rule)
    n_ok = len(result.assertions) - len(result.failures)
    print(f"{result.kind}: {len(result.rows)} rows, {n_ok}/{len(result.assertions)} "
          f"assertions passed; results in {out_dir}")
    for f in result.failures:
        sigma = "" if f["sigma"] is None else f", sigma={f['sigma']!r}"
        print(f"ASSERTION FAILED {f['name']}: observed={f['observed']!r}, "
              f"bound={f['bound']!r}{sigma}, configuration={f['configuration']}",
              file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_ASSERTION


def _emit(path, writer):
    if path in (None, "-"):
        writer(sys.stdout)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer(fh)


def _emit_json(path, obj):
    _emit(path, lambda fh: fh.write(io.dumps(obj)))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdgauss", description="High-dimensional Gaussian classification toolkit.")
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a rule on a labelled CSV")
    p.add_argument("data")
    p.add_argument("--procedure", choices=PROCEDURES, default="fdr-lda")
    p.add_argument("--bp", type=_bp, default=DEFAULT_BP, help="FDR level in (0, 1/2)")
    p.add_argument("--cov", help="known covariance (.json or headerless CSV); "
                                 "identity when omitted")
    p.add_argument("--center", help="JSON list with a known center (mu1 + mu0)/2")
    p.add_argument("--out", help="rule file (stdout when omitted)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a rule file to a CSV")
    p.add_argument("rule")
    p.add_argument("data")
    p.add_argument("--out", help="labels CSV (stdout when omitted)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="draw a labelled CSV from a problem spec")
    p.add_argument("problem", help="ProblemSpec JSON")
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--n0", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("experiment", help="run an experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", help="output directory (overrides the spec)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (io.SchemaError, SpecError, InfeasibleSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
