"""Command-line entry points ``subspace`` and ``zsda``.

Exit codes: 0 success, 2 invalid input or manifest, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import io
from .adaptation import learn_subspace
from .data import DomainManifest
from .errors import InputError, NumericalError
from .manifold_opt import OptimizerConfig
from .pipeline import DA_METHODS, evaluate_all_targets, evaluate_target, summarize, zsda_predict
from .regression import DEFAULT_SIGMA
from .synth import SynthConfig, generate_synthetic, parse_grid

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("zsda")


def _parse_descriptor(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"descriptor must be comma-separated numbers, got {text!r}")


def _add_optimizer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--step", type=float, default=1.0, help="initial step size of each line search")


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(initial_step=args.step, max_iters=args.max_iters, grad_tol=args.grad_tol)


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    io.ensure_dir(parent)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_learn(args) -> int:
    x = io.load_matrix(args.features)
    p = learn_subspace(x, args.dim)
    io.save_subspace(args.out, p)
    log.info("wrote %d x %d basis to %s", p.ambient_dim, p.dim, args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    manifest = DomainManifest.load(args.manifest)
    p, trace = zsda_predict(manifest, args.target, args.dim, args.sigma, _optimizer_config(args))
    io.save_subspace(args.out, p)
    if args.trace:
        _write_text(args.trace, trace.to_json() + "\n")
    log.info("converged by %s after %d iterations", trace.converged_by, trace.iterations)
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest = DomainManifest.load(args.manifest)
    report = evaluate_target(manifest, args.target_id, args.dim, args.sigma, args.da, _optimizer_config(args))
    _write_text(args.report, report.to_json())
    line = f"{report.target_id}: no-DA {report.avg_no_da:.4f}"
    if report.avg_zsda_da is not None:
        line += f", ZSDA->{args.da} {report.avg_zsda_da:.4f}"
    print(line)
    return EXIT_OK


def cmd_eval_all(args) -> int:
    manifest = DomainManifest.load(args.manifest)
    reports = evaluate_all_targets(
        manifest, args.dim, args.sigma, args.da, _optimizer_config(args), workers=args.workers
    )
    io.ensure_dir(args.report_dir)
    for r in reports:
        _write_text(os.path.join(args.report_dir, f"{r.target_id}.json"), r.to_json())
    summary = summarize(reports)
    _write_text(os.path.join(args.report_dir, "summary.json"), json.dumps(summary, indent=2) + "\n")
    for r in reports:
        z = "" if r.avg_zsda_da is None else f"  zsda {r.avg_zsda_da:.4f}"
        print(f"{r.target_id}: no-DA {r.avg_no_da:.4f}{z}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        grid_levels=parse_grid(args.grid),
        num_classes=args.classes,
        ambient_dim=args.ambient_dim,
        samples_per_class=args.samples,
        noise_std=args.noise,
        seed=args.seed,
    )
    manifest = generate_synthetic(cfg, args.out)
    print(f"wrote {len(manifest.domains)} domains to {os.path.join(args.out, 'manifest.json')}")
    return EXIT_OK


def _run(parser: argparse.ArgumentParser, argv) -> int:
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def build_subspace_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subspace", description="Learn or predict domain subspaces.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="PCA subspace of a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("predict", help="predict the subspace of an unseen descriptor")
    p.add_argument("--manifest", required=True)
    p.add_argument("--target", type=_parse_descriptor, required=True, help='descriptor, e.g. "10,2"')
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write the optimizer trace as JSON")
    _add_optimizer_args(p)
    p.set_defaults(func=cmd_predict)
    return parser


def build_zsda_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zsda", description="Zero-shot domain adaptation harness.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--manifest", required=True)
        p.add_argument("--dim", type=int, default=None, help="subspace dimension (default: D // 8)")
        p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
        p.add_argument("--da", choices=DA_METHODS, default="gfk")
        _add_optimizer_args(p)

    p = sub.add_parser("eval", help="hold out one domain and score every source on it")
    common(p)
    p.add_argument("--target-id", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-all", help="hold out each domain in turn")
    common(p)
    p.add_argument("--report-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval_all)

    p = sub.add_parser("synth", help="generate a synthetic grid of domains")
    p.add_argument("--grid", default="5,10,15x1.5,2,3", help='two factor lists joined by "x"')
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--ambient-dim", type=int, default=64)
    p.add_argument("--samples", type=int, default=40, help="samples per class")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def subspace_main(argv=None) -> int:
    return _run(build_subspace_parser(), argv)


def zsda_main(argv=None) -> int:
    return _run(build_zsda_parser(), argv)


if __name__ == "__main__":
    sys.exit(zsda_main())
