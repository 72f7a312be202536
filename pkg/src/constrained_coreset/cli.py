"""Command-line entry point: ``coreset-cli <subcommand> ...``.

Exit codes: 0 ok, 2 invalid configuration, 3 solver failure, 4 when
``eval --assert-eps`` finds an error above the requested bound.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .certify import certify_coreset
from .constraints import parse_constraint
from .datasets import (
    KINDS,
    gen_dataset,
    load_point_set,
    read_coreset_csv,
    write_coreset_csv,
    write_points_csv,
)
from .decompose import approx_from_centers, tri_criteria_approx
from .experiment import (
    ExperimentConfig,
    StageError,
    dumps_report,
    inspect_decomposition,
    run_experiment,
    run_oat_suite,
)
from .hus import hus_build, named_rng, size_accounting
from .lp import Infeasible, SolverLimit

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ASSERT = 0, 2, 3, 4


def _emit(report: dict, path: str | None) -> None:
    text = dumps_report(report)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text)


def _points(args):
    return load_point_set(getattr(args, "in_path", None), getattr(args, "matrix", None), getattr(args, "weights", None))


def _read_centers(path, P):
    """Centers JSON from ``approx``: point ids (always present) for the input metric."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return np.asarray(data["center_ids"], dtype=np.int64)


def _approx_summary(approx) -> dict:
    P = approx.points
    out = {
        "center_ids": approx.centers.tolist(),
        "outlier_ids": P.ids[approx.outlier_mask].tolist(),
        "cost": approx.cost,
        "m": approx.m,
        "z": approx.z,
        "beta": approx.beta,
        "gamma": approx.gamma,
        "boundary_overshoot": approx.boundary_overshoot,
    }
    if P.space.is_euclidean:
        out["center_coords"] = P.space.locate(approx.centers).tolist()
    return out


def cmd_gen(args) -> int:
    coords = gen_dataset(args.kind, args.n, args.d, args.k, args.m, args.seed, sigma=args.sigma)
    write_points_csv(args.out, coords)
    return EXIT_OK


def cmd_approx(args) -> int:
    P = _points(args)
    approx = tri_criteria_approx(P, args.k, args.m, args.z, named_rng(args.seed, "approx"), beta=args.beta)
    _emit(_approx_summary(approx), args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    P = _points(args)
    if args.centers:
        approx = approx_from_centers(P, _read_centers(args.centers, P), args.m, args.z)
    else:
        approx = tri_criteria_approx(P, args.k, args.m, args.z, named_rng(args.seed, "approx"), beta=args.beta)
    S = hus_build(P, args.k, args.z, args.m, args.gamma, approx, args.eps, args.seed)
    write_coreset_csv(args.out, S)
    if args.report:
        _emit({"size": size_accounting(S), "plan": S.plan.to_dict()}, args.report)
    return EXIT_OK


def cmd_eval(args) -> int:
    P = _points(args)
    S, _ = read_coreset_csv(args.coreset, P.space)
    B = parse_constraint(args.constraint, args.k)
    approx = tri_criteria_approx(P, args.k, args.m, args.z, named_rng(args.seed, "approx"), beta=args.beta)
    rep = certify_coreset(P, S, B, args.z, args.m, args.trials, named_rng(args.seed, "certify"), args.k, approx)
    report = {"schema_version": 1, "constraint": B.to_dict(), "seed": args.seed, "k": args.k, "z": args.z, "m": args.m}
    report.update(rep.to_dict())
    _emit(report, args.report)
    if rep.failures:
        print(f"{rep.failures} trial(s) failed in the solver", file=sys.stderr)
    if args.assert_eps is not None and rep.max_rel_err > args.assert_eps:
        print(f"max_rel_err {rep.max_rel_err:.6g} exceeds {args.assert_eps}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_SOLVER if rep.failures else EXIT_OK


def cmd_oat(args) -> int:
    B = parse_constraint(args.constraint, args.k)
    _emit(run_oat_suite(B, args.trials, args.U, args.seed), args.report)
    return EXIT_OK


def cmd_decomp(args) -> int:
    P = _points(args)
    centers = _read_centers(args.centers, P) if args.centers else None
    _emit(inspect_decomposition(P, centers, args.k, args.z, args.eps, args.m, args.seed), args.report or args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_dict(json.load(fh))
    if args.report:
        cfg.report_out = args.report
    report = run_experiment(cfg)
    if not cfg.report_out:
        print(dumps_report(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coreset-cli", description="Coresets for constrained clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--in", dest="in_path", help="points CSV (x0,...,weight)")
        p.add_argument("--matrix", help="explicit distance matrix CSV instead of points")
        p.add_argument("--weights", help="weights column for --matrix")

    def common(p, eps=True):
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--z", type=float, default=1.0)
        p.add_argument("--m", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--beta", type=int, default=8)
        if eps:
            p.add_argument("--eps", type=float, default=0.2)

    p = sub.add_parser("gen", help="write a synthetic dataset")
    p.add_argument("--kind", choices=KINDS, default="gaussian_mixture")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("approx", help="approximate centers and outliers")
    data_args(p)
    common(p, eps=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("build", help="build a coreset")
    data_args(p)
    common(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--centers", help="centers JSON written by approx")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="certify a coreset against the full data")
    data_args(p)
    common(p)
    p.add_argument("--coreset", required=True)
    p.add_argument("--constraint", help="constraint JSON (inline or file); default simplex")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--report")
    p.add_argument("--assert-eps", type=float, dest="assert_eps")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oat", help="transport ratio experiments")
    p.add_argument("--constraint")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--U", type=float, nargs="*", default=[1.0, 10.0, 100.0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_oat)

    p = sub.add_parser("decomp", help="inspect the ring/group decomposition")
    data_args(p)
    common(p)
    p.add_argument("--centers")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_decomp)

    p = sub.add_parser("run", help="run a full experiment from a config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error in {exc.stage}: {exc.cause}", file=sys.stderr)
        return EXIT_SOLVER if isinstance(exc.cause, (Infeasible, SolverLimit)) else EXIT_CONFIG
    except (Infeasible, SolverLimit) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
