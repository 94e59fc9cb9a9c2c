"""Command-line front end: solve, certify, design-d, experiment."""

import argparse
import sys
import time

from . import guarantees, harness, matio, pursuit
from .pursuit import BranchVector, PursuitConfig


def _cmd_solve(args):
    A = matio.load_matrix(args.matrix)
    Y = matio.load_matrix(args.observations)
    cfg = PursuitConfig(
        dictionary_refinement=not args.no_dict_refine,
        subspace_refinement=not args.no_subspace_refine,
    )
    d = BranchVector.from_string(args.branch_vector)
    start = time.perf_counter()
    result = pursuit.mbmp(Y, A, d, cfg)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    lines = [
        "support_indices;residual_norm;nodes_expanded;wall_time_ms",
        ";".join(
            [
                ",".join(str(g) for g in result.support),
                harness.format_value(result.residual_norm),
                str(result.nodes_expanded),
                harness.format_value(elapsed_ms),
            ]
        ),
    ]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_certify(args):
    A = matio.load_matrix(args.matrix)
    if args.condition == "coherence":
        report = guarantees.coherence_condition(A, args.K)
    elif args.condition == "babel":
        report = guarantees.cumulative_coherence_condition(A, args.K)
    elif args.condition == "neuman":
        report = guarantees.neuman_erc(A, args.K, nsr=args.oir, budget=args.budget)
    else:
        report = guarantees.mb_coherence(
            A, (), args.K, args.d, oir_value=args.oir, budget=args.budget
        )
    sys.stdout.write(
        ";".join(
            [
                report.kind,
                harness.format_value(report.lhs),
                harness.format_value(report.threshold),
                str(report.holds).lower(),
            ]
        )
        + "\n"
    )
    return 0


def _cmd_design_d(args):
    A = matio.load_matrix(args.matrix)
    strategy = {"level1": "level1_uniform", "per-node": "per_node"}[args.strategy]
    d = guarantees.design_branch_vector(
        A, args.K, strategy=strategy, method=args.method, budget=args.budget
    )
    sys.stdout.write(",".join(str(x) for x in d) + "\n")
    return 0


def _cmd_experiment(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = harness.parse_experiment_config(fh.read())
    text = harness.run_experiment(cfg)
    with open(cfg.out, "w", encoding="ascii") as fh:
        fh.write(text)
    sys.stdout.write(f"wrote {cfg.out}\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mbpursuit",
        description="Multi-branch matching pursuit sparse recovery toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run the tree solver on saved matrices")
    solve.add_argument("--matrix", required=True, help="dictionary in matrix text format")
    solve.add_argument("--observations", required=True, help="snapshot matrix")
    solve.add_argument("--branch-vector", required=True, help="per-level widths, e.g. 2,2,2,2,1")
    solve.add_argument("--no-dict-refine", action="store_true")
    solve.add_argument("--no-subspace-refine", action="store_true")
    solve.add_argument("--output", help="write the CSV row here instead of stdout")
    solve.set_defaults(func=_cmd_solve)

    certify = sub.add_parser("certify", help="evaluate a recovery condition")
    certify.add_argument("--matrix", required=True)
    certify.add_argument(
        "--condition",
        required=True,
        choices=["coherence", "babel", "neuman", "mb-coherence"],
    )
    certify.add_argument("--K", type=int, required=True)
    certify.add_argument("--d", type=int, default=1)
    certify.add_argument("--oir", type=float, default=0.0)
    certify.add_argument("--budget", type=int, default=guarantees.DEFAULT_SUPPORT_BUDGET)
    certify.set_defaults(func=_cmd_certify)

    design = sub.add_parser("design-d", help="find the smallest workable branch vector")
    design.add_argument("--matrix", required=True)
    design.add_argument("--K", type=int, required=True)
    design.add_argument("--strategy", choices=["level1", "per-node"], default="level1")
    design.add_argument("--method", choices=["bruteforce", "mip"], default="bruteforce")
    design.add_argument("--budget", type=int, default=guarantees.DEFAULT_SUPPORT_BUDGET)
    design.set_defaults(func=_cmd_design_d)

    experiment = sub.add_parser("experiment", help="run a seeded Monte Carlo sweep")
    experiment.add_argument("--config", required=True, help="flat key=value config file")
    experiment.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI boundary: report and signal failure
        sys.stderr.write(f"error: {exc}\n")
        return 1


def console():
    sys.exit(main())
