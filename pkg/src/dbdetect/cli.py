"""Command-line front door.

Subcommands: validate, sample, detect, risk, sweep, bounds, chernoff,
tv-oracle.  Exit codes: 0 success, 1 validation error, 2 capacity error.
All stochastic subcommands are deterministic in --seed, and their outputs do
not depend on the thread count (DBDETECT_THREADS overrides the default of
the available parallelism).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import config as cfg
from . import experiments
from .detectors import count_test, glrt, make_count_plan, np_oracle, sum_test
from .errors import CapacityError, ValidationError
from .exponents import chernoff_exponent, kl_divergences
from .models import DatabasePair, sample_alt, sample_null

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CAPACITY = 2


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _json_dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def cmd_validate(args) -> int:
    model = cfg.load_model(args.model)
    kind = experiments.model_kind(model)
    print(f"ok: {kind} model in {args.model} satisfies all invariants")
    return EXIT_OK


def cmd_sample(args) -> int:
    model = cfg.load_model(args.model)
    if args.hypothesis == "null":
        pair = sample_null(model, args.n, args.d, args.seed)
    else:
        pair = sample_alt(model, args.n, args.d, args.seed)
    cfg.write_matrix_csv(f"{args.out}_X.csv", pair.x)
    cfg.write_matrix_csv(f"{args.out}_Y.csv", pair.y)
    if pair.hidden_sigma is not None:
        with open(f"{args.out}_sigma.csv", "w", encoding="utf-8") as handle:
            handle.write(",".join(str(int(v)) for v in pair.hidden_sigma) + "\n")
    print(f"wrote {args.out}_X.csv and {args.out}_Y.csv (n={args.n}, d={args.d})")
    return EXIT_OK


def _verdict_payload(verdict) -> dict:
    aux = {}
    for key, value in verdict.aux.items():
        if isinstance(value, np.ndarray):
            aux[key] = [int(v) for v in value]
        else:
            aux[key] = value
    return {
        "detector": verdict.detector,
        "decision": verdict.decision,
        "statistic": verdict.statistic,
        "threshold": verdict.threshold,
        "aux": aux,
    }


def cmd_detect(args) -> int:
    model = cfg.load_model(args.model)
    x = cfg.matrix_for_model(model, cfg.read_matrix_csv(args.x))
    y = cfg.matrix_for_model(model, cfg.read_matrix_csv(args.y))
    pair = DatabasePair(x=x, y=y)
    verdicts = []
    for name in args.detector:
        if name == "glrt":
            verdicts.append(glrt(model, pair, tau=args.tau))
        elif name == "sum":
            verdicts.append(sum_test(model, pair, tau=args.tau_sum))
        elif name == "count":
            if args.tau_count is None:
                raise ValidationError("--tau-count is required for the count detector")
            plan = make_count_plan(
                model,
                pair.d,
                args.tau_count,
                method=args.pd_method,
                samples=args.pd_samples,
                seed=args.seed,
            )
            verdicts.append(count_test(model, pair, plan))
        elif name == "np-oracle":
            verdicts.append(np_oracle(model, pair))
        else:
            raise ValidationError(f"unknown detector {name!r}")
    if args.format == "csv":
        lines = ["detector,decision,statistic,threshold"]
        for v in verdicts:
            lines.append(
                f"{v.detector},{v.decision},"
                f"{format(v.statistic, '.17g')},{format(v.threshold, '.17g')}"
            )
        _write_output("\n".join(lines) + "\n", args.out)
    else:
        _write_output(_json_dumps([_verdict_payload(v) for v in verdicts]), args.out)
    return EXIT_OK


def _plan_from_args(args, need_sweep: bool):
    overrides = {
        "n": args.n,
        "d": args.d,
        "seed": args.seed,
        "trials": args.trials,
        "detectors": args.detector or None,
        "tau_glrt": args.tau,
        "tau_sum": args.tau_sum,
        "tau_count": args.tau_count,
        "pd_method": args.pd_method,
        "pd_samples": args.pd_samples,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    plan = cfg.load_plan(args.plan, overrides)
    if need_sweep and plan.sweep is None:
        raise ValidationError("the plan has no [sweep] section")
    return plan


def _emit_estimates(estimates, fmt: str, out) -> None:
    if fmt == "json":
        _write_output(
            _json_dumps([experiments.estimate_to_dict(e) for e in estimates]), out
        )
    else:
        _write_output(experiments.estimates_to_csv(estimates), out)


def cmd_risk(args) -> int:
    plan = _plan_from_args(args, need_sweep=False)
    estimates = experiments.estimate_risk(plan, threads=args.threads)
    _emit_estimates(estimates, args.format, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    plan = _plan_from_args(args, need_sweep=True)
    errors: list = []
    estimates = experiments.sweep(plan, threads=args.threads, error_sink=errors)
    _emit_estimates(estimates, args.format, args.out)
    for record in errors:
        print(
            f"warning: sweep point param={record.param} n={record.n} "
            f"d={record.d} failed: {record.message}",
            file=sys.stderr,
        )
    if errors:
        print(f"warning: {len(errors)} sweep point(s) failed", file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args) -> int:
    model = cfg.load_model(args.model)
    report = experiments.bound_report(
        model,
        args.n,
        args.d,
        tau_glrt=args.tau,
        tau_count=args.tau_count if args.tau_count is not None else "half-kl",
    )
    _write_output(_json_dumps(report), args.out)
    return EXIT_OK


def cmd_chernoff(args) -> int:
    model = cfg.load_model(args.model)
    div = kl_divergences(model)
    if args.thetas:
        thetas = [float(tok) for tok in args.thetas.split(",")]
    else:
        width = div.kl_pq + div.kl_qp
        pad = 1e-6 * width
        thetas = list(
            np.linspace(-div.kl_qp + pad, div.kl_pq - pad, args.theta_points)
        )
    rows = []
    for theta in thetas:
        rq = chernoff_exponent(model, theta, side="Q")
        rp = chernoff_exponent(model, theta, side="P")
        rows.append((theta, rq.value, rp.value, rq.argmax_lambda))
    if args.format == "json":
        payload = [
            dict(zip(("theta", "e_q", "e_p", "argmax_lambda"), row)) for row in rows
        ]
        _write_output(_json_dumps(payload), args.out)
    else:
        lines = ["theta,e_q,e_p,argmax_lambda"]
        for row in rows:
            lines.append(",".join(format(v, ".17g") for v in row))
        _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_tv_oracle(args) -> int:
    model = cfg.load_model(args.model)
    tv, bayes_risk = experiments.exact_tv_small(model, args.n, args.d)
    _write_output(
        _json_dumps({"n": args.n, "d": args.d, "tv": tv, "bayes_risk": bayes_risk}),
        args.out,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbdetect",
        description="Dependence testing between row-shuffled databases: "
        "detectors, spectral bounds, and Monte-Carlo risk estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=False, plan=False, nd=False, seed=False):
        if model:
            p.add_argument("--model", required=True, help="model file")
        if plan:
            p.add_argument("--plan", required=True, help="plan file")
            p.add_argument("--n", type=int, help="override the plan's n")
            p.add_argument("--d", type=int, help="override the plan's d")
            p.add_argument("--seed", type=int, help="override the plan's seed")
            p.add_argument("--trials", type=int, help="override the plan's trials")
            p.add_argument(
                "--detector",
                action="append",
                choices=["glrt", "sum", "count", "np-oracle"],
                help="detector to run (repeatable; overrides the plan)",
            )
            p.add_argument("--tau", type=float, help="scan-test threshold")
            p.add_argument("--tau-sum", type=float, help="sum-test threshold override")
            p.add_argument(
                "--tau-count", help="count-test per-pair level (number or 'half-kl')"
            )
            p.add_argument(
                "--pd-method", choices=["auto", "exact-convolution", "monte-carlo"]
            )
            p.add_argument("--pd-samples", type=int)
            p.add_argument(
                "--threads",
                type=int,
                help="worker threads (default: DBDETECT_THREADS or all cores)",
            )
            p.add_argument("--format", choices=["csv", "json"], default="csv")
        if nd:
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--d", type=int, required=True)
        if seed:
            p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", help="output path (default: stdout)")
        return p

    p = sub.add_parser("validate", help="check a model file against all invariants")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="sample a database pair to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--hypothesis",
        choices=["null", "alt"],
        default="null",
        help="independent (null) or row-permuted dependent (alt)",
    )
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("detect", help="run detectors on CSV matrices")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True, help="CSV matrix of X observations")
    p.add_argument("--y", required=True, help="CSV matrix of Y observations")
    p.add_argument(
        "--detector",
        action="append",
        required=True,
        choices=["glrt", "sum", "count", "np-oracle"],
    )
    p.add_argument("--tau", type=float, default=0.0, help="scan-test threshold")
    p.add_argument("--tau-sum", type=float, help="sum-test threshold override")
    p.add_argument("--tau-count", type=float, help="count-test per-pair level")
    p.add_argument(
        "--pd-method",
        choices=["auto", "exact-convolution", "monte-carlo"],
        default="auto",
    )
    p.add_argument("--pd-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, help="seed for monte-carlo pd estimation")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("risk", help="Monte-Carlo risk estimation from a plan")
    add_common(p, plan=True)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("sweep", help="risk estimation over the plan's sweep grid")
    add_common(p, plan=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="JSON report of the computable bounds")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--tau-count")
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("chernoff", help="CSV of E_Q, E_P over a theta grid")
    p.add_argument("--model", required=True)
    p.add_argument("--thetas", help="comma-separated theta values")
    p.add_argument(
        "--theta-points",
        type=int,
        default=21,
        help="grid size inside the divergence interval when --thetas is absent",
    )
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_chernoff)

    p = sub.add_parser("tv-oracle", help="exact total variation on a tiny instance")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tv_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
