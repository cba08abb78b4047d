"""Command-line front end.

Subcommands: classify, fisher, simulate, lm, rate, cp, appendix-check.
Exit codes: 0 success, 1 internal numeric failure, 2 input/validation
failure.  JSON output is stable-key-ordered; CSV uses a header row, '.'
decimals, and LF line endings.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import families, fisher, inference, reparam
from .errors import ParseError, SkewInfoError
from .families import ThetaOriginal
from .numerics import SeedSpec, rank3

ENV_SEED = "SKEWINFO_SEED"

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_INPUT = 2


class _InputError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(ENV_SEED)
    return int(raw) if raw else 0


def _emit_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _load_family(path):
    try:
        fam, constants = families.load_family_spec(path)
    except ParseError as exc:
        raise _InputError(
            f"expression error at offset {exc.position}: {exc.message}") from exc
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise _InputError(f"bad family spec: {exc}") from exc
    report = families.validate_skewing(fam.skewing)
    if not report.passed:
        raise _InputError(
            f"skewing function violates axioms: {dict(report.violations)}")
    kreport = families.validate_kernel(fam.kernel)
    if not kreport.passed:
        raise _InputError(
            f"kernel violates axioms: {dict(kreport.violations)}")
    return fam, constants


def _read_data_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "x":
                raise _InputError(f"expected header 'x', found {header!r}")
            values = [float(line) for line in fh if line.strip()]
    except OSError as exc:
        raise _InputError(str(exc)) from exc
    except ValueError as exc:
        raise _InputError(f"non-numeric value in {path}: {exc}") from exc
    return np.asarray(values)


def _write_data_csv(path, values):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x\n")
        for v in values:
            fh.write(f"{v:.17g}\n")


def _sym3_payload(mat, rank_tol):
    report = rank3(mat, rank_tol)
    return {
        "matrix": [[mat.a11, mat.a12, mat.a13],
                   [mat.a12, mat.a22, mat.a23],
                   [mat.a13, mat.a23, mat.a33]],
        "entries": {"g11": mat.a11, "g12": mat.a12, "g13": mat.a13,
                    "g22": mat.a22, "g23": mat.a23, "g33": mat.a33},
        "eigenvalues": list(report.eigenvalues),
        "rank": report.numeric_rank,
    }


def _cmd_classify(args):
    fam, _ = _load_family(args.family)
    config = fisher.ClassifyConfig(residual_tol=args.residual_tol,
                                   rank_tol=args.rank_tol)
    report = fisher.classify(fam, config)
    payload = report.to_dict()
    payload["family"] = fam.name
    payload["status"] = "ok"
    _emit_json(payload, args.json)
    return EXIT_OK


def _cmd_fisher(args):
    fam, constants = _load_family(args.family)
    k = args.param
    if k == 0:
        mat = fisher.info_original(fam, args.mu, args.sigma)
    else:
        report = fisher.classify(fam)
        if k > report.order:
            raise _InputError(
                f"parametrization {k} exceeds singularity order {report.order}")
        a = constants.get("a", report.a)
        if k == 1:
            mat = fisher.info_reparam1(fam, args.mu, args.sigma, a)
        elif k == 2:
            mat = fisher.info_reparam2(fam, args.mu, args.sigma, a)
        else:
            alpha1 = constants.get("alpha1", report.alpha1)
            mat = fisher.info_reparam3(a, alpha1, args.sigma)
    payload = _sym3_payload(mat, args.rank_tol)
    payload["parametrization"] = k
    payload["status"] = "ok"
    _emit_json(payload, args.json)
    return EXIT_OK


def _cmd_simulate(args):
    fam, _ = _load_family(args.family)
    theta = ThetaOriginal(args.mu, args.sigma, args.delta)
    draws = families.sample(fam, theta, args.n, SeedSpec(args.seed))
    _write_data_csv(args.out, draws)
    _emit_json({"status": "ok", "n": args.n, "out": args.out,
                "seed": args.seed})
    return EXIT_OK


def _cmd_lm(args):
    fam, _ = _load_family(args.family)
    data = _read_data_csv(args.data)
    test = inference.lm_test_simple if args.variant == "simple" \
        else inference.lm_test_double
    result = test(data, fam)
    payload = result.to_dict()
    payload["alpha"] = args.alpha
    payload["reject"] = bool(result.p_value < args.alpha)
    payload["status"] = "ok"
    _emit_json(payload, args.json)
    return EXIT_OK


def _cmd_rate(args):
    fam, _ = _load_family(args.family)
    grid = tuple(int(tok) for tok in args.grid.split(","))
    result = inference.rate_experiment(fam, grid, args.reps,
                                       SeedSpec(args.seed))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n,median_abs_delta,q75_abs_delta\n")
            for n, med, q in zip(result.n_grid, result.median_abs_delta,
                                 result.q75_abs_delta):
                fh.write(f"{n},{med:.17g},{q:.17g}\n")
    if args.raw_out:
        with open(args.raw_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n,replication,delta_hat\n")
            for n, estimates in zip(result.n_grid, result.raw_estimates):
                for r, d in enumerate(estimates):
                    fh.write(f"{n},{r},{d:.17g}\n")
    payload = result.to_dict()
    payload["status"] = "ok"
    _emit_json(payload, args.json)
    return EXIT_OK


def _cmd_cp(args):
    if args.forward:
        theta = ThetaOriginal(args.mu, args.sigma, args.delta)
        cp = reparam.cp_forward(theta)
        _emit_json({"status": "ok", "direction": "forward",
                    "theta1": cp.theta1, "theta2": cp.theta2,
                    "gamma1": cp.gamma1})
    else:
        cp = reparam.ThetaCP(args.theta1, args.theta2, args.gamma1)
        theta = reparam.cp_inverse(cp)
        _emit_json({"status": "ok", "direction": "inverse",
                    "mu": theta.mu, "sigma": theta.sigma,
                    "delta": theta.delta})
    return EXIT_OK


def _cmd_appendix_check(args):
    report = reparam.appendix_check(args.n_points, args.seed)
    worst = max(report["ours_max_rel_dev"], report["cp_max_rel_dev"])
    report["status"] = "ok" if worst < args.tol else "deviation above tolerance"
    report["tol"] = args.tol
    _emit_json(report, args.json)
    return EXIT_OK if worst < args.tol else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(
        prog="skewinfo",
        description="Skew-symmetric families: information singularities, "
                    "symmetry tests, and rate experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_family(p):
        p.add_argument("--family", required=True,
                       help="path to a family-spec JSON file")

    def add_json_out(p):
        p.add_argument("--json", default=None, help="also write JSON here")

    p = sub.add_parser("classify", help="singularity order and constants")
    add_family(p)
    add_json_out(p)
    p.add_argument("--residual-tol", type=float, default=1e-6)
    p.add_argument("--rank-tol", type=float, default=1e-7)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("fisher", help="information matrix at the symmetry point")
    add_family(p)
    add_json_out(p)
    p.add_argument("--param", type=int, choices=(0, 1, 2, 3), required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--rank-tol", type=float, default=1e-7)
    p.set_defaults(func=_cmd_fisher)

    p = sub.add_parser("simulate", help="draw a seeded sample to CSV")
    add_family(p)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("lm", help="Lagrange-multiplier symmetry test")
    add_family(p)
    add_json_out(p)
    p.add_argument("--data", required=True, help="CSV with header 'x'")
    p.add_argument("--variant", choices=("simple", "double"), required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_lm)

    p = sub.add_parser("rate", help="seeded consistency-rate experiment")
    add_family(p)
    add_json_out(p)
    p.add_argument("--grid", default="250,500,1000,2000,4000,8000,16000")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None, help="write per-n summaries CSV")
    p.add_argument("--raw-out", default=None,
                   help="write per-replication estimates CSV")
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("cp", help="centred-parametrization conversion")
    direction = p.add_mutually_exclusive_group(required=True)
    direction.add_argument("--forward", action="store_true")
    direction.add_argument("--inverse", action="store_true")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--theta1", type=float, default=0.0)
    p.add_argument("--theta2", type=float, default=1.0)
    p.add_argument("--gamma1", type=float, default=0.0)
    p.set_defaults(func=_cmd_cp)

    p = sub.add_parser("appendix-check",
                       help="closed-form scores vs numeric differentiation")
    add_json_out(p)
    p.add_argument("--n-points", type=int, default=40)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_appendix_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SkewInfoError as exc:
        kind = type(exc).__name__
        if kind in ("ParseError", "OrderMismatch", "NotSkewNormal",
                    "SkewnessOutOfRange", "DomainError"):
            print(f"error ({kind}): {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"numeric failure ({kind}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
