"""Command-line entry point: ``ifshmm <subcommand> ...``.

Exit status: 0 success, 1 invalid input (flags, configs, data), 2 numerical
failure (impossible observation, non-convergence, a failed check).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import fmt, load_model, obs_to_csv, read_obs, table_to_csv, write_manifest
from .derivatives import fd_score, score
from .diagnostics import (
    C5ScanResult,
    MismatchReport,
    c5_sup_scan,
    degeneracy_report,
    operator_mismatch_report,
    score_system_check,
)
from .estimation import mle_fit, profile_loglik
from .exceptions import ModelError, NumericalError
from .filtering import run_filter
from .fixtures import m2_family, symmetric_family
from .model import ObservationSequence, simulate

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

DEFAULT_OPERATOR_SEQUENCES = (
    (0.0,), (0.0, 0.0), (0.0, 2.0), (1.0, -0.5, 2.0), (0.3, 1.2, -0.7, 0.4),
    (2.0, 2.0, -1.0, 0.5, 1.5, 0.0),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ModelError(f"{self.prog}: {message}")


class _Failed(Exception):
    """A check ran to completion but its verdict is FAIL."""


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid(text):
    """``a:b:n`` (inclusive linspace) or a comma list."""
    if ":" in text:
        try:
            a, b, n = text.split(":")
            return np.linspace(float(a), float(b), int(n)).tolist()
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:stop:num, got {text!r}")
    return _floats(text)


def _assignments(text):
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        name, sep, value = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected name=value, got {part!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: not a number: {value!r}")
    return out


def _emit(args, text, extra=None):
    """Write ``text`` to ``--out`` (plus manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        if extra:
            for _, body in extra:
                sys.stdout.write(body)
        return
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    written = [out]
    for path, body in extra or ():
        Path(path).write_text(body)
        written.append(Path(path))
    write_manifest(out, args.command, config=getattr(args, "model", None),
                   data=getattr(args, "obs", None), seed=getattr(args, "seed", None),
                   outputs=written, argv=args.argv, version=__version__)


def _verdict(ok, what):
    line = f"{'PASS' if ok else 'FAIL'}: {what}"
    print(line, file=sys.stderr)
    return line


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    model = load_model(args.model).build()
    seq = simulate(model, args.n, args.seed)
    _emit(args, obs_to_csv(seq))


def cmd_loglik(args):
    model = load_model(args.model).build()
    seq = read_obs(args.obs)
    seq.check_states(model.n_states)
    run = run_filter(model, seq)
    rows = zip(range(len(seq)), run.log_c, run.log_mass)
    _emit(args, table_to_csv(("t", "log_c", "log_mass"), rows,
                             comments=[f"log_lik={fmt(run.log_lik)}"]))


def cmd_score(args):
    model = load_model(args.model).build()
    seq = read_obs(args.obs)
    s = score(model, seq)
    if args.check_fd:
        fd = fd_score(model, seq)
        rows = [(n, a, b, a - b) for n, a, b in zip(model.theta.names, s, fd)]
        text = table_to_csv(("name", "score", "fd_score", "residual"), rows)
    else:
        text = table_to_csv(("name", "score"), zip(model.theta.names, s))
    _emit(args, text)


def cmd_fit(args):
    family = load_model(args.model)
    seq = read_obs(args.obs)
    theta0 = family.theta0()
    if args.start:
        unknown = set(args.start) - set(theta0.names)
        if unknown:
            raise ModelError(f"--start: unknown parameters {sorted(unknown)}")
        theta0 = theta0.replace(**args.start)
    if args.perturb:
        theta0 = theta0.with_values(theta0.values + args.perturb)
    result = mle_fit(family, seq, theta0, max_iter=args.max_iter)
    summary = result.summary()
    if result.info is not None:
        summary["information"] = result.info.matrix.tolist()
    text = json.dumps(summary, indent=2, default=float) + "\n"
    names = result.theta_hat.names
    columns = ("iteration",) + names + ("log_lik", "score_norm")
    trace = table_to_csv(columns, result.trace)
    extra = None
    if args.out is not None:
        extra = [(Path(args.out).with_suffix(".trace.csv"), trace)]
    _emit(args, text, extra=extra)
    if not result.converged:
        raise NumericalError(f"fit did not converge: {result.message}")


def cmd_profile(args):
    family = load_model(args.model)
    seq = read_obs(args.obs)
    rows = profile_loglik(family, seq, args.component, args.grid, jobs=args.jobs)
    _emit(args, table_to_csv((args.component, "log_lik"), rows))


def cmd_check_operators(args):
    sequences = [ObservationSequence(s) for s in DEFAULT_OPERATOR_SEQUENCES]
    if args.obs:
        sequences = [read_obs(args.obs)]
    if args.model:
        cases = [("model", load_model(args.model), False)]
    else:
        cases = [("m2", m2_family(), True), ("symmetric", symmetric_family(3), False)]
    rows, ok = [], True
    for label, family, mismatch in cases:
        report = operator_mismatch_report(family.build(), sequences, label)
        ok &= report.passed(expect_mismatch=mismatch)
        if label == "symmetric":
            ok &= all(r["fuh_rel_gap"] <= 1e-12 for r in report.rows)
        rows += [{"model": label, **r} for r in report.rows]
    line = _verdict(ok, "corrected chain equals brute force; naive chain "
                        "differs for n>=1 on asymmetric fixtures")
    _emit(args, table_to_csv(("model",) + MismatchReport.columns, rows, comments=[line]))
    if not ok:
        raise _Failed(line)


def cmd_check_degeneracy(args):
    family = load_model(args.model) if args.model else m2_family()
    report = degeneracy_report(family.build(), args.n, args.seed)
    ok = report.passed()
    line = _verdict(ok, f"slope {fmt(report.slope)} <= log phi(0); "
                        f"log_mass_n {fmt(report.final_log_mass)}; filters normalized")
    rows = [(k, v) for k, v in enumerate(report.log_mass)]
    comments = [line, f"seed={args.seed}", f"slope={fmt(report.slope)}",
                f"intercept={fmt(report.intercept)}"]
    _emit(args, table_to_csv(("n", "log_mass"), rows, comments=comments))
    if not ok:
        raise _Failed(line)


def cmd_check_score_system(args):
    model = (load_model(args.model) if args.model else m2_family()).build()
    seq = read_obs(args.obs) if args.obs else ObservationSequence([0.0])
    report = score_system_check(model, seq, next_xi=args.next_xi)
    ok = report.passed()
    line = _verdict(ok, f"status={report.status}; increment gap {fmt(report.increment_gap)}; "
                        f"filter gap {fmt(report.filter_gap)}; "
                        f"FD residual {fmt(report.fd_residual)}")
    rows = []
    for k, name in enumerate(report.names):
        a = report.increment_a[k] if report.increment_a.size else float("nan")
        b = report.increment_b[k] if report.increment_b.size else float("nan")
        rows.append((name, a, b, a - b))
    comments = [line, "history_a=" + " ".join(map(fmt, report.history_a)),
                "history_b=" + " ".join(map(fmt, report.history_b)),
                f"next_xi={fmt(report.next_xi)}"]
    if report.reason:
        comments.append(f"note={report.reason}")
    _emit(args, table_to_csv(("name", "increment_a", "increment_b", "difference"), rows,
                             comments=comments))
    if not ok:
        raise _Failed(line)


def cmd_check_c5(args):
    result = c5_sup_scan(args.xi0, args.xi1, args.bounds, args.step)
    ok = result.passed()
    line = _verdict(ok, "grid suprema strictly increasing in the bound")
    _emit(args, table_to_csv(C5ScanResult.columns, result.rows, comments=[line]))
    if not ok:
        raise _Failed(line)


# --------------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (a manifest.json is written beside it)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for scans")

    parser = _Parser(prog="ifshmm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate a sequence")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("loglik", parents=[common], help="log-likelihood and normalizers")
    p.add_argument("--model", required=True)
    p.add_argument("--obs", required=True)
    p.set_defaults(func=cmd_loglik)

    p = sub.add_parser("score", parents=[common], help="analytic score")
    p.add_argument("--model", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--check-fd", action="store_true", help="add finite-difference residuals")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit")
    p.add_argument("--model", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--start", type=_assignments, help="name=value,... starting values")
    p.add_argument("--perturb", type=float, default=0.0, help="add to every start component")
    p.add_argument("--max-iter", type=int, default=500)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("profile", parents=[common], help="log-likelihood along one parameter")
    p.add_argument("--model", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--component", required=True)
    p.add_argument("--grid", type=_grid, required=True, help="start:stop:num or v1,v2,...")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("check-operators", parents=[common], help="naive vs corrected composition")
    p.add_argument("--model")
    p.add_argument("--obs")
    p.set_defaults(func=cmd_check_operators)

    p = sub.add_parser("check-degeneracy", parents=[common], help="unnormalized mass drift")
    p.add_argument("--model")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_check_degeneracy)

    p = sub.add_parser("check-score-system", parents=[common],
                       help="score increments vs consecutive filters")
    p.add_argument("--model")
    p.add_argument("--obs")
    p.add_argument("--next-xi", type=float, default=1.5)
    p.set_defaults(func=cmd_check_score_system)

    p = sub.add_parser("check-c5", parents=[common], help="unbounded likelihood ratio scan")
    p.add_argument("--xi0", type=float, default=0.0)
    p.add_argument("--xi1", type=float, default=0.0)
    p.add_argument("--bounds", type=_floats, default=[1.0, 2.0, 3.0, 4.0])
    p.add_argument("--step", type=float, default=0.1)
    p.set_defaults(func=cmd_check_c5)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _Failed:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
