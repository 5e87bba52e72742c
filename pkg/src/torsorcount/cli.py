"""Command-line front end.

Exit codes: 0 success, 1 validation failure (invalid fan, inconsistent
query or plan), 2 usage error (bad flags, unreadable files).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction
from typing import Sequence

from .arith import is_prime
from .experiments import ExperimentPlan, FitError, PlanError, run_plan, write_outputs
from .fan_core import FanData, FanError, FanSourceError, load_fan, validate_fan
from .peyre_constants import (
    ConstantError,
    alpha_constant,
    alpha_zero,
    kappa_truncated,
    local_density_kappa,
)
from .polyexpr import PolyError, parse_poly
from .sieve_lab import PolyPair, SieveError, geometric_sieve_profile, prime_section_count, subvariety_count
from .torsor_points import (
    Box,
    Congruence,
    CountQuery,
    EnumerationTooLarge,
    QueryError,
    count,
    enumerate_points,
    estimate_size,
)

THREADS_ENV = "TORSORCOUNT_THREADS"
PARALLEL_THRESHOLD = 2_000_000  # estimated points below which one process is faster


class UsageError(Exception):
    pass


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _int(text: str, what: str, minimum: int | None = None) -> int:
    try:
        v = int(text)
    except ValueError:
        raise UsageError(f"{what} must be an integer, got {text!r}") from None
    if minimum is not None and v < minimum:
        raise UsageError(f"{what} must be at least {minimum}")
    return v


def parse_congruence(text: str) -> Congruence:
    """'l:x0,x1,...' e.g. '4:1,0'."""
    try:
        l, residues = text.split(":", 1)
        return Congruence(int(l), tuple(int(x) for x in residues.split(",")))
    except ValueError:
        raise UsageError(f"congruence must look like 'l:x0,x1,...', got {text!r}") from None


def parse_box(text: str) -> Box:
    """'sigma:lam1,lam2,...' with rational lam, e.g. '0:1/2,1'."""
    try:
        cone, lams = text.split(":", 1)
        return Box(int(cone), tuple(Fraction(x) for x in lams.split(",")))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"box must look like 'sigma:lam1,...', got {text!r}") from None


def _load(ref: str) -> FanData:
    return FanData(load_fan(ref))


def _emit(obj, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(obj, sort_keys=True))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(list(obj))
        w.writerow([json.dumps(v) if isinstance(v, (dict, list)) else v for v in obj.values()])


# -- subcommands ------------------------------------------------------------------------


def cmd_fan_check(args) -> int:
    fan = load_fan(args.file)
    report = validate_fan(fan)
    if report.ok:
        fd = FanData(fan)
        print(f"ok: d={fd.d} n={fd.n} r={fd.r} cones={len(fd.cones)} f-vector={list(fd.f_vector)}")
        return 0
    print(report, file=sys.stderr)
    return 1


def cmd_const(args) -> int:
    fd = _load(args.fan)
    if args.which == "alpha":
        print(alpha_constant(fd))
    elif args.which == "alpha0":
        print(alpha_zero(fd))
    elif args.p is not None:
        if not is_prime(args.p):
            raise UsageError(f"--p must be prime, got {args.p}")
        print(local_density_kappa(fd, args.p))
    else:
        est = kappa_truncated(fd, args.pmax)
        if args.output == "json":
            print(json.dumps(est.to_dict(), sort_keys=True))
        else:
            print(f"{est.value!r} in [{est.lo!r}, {est.hi!r}] (primes <= {args.pmax})")
    return 0


def _query(args, fd: FanData) -> CountQuery:
    q = CountQuery(
        args.B,
        box=parse_box(args.box) if args.box else None,
        congruence=parse_congruence(args.congruence) if args.congruence else None,
        divisibility=tuple(_int(x, "divisibility entry", 1) for x in args.divisibility.split(","))
        if args.divisibility
        else None,
        coprime_only=args.coprime,
    )
    q.check(fd)
    return q


def cmd_count(args) -> int:
    fd = _load(args.fan)
    q = _query(args, fd)
    if args.points:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow([f"X{i}" for i in range(fd.n)])
        for pt in enumerate_points(fd, q):
            w.writerow(pt.coords)
        return 0
    threads = args.threads or default_threads()
    workers = threads if estimate_size(fd, q.B) >= PARALLEL_THRESHOLD else 1
    t0 = time.perf_counter()
    c = count(fd, q, workers=workers)
    ms = round((time.perf_counter() - t0) * 1000, 3)
    if args.output == "text":
        print(c)
    else:
        _emit({"query": q.to_dict(), "count": c, "wall_time_ms": ms}, args.output)
    return 0


def cmd_sieve(args) -> int:
    fd = _load(args.fan)
    if args.which == "geom":
        pair = PolyPair.make(parse_poly(args.f, fd.n), parse_poly(args.g, fd.n))
        prof = geometric_sieve_profile(fd, pair, args.N, args.B, args.coprime)
        if args.output == "text":
            print(prof.count)
            if prof.undecided:
                print(f"warning: {prof.undecided} points undecided (unfactored cofactor)", file=sys.stderr)
        else:
            _emit(
                {
                    "B": args.B,
                    "N": args.N,
                    "count": prof.count,
                    "small_only": prof.small_only,
                    "coprime": prof.coprime,
                    "undecided": prof.undecided,
                },
                args.output,
            )
    elif args.which == "subvariety":
        print(subvariety_count(fd, parse_poly(args.phi, fd.n), args.B))
    else:
        print(prime_section_count(fd, parse_poly(args.s, fd.n), args.B))
    return 0


def cmd_experiment(args) -> int:
    try:
        plan = ExperimentPlan.load(args.plan)
    except OSError as exc:
        raise UsageError(f"cannot read plan {args.plan}: {exc.strerror}") from None
    report = run_plan(plan, workers=args.threads or default_threads())
    prefix = args.out or plan.output
    if prefix:
        csv_path, json_path = write_outputs(report, prefix)
        print(f"wrote {csv_path} and {json_path}")
    else:
        sys.stdout.write(report.csv_text())
    return 0


# -- parser ----------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torsorcount", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fan = sub.add_parser("fan", help="fan utilities")
    fsub = fan.add_subparsers(dest="fan_command", required=True, parser_class=_Parser)
    chk = fsub.add_parser("check", help="validate a fan file")
    chk.add_argument("file", help="fan JSON file or builtin name")
    chk.set_defaults(func=cmd_fan_check)

    const = sub.add_parser("const", help="alpha, alpha0 or kappa of a fan")
    const.add_argument("which", choices=("alpha", "kappa", "alpha0"))
    const.add_argument("--fan", required=True)
    const.add_argument("--p", type=int, help="single prime for kappa_p")
    const.add_argument("--pmax", type=int, default=10**4, help="truncation for the kappa product")
    const.add_argument("--output", choices=("text", "json"), default="text")
    const.set_defaults(func=cmd_const)

    cnt = sub.add_parser("count", help="count Cox points of bounded height")
    cnt.add_argument("--fan", required=True)
    cnt.add_argument("--B", type=int, required=True)
    cnt.add_argument("--congruence", help="l:x0,x1,...")
    cnt.add_argument("--box", help="sigma:lam1,lam2,...")
    cnt.add_argument("--divisibility", help="d0,d1,... (one per ray)")
    cnt.add_argument("--coprime", action="store_true")
    cnt.add_argument("--points", action="store_true", help="print the points as CSV instead of counting")
    cnt.add_argument("--threads", type=int)
    cnt.add_argument("--output", choices=("text", "json", "csv"), default="text")
    cnt.set_defaults(func=cmd_count)

    sv = sub.add_parser("sieve", help="sieve counts over torsor points")
    ssub = sv.add_subparsers(dest="which", required=True, parser_class=_Parser)
    geom = ssub.add_parser("geom", help="points where gcd(f, g) has a prime factor >= N")
    geom.add_argument("--f", required=True)
    geom.add_argument("--g", required=True)
    geom.add_argument("--N", type=int, required=True)
    sv_sub = ssub.add_parser("subvariety", help="points with phi = 0")
    sv_sub.add_argument("--phi", required=True)
    prime = ssub.add_parser("prime", help="coprime points where |s| is prime")
    prime.add_argument("--s", required=True)
    for q in (geom, sv_sub, prime):
        q.add_argument("--fan", required=True)
        q.add_argument("--B", type=int, required=True)
        q.set_defaults(func=cmd_sieve)
    geom.add_argument("--coprime", action="store_true")
    geom.add_argument("--output", choices=("text", "json", "csv"), default="text")

    exp = sub.add_parser("experiment", help="run an experiment plan")
    exp.add_argument("plan")
    exp.add_argument("--out", help="output prefix (overrides the plan's)")
    exp.add_argument("--threads", type=int)
    exp.set_defaults(func=cmd_experiment)
    return p


def _validate(args) -> None:
    if getattr(args, "B", None) is not None and args.B < 0:
        raise UsageError("--B must be nonnegative")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise UsageError("--threads must be positive")
    if getattr(args, "N", None) is not None and args.N < 2:
        raise UsageError("--N must be at least 2")
    if getattr(args, "pmax", None) is not None and args.pmax < 2:
        raise UsageError("--pmax must be at least 2")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except (UsageError, FanSourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FanError, QueryError, PlanError, FitError, ConstantError, PolyError, SieveError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except EnumerationTooLarge as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
