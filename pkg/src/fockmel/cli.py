"""Command-line front end: ``fockmel <command> [options]``.

Commands: pint, matrices, solve, coalescence, selftest.
Exit status: 0 success, 2 usage error, 3 numerical failure, 4 index-set violation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction

from gmpy2 import mpfr

from . import io as fio
from .errors import IndexSetError, NumericalError
from .specfun import MIN_PRECISION, set_precision

EXIT_USAGE, EXIT_NUMERICAL, EXIT_INDEX = 2, 3, 4

log = logging.getLogger("fockmel")


def _real(text):
    try:
        return mpfr(Fraction(text).numerator) / Fraction(text).denominator
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def _positive(text):
    val = _real(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _scan(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("scan range must be lo:hi:steps")
    lo, hi = _positive(parts[0]), _positive(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError("steps must be an integer") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("scan range needs lo < hi")
    if steps < 3:
        raise argparse.ArgumentTypeError("scan needs at least 3 steps")
    return lo, hi, steps


def _precision(text):
    bits = int(text)
    if bits < MIN_PRECISION:
        raise argparse.ArgumentTypeError(f"precision must be >= {MIN_PRECISION} bits")
    return bits


def _common(p):
    p.add_argument("--precision", type=_precision, default=None,
                   help="working precision in bits (default 256 or $FOCKMEL_PRECISION)")
    p.add_argument("--digits", type=int, default=30, help="significant digits in output (default 30)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=1, help="worker processes for integral evaluation")
    p.add_argument("-v", "--verbose", action="store_true")


def _system(p, delta_required=False):
    p.add_argument("--Z", type=_positive, default=mpfr(2), help="nuclear charge (default 2)")
    p.add_argument("--omega", type=int, default=6, help="cutoff n+2l+m+i <= omega (default 6)")
    p.add_argument("--composites", dest="composites", action="store_true", default=True,
                   help="prepend the 16 composite functions (default)")
    p.add_argument("--no-composites", dest="composites", action="store_false")
    p.add_argument("--single-term", action="store_true",
                   help="use only the term (0,0,0,0,0); overrides --omega/--composites")
    p.add_argument("--n-min", type=int, default=0, help="lowest power of s for j=0 terms (<= 0)")
    p.add_argument("--j-max", type=int, default=2, choices=(0, 1, 2), help="highest log power")
    p.add_argument("--keep-redundant", action="store_true",
                   help="keep i=+1, j=0 terms that lie in the span of the i=-1 terms")
    group = p.add_mutually_exclusive_group(required=delta_required)
    group.add_argument("--delta", type=_positive, default=None, help="fixed scale parameter")
    group.add_argument("--delta-scan", type=_scan, default=None, metavar="LO:HI:STEPS",
                       help="grid scan plus golden-section refinement of delta")


def build_parser():
    parser = argparse.ArgumentParser(prog="fockmel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pint", help="evaluate one basic integral P_{iota,j}(nu, ell, mu)")
    _common(p)
    for name in ("iota", "logpow", "nu", "ell", "mu"):
        p.add_argument(f"--{name}", type=int, required=True)

    p = sub.add_parser("matrices", help="assemble S, U, K")
    _common(p)
    _system(p)

    p = sub.add_parser("solve", help="ground state at fixed delta or optimized over a delta range")
    _common(p)
    _system(p)

    p = sub.add_parser("coalescence", help="residual diagnostic along a coalescence line")
    _common(p)
    _system(p)
    p.add_argument("--line", choices=("en", "ee"), default="en")
    p.add_argument("--rmin", type=_positive, default=mpfr("0.05"))
    p.add_argument("--rmax", type=_positive, default=mpfr(5))
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--eps-rel", type=_positive, default=mpfr("1e-6"), help="eps = eps_rel * R")

    p = sub.add_parser("selftest", help="run oracle and identity suites")
    _common(p)
    p.add_argument("--suite", choices=("integrals", "identities", "kinetic", "hydrogenic", "all"), default="all")
    p.add_argument("--points", type=int, default=200, help="grid size for the integral suite")
    return parser


def _basis_spec(args):
    from .basis import SelectionRule
    from .eigensolve import BasisSpec

    if args.single_term:
        return BasisSpec(terms=[(0, 0, 0, 0, 0)], composites=False)
    rule = SelectionRule(args.omega, n_min=args.n_min, j_max=args.j_max, drop_redundant=not args.keep_redundant)
    return BasisSpec(rule=rule, composites=args.composites)


def _emit(text, args):
    if args.out is None:
        sys.stdout.write(text)


def _grouped(x, digits=15):
    """Human-readable energy with a space every three decimals."""
    s = format(x, f".{digits}f")
    head, _, frac = s.partition(".")
    return head + "." + " ".join(frac[k:k + 3] for k in range(0, len(frac), 3))


def _solve(args):
    from .eigensolve import DeltaProblem, ground_state, optimize_delta

    spec = _basis_spec(args)
    problem = DeltaProblem(spec, args.Z, threads=args.threads)
    if args.delta_scan is not None:
        lo, hi, steps = args.delta_scan
        result = optimize_delta(spec, args.Z, (lo, hi), steps, problem=problem)
    else:
        delta = args.delta if args.delta is not None else 2 * (args.Z - mpfr(5) / 16)
        result = ground_state(problem.matrices(delta), delta)
    basis = spec.build(args.Z, result.delta)
    return result, basis


def cmd_pint(args):
    from .integrals import PKey, p_integral

    key = PKey(args.iota, args.logpow, args.nu, args.ell, args.mu)
    val = p_integral(key)
    text = fio.decimal(val, args.digits) + "\n"
    if args.out:
        fio._write(args.out, text)
    _emit(text, args)


def cmd_matrices(args):
    from .eigensolve import DeltaProblem

    spec = _basis_spec(args)
    delta = args.delta if args.delta is not None else 2 * (args.Z - mpfr(5) / 16)
    problem = DeltaProblem(spec, args.Z, threads=args.threads)
    mats = problem.matrices(delta)
    mats.delta = delta
    _emit(fio.write_matrices(mats, args.out, args.format, args.digits), args)


def cmd_solve(args):
    result, basis = _solve(args)
    _emit(fio.write_result(result, basis, args.Z, args.out, args.format, args.digits), args)
    print(f"E = {_grouped(result.energy)} hartree  delta = {float(result.delta):.8f}  "
          f"size = {len(basis)}  residual = {float(result.residual_norm):.2e}", file=sys.stderr)
    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)


def cmd_coalescence(args):
    from .coalescence import scan_line

    result, basis = _solve(args)
    samples = scan_line(args.line, result, basis, args.Z, result.delta, args.rmin, args.rmax,
                        args.points, args.eps_rel)
    fmt = args.format
    _emit(fio.write_samples(samples, args.line, args.Z, result.delta, basis, args.out, fmt, args.digits), args)


def cmd_selftest(args):
    from . import selftest

    suites = ("identities", "hydrogenic", "kinetic", "integrals") if args.suite == "all" else (args.suite,)
    failed = 0
    lines = []
    for name in suites:
        if name == "integrals":
            checks = selftest.integral_suite(points=args.points)
        elif name == "identities":
            checks = selftest.identity_suite()
        elif name == "kinetic":
            checks = selftest.kinetic_suite() + [selftest.kinetic_asymmetry_check()]
        else:
            checks = selftest.hydrogenic_suite()
        bad = [c for c in checks if not c.ok]
        failed += len(bad)
        worst = max((c.rel_err / c.tol for c in checks), default=0)
        lines.append(f"{'PASS' if not bad else 'FAIL'} {name}: {len(checks) - len(bad)}/{len(checks)} "
                     f"within tolerance (worst error/tol = {worst:.2e})")
        for c in bad:
            lines.append(f"  failed {c.name}: error {c.rel_err:.3e} > {c.tol:.1e}")
    text = "\n".join(lines) + "\n"
    if args.out:
        fio._write(args.out, text)
    _emit(text, args)
    return 1 if failed else 0


COMMANDS = {
    "pint": cmd_pint,
    "matrices": cmd_matrices,
    "solve": cmd_solve,
    "coalescence": cmd_coalescence,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.precision is not None:
        set_precision(args.precision)
    elif os.environ.get("FOCKMEL_PRECISION"):
        try:
            set_precision(_precision(os.environ["FOCKMEL_PRECISION"]))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"FOCKMEL_PRECISION: {exc}")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        status = COMMANDS[args.command](args)
    except IndexSetError as exc:
        print(f"fockmel: index-set error: {exc}", file=sys.stderr)
        return EXIT_INDEX
    except (NumericalError, ArithmeticError) as exc:
        print(f"fockmel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"fockmel: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
