"""Command line entry point: ``zeno-sim <subcommand> ...``."""
from __future__ import annotations

import argparse
import ast
import math
import operator
import os
import sys

import numpy as np

from . import analytic
from .liouvillian import BathParams, build_two_qubit
from .scan import MODES, SYSTEM_ANGLES, Axis, SweepSpec, emit, evaluate, run_sweep

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_angle(text: str) -> float:
    """Parse a number or a simple expression in ``pi`` such as ``3*pi/2``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"angle {text!r} is not finite")
    return value


def parse_grid(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"grid must look like NAME:LO:HI:COUNT, got {text!r}")
    name, lo, hi, count = parts
    try:
        n = int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid count must be an integer, got {count!r}") from None
    return Axis(name.strip(), parse_angle(lo), parse_angle(hi), n)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("ZENO_SIM_JOBS", "1")))
    except ValueError:
        return 1


def _add_bath(p: argparse.ArgumentParser):
    g = p.add_argument_group("reservoir")
    g.add_argument("--big-n", type=float, default=1.0, help="squeezed photon number N (default: %(default)s)")
    g.add_argument("--eta", type=parse_angle, default=0.0, help="squeezing phase eta (default: %(default)s)")
    g.add_argument("--gamma", type=float, default=1.0, help="decay rate gamma (default: %(default)s)")


def _add_schedule(p: argparse.ArgumentParser, modes=MODES):
    p.add_argument("--mode", choices=modes, default="nonselective", help="survival function (default: %(default)s)")
    p.add_argument("--n", type=int, default=1000, help="number of measurements (default: %(default)s)")
    p.add_argument(
        "--total-time",
        type=float,
        default=10.0,
        help="total time t; equals gamma*t at the default gamma=1 (default: %(default)s)",
    )
    p.add_argument("--initial-index", type=int, default=None,
                   help="initial basis state, numbered from 1 (default: 1, or 3 for a delta/chi sweep)")


def _add_angles(p: argparse.ArgumentParser, names):
    for name in names:
        p.add_argument(f"--{name}", type=parse_angle, default=None, help=f"fixed value of {name} (accepts e.g. pi/2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeno-sim",
        description="Quantum Zeno dynamics of qubits in a squeezed-vacuum reservoir.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, system in (("scan1q", "one_qubit"), ("scan2q", "two_qubit")):
        p = sub.add_parser(name, help=f"sweep two angles for the {system.replace('_', ' ')} system")
        _add_bath(p)
        _add_schedule(p)
        _add_angles(p, SYSTEM_ANGLES[system])
        p.add_argument("--grid", type=parse_grid, action="append", default=None, metavar="A:LO:HI:COUNT",
                       help="swept axis, repeat twice (default: theta 0:pi:101 x phi 0:2pi:201 for one qubit; "
                            "alpha 0:pi:101 x beta -pi/2:3pi/2:201 for two qubits)")
        p.add_argument("--output", default=None, help="output file (default: CSV on stdout)")
        p.add_argument("--format", choices=("csv", "json", "gnuplot_script"), default="csv")
        p.add_argument("--jobs", type=int, default=_default_jobs(),
                       help="worker threads; results do not depend on it (default: $ZENO_SIM_JOBS or 1)")
        p.set_defaults(system=system)

    p = sub.add_parser("point", help="survival probability for one measurement basis")
    _add_bath(p)
    _add_schedule(p)
    _add_angles(p, SYSTEM_ANGLES["one_qubit"] + SYSTEM_ANGLES["two_qubit"])

    p = sub.add_parser("zeno-points", help="print the Zeno and anti-Zeno measurement directions")
    _add_bath(p)

    p = sub.add_parser("dfzs", help="print the two-qubit decoherence-free Zeno states")
    _add_bath(p)
    return parser


def _bath(args, parser) -> BathParams:
    try:
        return BathParams(gamma=args.gamma, N=args.big_n, eta=args.eta)
    except ValueError as e:
        parser.error(str(e))


def _cmd_scan(args, parser) -> int:
    bath = _bath(args, parser)
    system = args.system
    names = SYSTEM_ANGLES[system]
    grids = args.grid
    if grids is None:
        grids = [Axis.default(names[0]), Axis.default(names[1])]
    if len(grids) != 2:
        parser.error(f"--grid must be given exactly twice (got {len(grids)})")
    fixed = {k: getattr(args, k) for k in names if getattr(args, k) is not None}
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        spec = SweepSpec(system, args.mode, bath, args.total_time, args.n, tuple(grids), fixed, args.initial_index)
        result = run_sweep(spec, jobs=args.jobs)
    except ValueError as e:
        parser.error(str(e))
    if args.output is None:
        if args.format != "csv":
            parser.error("--format json/gnuplot_script requires --output")
        from .scan import _csv_text

        sys.stdout.write(_csv_text(result))
    else:
        try:
            emit(result, args.format, args.output)
        except (OSError, ValueError) as e:
            print(f"zeno-sim: error: {e}", file=sys.stderr)
            return 1
    return 0


def _cmd_point(args, parser) -> int:
    bath = _bath(args, parser)
    one = [k for k in SYSTEM_ANGLES["one_qubit"] if getattr(args, k) is not None]
    two = [k for k in SYSTEM_ANGLES["two_qubit"] if getattr(args, k) is not None]
    if one and two:
        parser.error("mix of one-qubit (--theta/--phi) and two-qubit (--alpha/--beta/--delta/--chi) angles")
    system = "two_qubit" if two else "one_qubit"
    names = SYSTEM_ANGLES[system]
    missing = [k for k in names if getattr(args, k) is None]
    if missing:
        parser.error("missing angle(s): " + ", ".join(f"--{k}" for k in missing))
    angles = {k: np.array([getattr(args, k)]) for k in names}
    try:
        # a dummy 2-point axis pair satisfies the sweep validation; only `angles` is evaluated
        axes = (Axis(names[0], 0.0, math.pi, 2), Axis(names[1], 0.0, math.pi, 2))
        spec = SweepSpec(system, args.mode, bath, args.total_time, args.n, axes, {}, args.initial_index or 1)
        if system == "two_qubit":
            from .measurement import TwoQubitBasisParams

            TwoQubitBasisParams(*(float(angles[k][0]) for k in names))
        value = float(evaluate(spec, angles)[0])
    except ValueError as e:
        parser.error(str(e))
    print(repr(min(max(value, 0.0), 1.0)))
    return 0


def _cmd_zeno_points(args, parser) -> int:
    bath = _bath(args, parser)
    print("kind       theta                phi")
    for z in analytic.zeno_points(bath):
        print(f"{z.kind:<10} {z.theta!r:<20} {z.phi!r}")
    return 0


def _fmt_state(psi) -> str:
    labels = ("00", "01", "10", "11")
    terms = [f"({c.real:+.12f}{c.imag:+.12f}j)|{lab}>" for c, lab in zip(psi, labels) if abs(c) > 0]
    return " ".join(terms)


def _cmd_dfzs(args, parser) -> int:
    bath = _bath(args, parser)
    gen = build_two_qubit(bath)
    for name, psi in zip(("Psi_1z", "Psi_3z"), analytic.dfzs_states(bath)):
        residual = np.abs(gen.apply(np.outer(psi, psi.conj()))).max()
        print(f"{name}: {_fmt_state(psi)}   residual={residual:.3e}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "scan1q": _cmd_scan,
        "scan2q": _cmd_scan,
        "point": _cmd_point,
        "zeno-points": _cmd_zeno_points,
        "dfzs": _cmd_dfzs,
    }[args.command]
    return handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
