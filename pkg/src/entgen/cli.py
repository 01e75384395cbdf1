"""Command-line front end.

    entgen bound    --T 0.25 --grid 101
    entgen fig3     --lengths 10:100:10 --l0-km 25
    entgen simulate --strategy usd --u 0.5 --T 0.5
    entgen verify   --trials 10000 --seed 42 --out report.json
    entgen hull     --T 0.25 --grid 10000

Relative ``--out`` paths are resolved against $ENTGEN_OUTPUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .protocol import ProtocolParams, build_joint_state
from .strategies import evaluate_strategy, sample_compliant_strategy, trivial_strategy, usd_strategy
from .verifier import TrialConfig, hull_check, hull_kink, run_monte_carlo

OUTPUT_DIR_ENV = "ENTGEN_OUTPUT_DIR"
DEFAULT_L0_KM = 25.0


def fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.12g}"


def _resolve_out(path: str | None, default_name: str | None = None) -> Path | None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if path is None:
        if base and default_name:
            return Path(base) / default_name
        return None
    p = Path(path)
    if not p.is_absolute() and base:
        p = Path(base) / p
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _open_unit(name):
    def parse(text: str) -> float:
        value = float(text)
        if not 0.0 < value < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1), got {text}")
        return value
    return parse


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _lengths(text: str) -> list[float]:
    """'start:stop:step' (stop inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed length range {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("lengths must be positive")
    return values


def _transmittance(args, parser) -> float:
    if args.T is not None:
        return args.T
    T = math.exp(-args.length_km / args.l0_km)
    if not 0.0 < T < 1.0:
        parser.error(f"length {args.length_km} km gives T={T} outside (0, 1)")
    return T


# --- commands --------------------------------------------------------------


def cmd_bound(args, parser) -> int:
    T = _transmittance(args, parser)
    grid = np.linspace(0.0, 1.0, args.grid) if args.grid > 1 else np.array([0.0])
    fs = bounds.f_sym(grid, T)
    fo = bounds.f_opt(grid, T)
    rows = [[float(p), float(a), float(b), float(p * b)] for p, a, b in zip(grid, fs, fo)]
    out = _resolve_out(args.out)
    if args.format == "json":
        text = json.dumps({"T": T, "Ps_star": bounds.ps_star(T),
                           "rows": [dict(zip(("Ps", "F_sym", "F_opt", "Ps_F_opt"), r)) for r in rows]}, indent=2)
        _emit(text + "\n", out)
    else:
        _emit(_csv(["Ps", "F_sym", "F_opt", "Ps_F_opt"], rows), out)
    return 0


def cmd_fig3(args, parser) -> int:
    grid = np.linspace(0.0, 1.0, args.grid)
    rows = []
    for length in args.lengths:
        T = math.exp(-length / args.l0_km)
        for p, f in zip(grid, bounds.f_opt(grid, T)):
            rows.append([float(length), T, float(p), float(f)])
    out = _resolve_out(args.out)
    if args.format == "json":
        curves = {}
        for length, T, p, f in rows:
            curves.setdefault(length, {"l_km": length, "T": T, "Ps": [], "F_opt": []})
            curves[length]["Ps"].append(p)
            curves[length]["F_opt"].append(f)
        _emit(json.dumps({"l0_km": args.l0_km, "curves": list(curves.values())}, indent=2) + "\n", out)
    else:
        _emit(_csv(["l_km", "T", "Ps", "F_opt"], rows), out)
    return 0


def cmd_simulate(args, parser) -> int:
    if args.u is not None:
        params = ProtocolParams.from_overlap(args.u, args.T, q0=args.q0)
    else:
        params = ProtocolParams.phase_rotation(args.alpha, args.theta, args.T, q0=args.q0)

    try:
        if args.strategy == "usd":
            strategy = usd_strategy(params)
        elif args.strategy == "trivial":
            strategy = trivial_strategy()
        else:
            rng = np.random.default_rng(args.seed)
            strategy = sample_compliant_strategy(rng, args.outcomes, params)
    except ValueError as exc:
        parser.error(str(exc))

    outcomes, point, marg = evaluate_strategy(params, strategy)
    u = abs(build_joint_state(params).u_overlap)
    context = {
        "u": u,
        "fidelity_cap": bounds.fidelity_cap(u, params.T),
        "F_opt_at_Ps": bounds.f_opt(point.Ps, params.T),
        "triangle": {k: getattr(bounds.triangle(u, params.T), k) for k in ("X0", "X1", "X2", "X3")},
    }
    out = _resolve_out(args.out)
    if args.format == "json":
        payload = {
            "strategy": strategy.name,
            "params": {"q0": params.q0, "alpha0": [params.alpha0.real, params.alpha0.imag],
                       "alpha1": [params.alpha1.real, params.alpha1.imag], "T": params.T},
            "outcomes": [{"k": o.k, "p": o.p, "F": o.F, "a": o.a, "b": [o.b.real, o.b.imag], "z": o.z}
                         for o in outcomes],
            "Ps": point.Ps,
            "F": point.F,
            "marginals": {k: getattr(marg, k) for k in ("x0", "y0", "z0", "zs", "xf", "yf", "zf")},
            "bounds": context,
        }
        _emit(json.dumps(payload, indent=2) + "\n", out)
    else:
        rows = [["outcome", o.k, o.p, o.F, o.a, o.z] for o in outcomes]
        rows.append(["total", "", point.Ps, point.F, "", marg.zs])
        rows.append(["fidelity_cap", "", "", context["fidelity_cap"], "", ""])
        rows.append(["F_opt", "", point.Ps, context["F_opt_at_Ps"], "", ""])
        _emit(_csv(["record", "k", "p", "F", "a", "z"], rows), out)
    return 0


def cmd_verify(args, parser) -> int:
    try:
        config = TrialConfig(
            n_trials=args.trials,
            seed=args.seed,
            q0_range=tuple(args.q0_range),
            alpha_range=tuple(args.alpha_range),
            theta_range=tuple(args.theta_range),
            T_range=tuple(args.T_range),
            max_outcomes=args.max_outcomes,
            cross_check_every=args.cross_check_every,
            cutoff=args.cutoff,
        )
    except ValueError as exc:
        parser.error(str(exc))
    report = run_monte_carlo(config, workers=args.workers)
    out = _resolve_out(args.out, "verify_report.json")
    try:
        _emit(report.to_json(indent=2) + "\n", out)
    except OSError as exc:
        print(f"entgen: cannot write report: {exc}", file=sys.stderr)
        return 2
    worst = min(report.checks.values(), key=lambda c: c.worst_margin)
    print(f"{report.trials} trials, {report.violations} violations, "
          f"worst margin {worst.worst_margin:.3g} ({worst.name}), "
          f"cross-check max {report.cross_check_max:.3g}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_hull(args, parser) -> int:
    deviation = hull_check(args.T, args.grid)
    kink = bounds.ps_star(args.T)
    payload = {
        "T": args.T,
        "grid": args.grid,
        "max_deviation": deviation,
        "tolerance": args.tol,
        "Ps_star": kink,
        "hull_kink": hull_kink(args.T, args.grid) if kink is not None else None,
        "ok": deviation <= args.tol,
    }
    _emit(json.dumps(payload, indent=2) + "\n", _resolve_out(args.out))
    return 0 if payload["ok"] else 1


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entgen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="optimal and symmetric fidelity curves at one transmittance")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--T", type=_open_unit("T"))
    where.add_argument("--length-km", type=_positive_float)
    p.add_argument("--l0-km", type=_positive_float, default=DEFAULT_L0_KM)
    p.add_argument("--grid", type=_positive_int, default=101)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("fig3", help="optimal curves for a range of channel lengths")
    p.add_argument("--lengths", type=_lengths, default=_lengths("10:100:10"))
    p.add_argument("--l0-km", type=_positive_float, default=DEFAULT_L0_KM)
    p.add_argument("--grid", type=_positive_int, default=101)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("simulate", help="evaluate one strategy on one protocol")
    p.add_argument("--strategy", choices=("usd", "trivial", "random"), required=True)
    p.add_argument("--q0", type=float, default=0.5)
    pulse = p.add_mutually_exclusive_group()
    pulse.add_argument("--alpha", type=complex, default=1.0, help="pulse amplitude before the interaction")
    pulse.add_argument("--u", type=_open_unit("u"), help="overlap of Bob's pulses (sets real antipodal amplitudes)")
    p.add_argument("--theta", type=float, default=math.pi / 2, help="interaction phase")
    p.add_argument("--T", type=_open_unit("T"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outcomes", type=_positive_int, default=2)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="Monte Carlo check of every inequality")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--q0-range", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--alpha-range", type=float, nargs=2, default=(0.05, 2.0), metavar=("LO", "HI"))
    p.add_argument("--theta-range", type=float, nargs=2, default=(0.0, math.pi), metavar=("LO", "HI"))
    p.add_argument("--T-range", type=float, nargs=2, default=(0.05, 0.95), metavar=("LO", "HI"))
    p.add_argument("--max-outcomes", type=_positive_int, default=4)
    p.add_argument("--cross-check-every", type=int, default=10)
    p.add_argument("--cutoff", type=_positive_int)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hull", help="sampled convex hull against the optimal envelope")
    p.add_argument("--T", type=_open_unit("T"), required=True)
    p.add_argument("--grid", type=_positive_int, default=10_000)
    p.add_argument("--tol", type=_positive_float, default=5e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hull)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "hull" and args.grid < 100:
        parser.error("--grid must be at least 100 for hull")
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
