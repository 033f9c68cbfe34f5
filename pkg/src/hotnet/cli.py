"""Command-line front end.

Exit codes: 0 pass, 1 error (bad input, missing file), 2 precondition
failure, 3 verdict FAIL.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from ._num import exact, to_json_exact, to_json_number
from .construction import (ConstructionError, PreconditionError, annex_diagnostics, bounds,
                           build_profile, construct_equilibrium)
from .counterexamples import (counterexample_increasing, counterexample_quartile,
                              counterexample_three_players)
from .density import Density, step_approximate, step_cap, validate_density
from .graph import GraphValidationError, MetricGraph, contract_degree_two, path_graph, validate
from .io import dumps, load_density, load_graph, load_profile, read_json, write_json
from .verify import check_epsilon_equilibrium

EXIT_OK, EXIT_ERROR, EXIT_PRECONDITION, EXIT_FAIL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _num(text: str) -> Fraction:
    try:
        return exact(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph JSON file")
    common.add_argument("--density", help="density JSON file")
    common.add_argument("--profile", help="profile JSON file (a list, or a report with a 'profile' key)")
    common.add_argument("--n", type=int, help="number of players")
    common.add_argument("--eps", type=_num, help="target epsilon (verify: tested epsilon)")
    common.add_argument("--eps1", type=_num, help="step resolution")
    common.add_argument("--theta", type=_num, help="build the untrimmed profile at this theta")
    common.add_argument("--mode", choices=["additive", "multiplicative", "both"], default="both",
                        help="which epsilon test decides the exit code")
    common.add_argument("--grid", type=_num, help="grid pitch (selects the certified grid method)")
    common.add_argument("--tol", type=float, help="grid error tolerance (selects the grid method)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics")
    common.add_argument("--override", action="store_true", help="build even when guarantees do not apply")
    common.add_argument("--contract", action="store_true", help="merge degree-two vertices on load")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--figure", help="figure path (default: next to --out, .png)")

    p = argparse.ArgumentParser(prog="hotnet", description="Hotelling location games on metric graphs.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("construct", parents=[common], help="build the approximate equilibrium profile")
    sub.add_parser("verify", parents=[common], help="check a profile for an epsilon-equilibrium")
    sub.add_parser("bounds", parents=[common], help="player thresholds and slack constants")
    ce = sub.add_parser("counterexample", parents=[common], help="run a small-game suite")
    ce.add_argument("suite", choices=["increasing", "quartile", "three-player"])
    sub.add_parser("graph-validate", parents=[common], help="check graph invariants")
    sub.add_parser("density-approx", parents=[common], help="step approximation of a density")
    return p


# -- helpers -------------------------------------------------------------------------------------


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {', '.join(missing)}")


def _graph(args) -> MetricGraph:
    _need(args, "graph")
    return load_graph(args.graph, contract=args.contract)


def _method(args) -> dict:
    if args.grid is not None:
        return {"method": "grid", "pitch": float(args.grid)}
    if args.tol is not None:
        return {"method": "grid", "tol": args.tol}
    return {"method": "exact"}


def _figure_path(args) -> Path | None:
    if args.figure:
        return Path(args.figure)
    if args.out:
        return Path(args.out).with_suffix(".png")
    return None


def _figure_ref(args, fig: Path) -> str:
    """Figure path as recorded in the report: relative to the report when possible."""
    if args.out:
        try:
            return str(fig.resolve().relative_to(Path(args.out).resolve().parent))
        except ValueError:
            pass
    return str(fig)


def _emit(args, report: dict) -> None:
    if args.out:
        write_json(args.out, report)
    else:
        sys.stdout.write(dumps(report))


def _verdict_ok(verdict: dict, mode: str) -> bool:
    if mode == "both":
        return verdict["additive"] and verdict["multiplicative"]
    return verdict[mode]


# -- commands ------------------------------------------------------------------------------------


def cmd_construct(args) -> int:
    g = _graph(args)
    _need(args, "density")
    f = load_density(args.density, g)
    if args.eps is None and args.eps1 is None:
        raise UsageError("construct needs --eps or --eps1")
    fig = _figure_path(args)
    if args.theta is not None:
        b = bounds(f, eps1=args.eps1, eps=None if args.eps1 is not None else args.eps, graph=g)
        sd = step_approximate(f, b.eps1)
        prof, plan = build_profile(g, sd, args.theta, strict=not args.override)
        report = {"command": "construct", "theta": to_json_exact(args.theta), "n": prof.n,
                  "bounds": b.to_json(), "steps": [s.to_json() for s in plan.steps],
                  "profile": prof.to_json(g)}
        target = b.eps if b.eps is not None else b.phi
    else:
        _need(args, "n")
        try:
            res = construct_equilibrium(g, f, args.n, args.eps if args.eps1 is None else None,
                                        eps1=args.eps1, override=args.override)
        except PreconditionError as exc:
            _emit(args, {"command": "construct", "error": str(exc), "required_n": exc.required,
                         "n": args.n})
            print(f"precondition failed: {exc} (need n >= {exc.required})", file=sys.stderr)
            return EXIT_PRECONDITION
        except ConstructionError as exc:
            _emit(args, {"command": "construct", "error": str(exc), "n": args.n})
            print(f"precondition failed: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        report = {"command": "construct", **res.to_json(g)}
        prof, sd, b = res.profile, res.step_density, res.bounds
        target = b.eps if b.eps is not None else b.phi
        if args.override and res.warnings:
            # guarantees are void: audit the profile instead of trusting them
            rep = check_epsilon_equilibrium(g, prof, f, target, **_method(args))
            report["verdict"] = {**rep.verdict, "eps": to_json_number(target), "source": "audit",
                                 "max_gap": to_json_number(rep.max_gap)}
        else:
            report["verdict"] = {"additive": True, "multiplicative": True, "eps": to_json_number(target),
                                 "source": "guarantee"}
    if fig is not None:
        from .plotting import plot_profile
        plot_profile(g, f, prof, fig)
        report["figure"] = _figure_ref(args, fig)
    _emit(args, report)
    return EXIT_OK


def cmd_verify(args) -> int:
    g = _graph(args)
    _need(args, "density", "profile", "eps")
    f = load_density(args.density, g)
    prof = load_profile(args.profile, g)
    rep = check_epsilon_equilibrium(g, prof, f, args.eps, **_method(args))
    report = {"command": "verify", "mode": args.mode, "n": prof.n, "eps_exact": to_json_exact(args.eps),
              "density": {"K": to_json_number(f.K), "m": to_json_number(f.m), "M": to_json_number(f.M),
                          "L": to_json_number(f.total_mass())},
              **rep.to_json()}
    ok = _verdict_ok(rep.verdict, args.mode)
    report["pass"] = ok
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_gaps
        plot_gaps(report, fig)
        report["figure"] = _figure_ref(args, fig)
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bounds(args) -> int:
    g = _graph(args)
    _need(args, "density")
    f = load_density(args.density, g)
    if (args.eps is None) == (args.eps1 is None):
        raise UsageError("bounds needs exactly one of --eps and --eps1")
    b = bounds(f, eps=args.eps, eps1=args.eps1, graph=g)
    report = {"command": "bounds", **b.to_json()}
    if args.n is not None:
        report["annex"] = annex_diagnostics(g, f, b.eps1, args.n)
    _emit(args, report)
    return EXIT_OK


def _segment_density(args) -> Density:
    if args.density is None:
        g = _graph(args) if args.graph else path_graph(1)
        return Density.uniform(g)
    g = _graph(args) if args.graph else path_graph(1)
    return load_density(args.density, g)


def cmd_counterexample(args) -> int:
    density = None
    if args.suite == "quartile":
        density = _segment_density(args)
        report = counterexample_quartile(density)
    elif args.suite == "three-player":
        density = _segment_density(args)
        pitch = args.grid if args.grid is not None else Fraction(1, 60)
        report = counterexample_three_players(density, pitch=pitch, seed=args.seed)
    else:
        slope = args.eps if args.eps is not None else Fraction(1, 2)
        user = None
        if args.profile:
            data = read_json(args.profile)
            user = data if isinstance(data, dict) else {"profile": data}
        report = counterexample_increasing(args.n if args.n is not None else 4, slope, user)
    report["command"] = "counterexample"
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_counterexample
        plot_counterexample(report, fig, density)
        report["figure"] = _figure_ref(args, fig)
    _emit(args, report)
    return EXIT_OK


def cmd_graph_validate(args) -> int:
    _need(args, "graph")
    data = read_json(args.graph)
    try:
        g = MetricGraph.from_json(data)
    except GraphValidationError as exc:
        rep = exc.report
        _emit(args, {"command": "graph-validate", **rep.to_json()})
        return EXIT_FAIL
    report = {"command": "graph-validate", **validate(g).to_json()}
    if args.contract:
        c = contract_degree_two(g)
        report["contracted"] = c.graph.to_json()
        report["irreducible_cycles"] = c.irreducible_cycles
    _emit(args, report)
    return EXIT_OK


def cmd_density_approx(args) -> int:
    g = _graph(args)
    _need(args, "density", "eps1")
    f = load_density(args.density, g)
    cap = step_cap(f)
    if not 0 < args.eps1 < cap:
        msg = f"eps1 must lie in (0, {cap}) = (0, min length * K / 2)"
        _emit(args, {"command": "density-approx", "error": msg, "max_eps1": to_json_exact(cap)})
        print(msg, file=sys.stderr)
        return EXIT_PRECONDITION
    sd = step_approximate(f, args.eps1)
    # sampled check of the sup-norm bound at seeded random arcs plus a regular grid
    rng = random.Random(args.seed)
    worst = 0.0
    for e in g.edges:
        lam = float(e.length)
        pts = [lam * i / 9999 for i in range(10000)] + [rng.uniform(0, lam) for _ in range(1000)]
        for s in pts:
            worst = max(worst, abs(float(f.value(e.id, s)) - float(sd.value(e.id, s))))
    report = {"command": "density-approx", "eps1": to_json_exact(args.eps1),
              "step_density": sd.to_json(), "validation": validate_density(f).to_json(),
              "sup_sampled": worst, "within_eps1": worst <= float(args.eps1) + 1e-12}
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_density_approx
        plot_density_approx(f, sd, fig)
        report["figure"] = _figure_ref(args, fig)
    _emit(args, report)
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "counterexample": cmd_counterexample,
    "graph-validate": cmd_graph_validate,
    "density-approx": cmd_density_approx,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
