"""Command-line entry point.

Subcommands: ``threshold``, ``bitflip``, ``walk``, ``reservoir``, ``graph``
and ``figures``.  Every subcommand accepts ``--seed``, ``--out``,
``--format``, ``--config`` and ``--workers``.  A config file holds
``key = value`` lines (``#`` starts a comment); keys are option names with
dashes or underscores, and command-line flags win over the file.

Exit codes: 0 success, 2 invalid configuration, 3 capacity or guard errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence


from jitcluster import analytic, graphstate, report, reservoir, walker
from jitcluster.errors import CapacityError
from jitcluster.gates import EntanglingProcedure, get_procedure
from jitcluster.seeding import make_rng

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3
THRESHOLD_HEADER = ("p", "t2_over_dt", "tau", "mean_buffer", "minicluster", "variant")
BITFLIP_HEADER = ("alpha", "p", "not_error")
UNDERFLOW_HEADER = ("beta_multiplier", "underflow_fraction")
RESERVOIR_HEADER = ("tau", "p", "q_required", "yield_estimate")
FORMATS = {
    "threshold": ("csv", "json"),
    "bitflip": ("csv", "json"),
    "walk": ("json", "csv"),
    "reservoir": ("csv", "json"),
    "graph": ("dot", "json"),
    "figures": ("csv",),
}


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_shared(sub: argparse.ArgumentParser, name: str) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument("--format", choices=FORMATS[name], default=FORMATS[name][0])
    sub.add_argument("--config", default=None, help="key = value config file")
    sub.add_argument("--workers", type=int, default=1, help="worker processes")


def _add_procedure(sub: argparse.ArgumentParser, default: str = "dh") -> None:
    sub.add_argument("--procedure", default=default, help="fusion1 | fusion2 | dh | rus | bc")
    sub.add_argument("--c1", type=int, default=None, help="override c1")
    sub.add_argument("--c2", type=int, default=None, help="override c2")
    sub.add_argument("--broker-client", action="store_true", default=None)


def _add_grid(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p-min", type=float, default=0.05)
    sub.add_argument("--p-max", type=float, default=1.0)
    sub.add_argument("--p-steps", type=int, default=96)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jitcluster",
        description="Just-in-time cluster-state generation with ageing qubits.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("threshold", help="T2 threshold curve against p")
    _add_shared(sub, "threshold")
    _add_procedure(sub)
    _add_grid(sub)
    sub.add_argument("--alpha", type=float, default=10.0)
    sub.add_argument("--dim", type=int, default=1, choices=analytic.DIMENSIONS)
    sub.add_argument("--tau", type=float, default=None, help="fixed tau (default 1/p)")
    sub.add_argument("--variant", choices=("general", "printed", "both"), default="general")
    sub.add_argument("--plot", default=None, help="also render a figure to this path")

    sub = subs.add_parser("bitflip", help="probability of no bit-flip error against p")
    _add_shared(sub, "bitflip")
    _add_grid(sub)
    sub.add_argument("--alpha", type=_float_list, default=[10.0], help="one or more alphas, comma-separated")
    sub.add_argument("--plot", default=None)

    sub = subs.add_parser("walk", help="Monte Carlo buffer random walk")
    _add_shared(sub, "walk")
    _add_procedure(sub)
    sub.add_argument("--p", type=float, default=0.5)
    sub.add_argument("--alpha", type=float, default=10.0)
    sub.add_argument("--horizon", type=int, default=None, help="steps (default ceil(1/p)*ceil(alpha))")
    sub.add_argument("--trials", type=int, default=1000)
    sub.add_argument("--start-buffer", type=float, default=None)
    sub.add_argument("--beta-multiplier", type=float, default=1.0)
    sub.add_argument("--integer-mode", action="store_true", default=None)
    sub.add_argument("--beta-grid", type=_float_list, default=None)
    sub.add_argument("--plot", default=None)

    sub = subs.add_parser("reservoir", help="required reservoir size and gamma fit")
    _add_shared(sub, "reservoir")
    _add_procedure(sub, default="bc")
    sub.add_argument("--tau-list", type=_int_list, default=[2, 3, 4, 5, 6])
    sub.add_argument("--trials", type=int, default=2000)
    sub.add_argument("--cap", type=int, default=reservoir.DEFAULT_Q_CAP)
    sub.add_argument("--summary", default=None, help="JSON fit summary path (default: --out with .json)")
    sub.add_argument("--plot", default=None)

    sub = subs.add_parser("graph", help="graph-state constructions")
    _add_shared(sub, "graph")
    _add_procedure(sub)
    sub.add_argument("action", choices=("demo-x", "vertical", "honeycomb"))
    sub.add_argument("--length", type=int, default=5)
    sub.add_argument("--pos", type=int, default=3, help="1-based position on the chain")
    sub.add_argument("--pos-b", type=int, default=None, help="1-based position on chain B (vertical)")
    sub.add_argument("--outcome", choices=("success", "failure"), default="success")
    sub.add_argument("--cleanup", choices=("Y", "Z"), default="Y")
    sub.add_argument("--chains", type=int, default=3)
    sub.add_argument("--p", type=float, default=1.0)
    sub.add_argument("--max-attempts", type=int, default=100)

    sub = subs.add_parser("figures", help="CSV data and figures for every curve")
    _add_shared(sub, "figures")
    sub.add_argument("--outdir", default="figures")
    sub.add_argument("--alpha", type=float, default=10.0)
    sub.add_argument("--bitflip-alphas", type=_float_list, default=[10.0, 100.0, 1000.0])
    sub.add_argument("--p-steps", type=int, default=96)
    sub.add_argument("--trials", type=int, default=2000)
    sub.add_argument("--tau-list", type=_int_list, default=[2, 3, 4, 5, 6])
    sub.add_argument("--cap", type=int, default=reservoir.DEFAULT_Q_CAP, help="reservoir search cap")
    sub.add_argument("--skip-reservoir", action="store_true", default=None)
    sub.add_argument("--image-format", choices=("png", "svg", "pdf"), default="png")
    return parser


def load_config(path: str | Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key.replace("-", "_")] = value
    return entries


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _apply_config(sub: argparse.ArgumentParser, entries: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults: dict[str, Any] = {}
    for key, value in entries.items():
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"invalid configuration: unknown key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"invalid configuration: key {key!r} expects a boolean")
            defaults[key] = value.lower() in ("true", "1", "yes")
            continue
        try:
            converted = action.type(value) if action.type else value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"invalid configuration: key {key!r}: {exc}")
        if action.choices is not None and converted not in action.choices:
            raise ConfigError(f"invalid configuration: key {key!r} must be one of {list(action.choices)}")
        defaults[key] = converted
    sub.set_defaults(**defaults)


def resolve_procedure(args: argparse.Namespace) -> EntanglingProcedure:
    base = get_procedure(args.procedure)
    if args.c1 is None and args.c2 is None and args.broker_client is None:
        return base
    c1 = base.c1 if args.c1 is None else args.c1
    c2 = base.c2 if args.c2 is None else args.c2
    broker = base.broker_client if args.broker_client is None else args.broker_client
    return EntanglingProcedure(f"{base.name} (c1={c1}, c2={c2})", c1, c2, broker)


def _emit(text: str, out: str | None) -> str:
    if out is None:
        sys.stdout.write(text)
        return "stdout"
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return str(path)


def _summary(message: str, ok: bool = True) -> None:
    stream = sys.stderr
    if stream.isatty() and "NO_COLOR" not in os.environ:
        color = "\033[32m" if ok else "\033[31m"
        message = f"{color}{message}\033[0m"
    print(message, file=stream)


def _threshold_rows(args: argparse.Namespace, proc: EntanglingProcedure) -> list[tuple]:
    template = analytic.ArchitectureParams(1.0, args.alpha, args.tau, args.dim)
    variants = ("general", "printed") if args.variant == "both" else (args.variant,)
    rows = []
    for variant in variants:
        for r in analytic.sweep_curve(template, proc, args.p_min, args.p_max, args.p_steps, "t2", variant):
            if r.flagged:
                rows.append((r.p, math.nan, math.nan, math.nan, math.nan, "unsupported"))
            else:
                b = r.breakdown
                rows.append((r.p, b.t2, b.tau, b.mean_buffer, b.minicluster, variant))
    return rows


def run_threshold(args: argparse.Namespace) -> int:
    proc = resolve_procedure(args)
    rows = _threshold_rows(args, proc)
    if args.format == "csv":
        text = report.csv_text(THRESHOLD_HEADER, rows)
    else:
        text = report.json_text({
            "procedure": asdict(proc),
            "alpha": args.alpha,
            "dimension": args.dim,
            "rows": [dict(zip(THRESHOLD_HEADER, r)) for r in rows],
        })
    dest = _emit(text, args.out)
    if args.plot:
        curves: dict[str, tuple[list, list]] = {}
        for r in rows:
            if r[5] != "unsupported":
                xs, ys = curves.setdefault(f"{proc.name} ({r[5]})", ([], []))
                xs.append(r[0])
                ys.append(r[1])
        report.plot_curves(curves, args.plot, ylabel="$T_2/\\Delta t$",
                           title=f"{args.dim}D, $\\alpha$={args.alpha:g}", shade_below=True)
    flagged = sum(r[5] == "unsupported" for r in rows)
    _summary(f"threshold: {len(rows)} rows ({flagged} unsupported) -> {dest}", ok=flagged == 0)
    return EXIT_OK


def run_bitflip(args: argparse.Namespace) -> int:
    rows = []
    for alpha in args.alpha:
        template = analytic.ArchitectureParams(1.0, alpha)
        for r in analytic.sweep_curve(template, None, args.p_min, args.p_max, args.p_steps,
                                      "bitflip_not_error"):
            if r.flagged:
                raise ValueError(r.error)
            rows.append((alpha, r.p, r.value))
    if args.format == "csv":
        text = report.csv_text(BITFLIP_HEADER, rows)
    else:
        text = report.json_text({"rows": [dict(zip(BITFLIP_HEADER, r)) for r in rows]})
    dest = _emit(text, args.out)
    if args.plot:
        curves = {f"$\\alpha$={a:g}": ([r[1] for r in rows if r[0] == a], [r[2] for r in rows if r[0] == a])
                  for a in args.alpha}
        report.plot_curves(curves, args.plot, ylabel="$1-\\epsilon$", logy=False)
    _summary(f"bitflip: {len(rows)} rows -> {dest}")
    return EXIT_OK


def run_walk(args: argparse.Namespace) -> int:
    proc = resolve_procedure(args)
    horizon = args.horizon or walker.default_horizon(args.p, args.alpha)
    config = walker.WalkConfig(
        p=args.p, proc=proc, horizon=horizon, trials=args.trials,
        start_buffer=args.start_buffer, beta_multiplier=args.beta_multiplier,
        integer_mode=bool(args.integer_mode), seed=args.seed, alpha=args.alpha,
    )
    grid = args.beta_grid
    if args.format == "csv" and grid is None:
        grid = [0.0, 0.5, 1.0, 1.5, 2.0]
    table = walker.underflow_stats(config, grid, args.workers) if grid else []
    if args.format == "csv":
        text = report.csv_text(UNDERFLOW_HEADER, table)
        stats = None
    else:
        stats = walker.simulate_buffer(config, args.workers)
        mean, var = walker.exact_step_moments(args.p, proc)
        text = report.json_text({
            "procedure": asdict(proc),
            "p": args.p,
            "alpha": args.alpha,
            "seed": args.seed,
            "initial_buffer": config.initial_buffer,
            "stats": stats.to_dict(),
            "exact_step_mean": mean,
            "exact_step_variance": var,
            "closed_form_variance": analytic.buffer_fluctuation(args.p, proc) ** 2,
            "inverse_alpha": 1.0 / args.alpha,
            "underflow": [dict(zip(UNDERFLOW_HEADER, r)) for r in table],
        })
    dest = _emit(text, args.out)
    if args.plot and table:
        report.plot_underflow(table, args.plot, reference=1.0 / args.alpha)
    if stats is not None:
        _summary(f"walk: {stats.trials} x {stats.horizon} steps, "
                 f"{stats.underflow_trials} underflows -> {dest}")
    else:
        _summary(f"walk: {len(table)} underflow rows -> {dest}")
    return EXIT_OK


def run_reservoir(args: argparse.Namespace) -> int:
    proc = resolve_procedure(args)
    points = reservoir.scaling_points(proc, args.tau_list, args.trials, args.seed, args.cap, args.workers)
    rows = []
    for pt in points:
        if pt.estimate is None:
            rows.append((pt.tau, pt.p, math.nan, math.nan))
        else:
            rows.append((pt.tau, pt.p, pt.estimate.q, pt.estimate.yield_estimate))
    good = [(pt.tau, pt.estimate.q) for pt in points if pt.estimate is not None]
    fit = reservoir.fit_gamma(good) if len({t for t, _ in good}) >= 2 else None
    summary = {
        "procedure": asdict(proc),
        "trials": args.trials,
        "seed": args.seed,
        "gamma": fit.gamma if fit else None,
        "intercept": fit.intercept if fit else None,
        "r_squared": fit.r_squared if fit else None,
        "points": [
            {"tau": pt.tau, "p": pt.p, "q_required": pt.estimate.q if pt.estimate else None,
             "yield_estimate": pt.estimate.yield_estimate if pt.estimate else None,
             "yield_lower95": pt.estimate.yield_lower95 if pt.estimate else None,
             "error": pt.error}
            for pt in points
        ],
    }
    if args.format == "csv":
        dest = _emit(report.csv_text(RESERVOIR_HEADER, rows), args.out)
        summary_path = args.summary or (str(Path(args.out).with_suffix(".json")) if args.out else None)
        if summary_path:
            _emit(report.json_text(summary), summary_path)
    else:
        dest = _emit(report.json_text(summary), args.out)
    if args.plot and fit:
        taus, qs = zip(*good)
        report.plot_reservoir({proc.name: (taus, qs, fit.gamma, fit.intercept)}, args.plot)
    failed = [pt for pt in points if pt.error]
    gamma = f"gamma={fit.gamma:.4g} r2={fit.r_squared:.4g}" if fit else "no fit"
    _summary(f"reservoir: {len(points)} points, {gamma} -> {dest}", ok=not failed)
    for pt in failed:
        print(f"error: tau={pt.tau}: {pt.error}", file=sys.stderr)
    return EXIT_CAPACITY if failed else EXIT_OK


def run_graph(args: argparse.Namespace) -> int:
    proc = resolve_procedure(args)
    if args.action == "demo-x":
        g = graphstate.measure(graphstate.GraphState.path(args.length), args.pos, "X")
        note = f"X on vertex {args.pos} of a {args.length}-path"
    elif args.action == "vertical":
        g = graphstate.labelled_chains(2, args.length)
        a, b = graphstate.chain_vertices(g, 0), graphstate.chain_vertices(g, 1)
        pos_b = args.pos if args.pos_b is None else args.pos_b
        g = graphstate.vertical_edge_procedure(
            g, a, args.pos - 1, b, pos_b - 1, args.outcome, proc, args.cleanup
        )
        note = f"vertical edge attempt ({args.outcome}), {len(graphstate.vertical_edges(g))} vertical edges"
    else:
        result = graphstate.build_honeycomb(
            args.chains, args.length, args.p, proc, args.max_attempts, make_rng(args.seed, "honeycomb")
        )
        g = result.graph
        note = (f"honeycomb {args.chains}x{args.length}: {result.placed}/{result.targets} "
                f"vertical edges in {result.attempts} attempts")
    text = g.to_dot() if args.format == "dot" else g.to_json()
    dest = _emit(text, args.out)
    _summary(f"graph: {note} -> {dest}")
    return EXIT_OK


def run_figures(args: argparse.Namespace) -> int:
    """Write CSV data and a figure for each threshold, bit-flip and reservoir curve."""
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = args.image_format
    pair = {"double heralding": get_procedure("dh"), "broker-client": get_procedure("bc")}
    written = []
    for fig, dim in (("fig2", 1), ("fig4", 2), ("fig5", 3)):
        curves = {}
        for label, proc in pair.items():
            ns = argparse.Namespace(p_min=0.05, p_max=1.0, p_steps=args.p_steps, alpha=args.alpha,
                                    tau=None, dim=dim, variant="general")
            rows = _threshold_rows(ns, proc)
            short = "dh" if proc.c1 else "bc"
            written.append(_emit(report.csv_text(THRESHOLD_HEADER, rows), outdir / f"{fig}_{short}.csv"))
            curves[label] = ([r[0] for r in rows], [r[1] for r in rows])
        written.append(str(report.plot_curves(curves, outdir / f"{fig}.{ext}", ylabel="$T_2/\\Delta t$",
                                              title=f"{dim}D cluster, $\\alpha$={args.alpha:g}",
                                              shade_below=True)))
    rows = []
    for alpha in args.bitflip_alphas:
        for r in analytic.sweep_curve(analytic.ArchitectureParams(1.0, alpha), None, 0.01, 1.0,
                                      args.p_steps, "bitflip_not_error"):
            rows.append((alpha, r.p, r.value))
    written.append(_emit(report.csv_text(BITFLIP_HEADER, rows), outdir / "fig6_bitflip.csv"))
    curves = {f"$\\alpha$={a:g}": ([r[1] for r in rows if r[0] == a], [r[2] for r in rows if r[0] == a])
              for a in args.bitflip_alphas}
    written.append(str(report.plot_curves(curves, outdir / f"fig6.{ext}", ylabel="$1-\\epsilon$", logy=False)))

    status = EXIT_OK
    if not args.skip_reservoir:
        series = {}
        for label, proc in pair.items():
            points = reservoir.scaling_points(proc, args.tau_list, args.trials, args.seed,
                                              args.cap, args.workers)
            short = "dh" if proc.c1 else "bc"
            rows = [(pt.tau, pt.p, pt.estimate.q if pt.estimate else math.nan,
                     pt.estimate.yield_estimate if pt.estimate else math.nan) for pt in points]
            written.append(_emit(report.csv_text(RESERVOIR_HEADER, rows), outdir / f"fig7_{short}.csv"))
            good = [(pt.tau, pt.estimate.q) for pt in points if pt.estimate]
            for pt in points:
                if pt.error:
                    status = EXIT_CAPACITY
                    print(f"error: {label} tau={pt.tau}: {pt.error}", file=sys.stderr)
            if len(good) >= 2:
                fit = reservoir.fit_gamma(good)
                taus, qs = zip(*good)
                series[label] = (taus, qs, fit.gamma, fit.intercept)
        if series:
            written.append(str(report.plot_reservoir(series, outdir / f"fig7.{ext}")))
    _summary(f"figures: {len(written)} files -> {outdir}", ok=status == EXIT_OK)
    return status


RUNNERS = {
    "threshold": run_threshold,
    "bitflip": run_bitflip,
    "walk": run_walk,
    "reservoir": run_reservoir,
    "graph": run_graph,
    "figures": run_figures,
}


def parse_and_run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config:
            sub = _subparser(parser, args.command)
            _apply_config(sub, load_config(args.config))
            try:
                args = parser.parse_args(argv)
            except SystemExit as exc:
                return int(exc.code or 0)
        if args.workers < 1:
            raise ConfigError("invalid configuration: key 'workers' must be at least 1")
        return RUNNERS[args.command](args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(parse_and_run())


if __name__ == "__main__":
    main()
