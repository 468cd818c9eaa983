"""Command-line front end.

Exit codes: 0 success, 1 semantic violation, 2 usage or I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .classify import (
    RECURRENCE,
    WITNESS_CHECKS,
    check_green_criterion,
    check_uniqueness_witness,
    classify_recurrence,
    classify_stochastic_completeness,
)
from .graph import (
    GraphError,
    GraphOracle,
    OracleError,
    ResourceError,
    VertexFunction,
    WeightedGraph,
    ball,
    generate_from_spec,
    oracle_from_graph,
)
from .io import GraphFormatError, GraphSemanticError, dumps_graph, fmt_float, load_graph, read_function
from .linsolve import NumericalError, SingularSystemError
from .operator import InteriorityError, green_defect
from .potential import ConsistencyError, ConvergenceError, equilibrium_on_ball, resolvent_limit

EXIT_OK, EXIT_SEMANTIC, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_RADII = "1,2,4,8,16"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    graph_source: str
    origin: object
    radii: list[int] = field(default_factory=list)
    radius: int | None = None
    alpha: float = 1.0
    tol: float = 1e-6
    max_iter: int | None = None
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError(f"--tol must be positive, got {self.tol}")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise UsageError(f"--radii must be strictly increasing, got {self.radii}")
        if not self.alpha > 0:
            raise UsageError(f"--alpha must be positive, got {self.alpha}")


@dataclass
class Report:
    """Ordered output: leading metadata, tables, trailing metadata."""

    meta: list[tuple[str, str]] = field(default_factory=list)
    blocks: list[tuple[tuple[str, ...] | None, list[tuple]]] = field(default_factory=list)
    trailer: list[tuple[str, str]] = field(default_factory=list)

    def table(self, header: tuple[str, ...] | None, rows: list[tuple]):
        self.blocks.append((header, rows))


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def render(report: Report, fmt: str) -> str:
    lines = []
    if fmt == "csv":
        lines += [f"# {k}={v}" for k, v in report.meta]
        for header, rows in report.blocks:
            if header:
                lines.append(",".join(header))
            lines += [",".join(_cell(c) for c in row) for row in rows]
        lines += [f"# {k}={v}" for k, v in report.trailer]
    else:
        lines += [f"{k}: {v}" for k, v in report.meta]
        for header, rows in report.blocks:
            lines.append("")
            if header:
                lines.append("  ".join(f"{h:>24}" for h in header))
            lines += ["  ".join(f"{_cell(c):>24}" for c in row) for row in rows]
        if report.trailer:
            lines.append("")
        lines += [f"{k}: {v}" for k, v in report.trailer]
    return "\n".join(lines) + "\n"


def _parse_radii(text: str | None) -> list[int]:
    if text is None:
        return []
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError("--radii needs at least one radius")
    try:
        radii = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"--radii must be comma-separated integers, got {text!r}") from None
    return radii


def _source(args) -> tuple[GraphOracle, str]:
    if bool(args.gen) == bool(args.graph):
        raise UsageError("give exactly one of --gen or --graph")
    if args.gen:
        return generate_from_spec(args.gen), args.gen
    g, problems = load_graph(args.graph)
    if problems:
        raise GraphSemanticError(problems)
    return oracle_from_graph(g, params={"path": args.graph}), Path(args.graph).name


def _origin(oracle: GraphOracle, text: str | None):
    if text is None:
        if oracle.default_origin is None:
            raise UsageError("--origin is required for this graph")
        return oracle.default_origin
    return oracle.parse_vertex(text)


def _config(args, command: str, needs_radii: bool = False) -> tuple[GraphOracle, RunConfig]:
    oracle, name = _source(args)
    radii = _parse_radii(getattr(args, "radii", None))
    if needs_radii and not radii:
        raise UsageError("--radii needs at least one radius")
    cfg = RunConfig(
        command=command,
        graph_source=name,
        origin=_origin(oracle, args.origin),
        radii=radii,
        radius=getattr(args, "radius", None),
        alpha=getattr(args, "alpha", 1.0),
        tol=getattr(args, "tol", 1e-6),
        max_iter=getattr(args, "max_iter", None),
        output=args.out,
        format=args.format,
    )
    return oracle, cfg


def _header(cfg: RunConfig, oracle: GraphOracle, **extra) -> list[tuple[str, str]]:
    meta = [
        ("tool", f"dirichlet-graph {__version__}"),
        ("command", cfg.command),
        ("graph", cfg.graph_source),
        ("origin", oracle.format_vertex(cfg.origin)),
    ]
    meta += [(k, _cell(v)) for k, v in extra.items()]
    return meta


def _realization(args, oracle: GraphOracle, cfg: RunConfig) -> WeightedGraph:
    """Finite graph for commands that evaluate functions: the file itself, or a ball of a family."""
    if args.graph:
        if cfg.radius is None:
            g, _ = load_graph(args.graph)
            return g
    if cfg.radius is None:
        raise UsageError("--radius is required with --gen")
    return ball(oracle, cfg.origin, cfg.radius).realization


def cmd_validate(args) -> tuple[Report, int]:
    g, problems = load_graph(args.graph)
    rep = Report(meta=[("tool", f"dirichlet-graph {__version__}"), ("command", "validate"), ("graph", Path(args.graph).name)])
    rep.table(None, [(f"violation: {p}",) for p in problems])
    rep.trailer = [("vertices", str(len(g))), ("violations", str(len(problems)))]
    return rep, EXIT_SEMANTIC if problems else EXIT_OK


def cmd_classify(args) -> tuple[Report, int]:
    oracle, cfg = _config(args, "classify", needs_radii=True)
    kw = {"max_iter": cfg.max_iter}
    if args.question == RECURRENCE:
        report = classify_recurrence(oracle, cfg.origin, cfg.radii, cfg.tol, **kw)
        rep = Report(meta=_header(cfg, oracle, question=args.question, tol=cfg.tol))
        rep.table(("radius", "capacity"), list(zip(report.evidence.radii, report.evidence.values)))
    else:
        report = classify_stochastic_completeness(oracle, cfg.origin, cfg.alpha, cfg.radii, cfg.tol, **kw)
        rep = Report(meta=_header(cfg, oracle, question=args.question, alpha=cfg.alpha, tol=cfg.tol))
        rep.table(("radius", "deficiency"), list(zip(report.evidence.radii, report.values)))
    rep.trailer = [
        ("connected", str(report.connected).lower()),
        ("stabilized", str(report.evidence.stabilized).lower()),
        ("positive_below", _cell(report.thresholds["positive_below"])),
        ("negative_above", _cell(report.thresholds["negative_above"])),
        ("verdict", report.verdict),
    ]
    return rep, EXIT_OK


def cmd_capacity(args) -> tuple[Report, int]:
    oracle, cfg = _config(args, "capacity")
    if cfg.radius is None or cfg.radius < 1:
        raise UsageError("--radius must be given and >= 1")
    eq = equilibrium_on_ball(ball(oracle, cfg.origin, cfg.radius), max_iter=cfg.max_iter)
    rep = Report(meta=_header(cfg, oracle, radius=cfg.radius))
    rep.table(None, [("capacity", eq.capacity), ("flux_capacity", eq.flux_capacity), ("interior_size", len(eq.domain))])
    rep.table(("vertex", "potential"), [(oracle.format_vertex(x), v) for x, v in eq.potential.items()])
    return rep, EXIT_OK


def _function(args, which: str, oracle: GraphOracle) -> VertexFunction | None:
    path = getattr(args, which)
    if path is None:
        return None
    return read_function(path, parse_id=oracle.parse_vertex)


def cmd_resolvent(args) -> tuple[Report, int]:
    oracle, cfg = _config(args, "resolvent", needs_radii=True)
    f = _function(args, "u", oracle) or VertexFunction.indicator(cfg.origin)
    trace = resolvent_limit(oracle, cfg.origin, cfg.alpha, f, cfg.radii, max_iter=cfg.max_iter)
    rep = Report(meta=_header(cfg, oracle, alpha=cfg.alpha))
    rep.table(("radius", "value_at_origin"), [(r, t[0]) for r, t in zip(trace.radii, trace.traces)])
    rep.table(("vertex", "solution"), [(oracle.format_vertex(x), v) for x, v in trace.solution.items()])
    return rep, EXIT_OK


def cmd_green(args) -> tuple[Report, int]:
    oracle, cfg = _config(args, "green")
    g = _realization(args, oracle, cfg)
    u = _function(args, "u", oracle)
    if u is None:
        raise UsageError("--u is required")
    total, check = check_green_criterion(g, u, args.question)
    rep = Report(meta=_header(cfg, oracle, question=check.mode))
    rows = [("boundary_sum", total), ("l1_u", check.l1_u), ("l1_laplacian", check.l1_laplacian), ("truncated", check.truncated)]
    v = _function(args, "v", oracle)
    if v is not None:
        rows.append(("green_defect", green_defect(g, u, v)))
    rep.table(None, rows)
    rep.table(("vertex", "laplacian_times_measure"), [(oracle.format_vertex(x), c) for x, c in check.contributions.items()])
    rep.trailer = [("condition_A", str(check.condition_a).lower())] + [("note", n) for n in check.notes]
    return rep, EXIT_OK


def cmd_witness(args) -> tuple[Report, int]:
    oracle, cfg = _config(args, "witness")
    g = _realization(args, oracle, cfg)
    u = _function(args, "u", oracle)
    if u is None:
        raise UsageError("--u is required")
    wr = check_uniqueness_witness(g, u)
    rep = Report(meta=_header(cfg, oracle))
    rep.table(("check", "passed"), [(k, wr.checks[k]) for k in WITNESS_CHECKS])
    rep.table(None, [("boundary_sum", wr.boundary_sum_value), ("refuted", wr.refuted)])
    rep.trailer = [("note", n) for n in wr.notes]
    return rep, EXIT_OK


def cmd_gen(args) -> str:
    oracle = generate_from_spec(args.family)
    origin = _origin(oracle, args.origin)
    b = ball(oracle, origin, args.radius)
    header = [
        f"dirichlet-graph {__version__}",
        f"family={args.family} origin={oracle.format_vertex(origin)} radius={args.radius}",
        f"condition_A={str(oracle.condition_a).lower()}",
    ]
    return dumps_graph(b.realization, header=header, fmt_id=oracle.format_vertex)


def _common(p: argparse.ArgumentParser, *, source=True):
    if source:
        p.add_argument("--gen", help="generator spec, e.g. lattice:2, tree:2, path_chain:beta=2,mu=1")
        p.add_argument("--graph", help="graph file")
        p.add_argument("--origin", help="origin vertex (default: the family's root)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "text"), default="csv")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dirichlet-graph", description="Potential theory on weighted graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a graph file")
    p.add_argument("graph")
    _common(p, source=False)

    p = sub.add_parser("classify", help="recurrence or stochastic completeness verdict")
    _common(p)
    p.add_argument("--question", choices=("recurrence", "sc"), default="recurrence")
    p.add_argument("--radii", default=DEFAULT_RADII)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("capacity", help="equilibrium potential and capacity on one ball")
    _common(p)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("resolvent", help="restricted resolvents along the ball exhaustion")
    _common(p)
    p.add_argument("--radii", default=DEFAULT_RADII)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--u", help="right-hand side function file (default: indicator of the origin)")
    p.add_argument("--max-iter", type=int, default=None)

    for name, text in (("green", "Green-formula boundary sum"), ("witness", "uniqueness-witness checks")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--u", help="function file")
        p.add_argument("--radius", type=int, default=None, help="ball radius when using --gen")
        if name == "green":
            p.add_argument("--v", help="second function for the Green defect")
            p.add_argument("--question", choices=("recurrence", "sc"), default="recurrence")

    p = sub.add_parser("gen", help="write a ball of a graph family as a graph file")
    p.add_argument("family")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--origin")
    p.add_argument("--out")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "capacity": cmd_capacity,
    "resolvent": cmd_resolvent,
    "green": cmd_green,
    "witness": cmd_witness,
}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "gen":
            _emit(cmd_gen(args), args.out)
            return EXIT_OK
        report, code = COMMANDS[args.command](args)
        _emit(render(report, args.format), args.out)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GraphSemanticError as exc:
        for v in exc.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_SEMANTIC
    except (ConvergenceError, NumericalError, SingularSystemError, ConsistencyError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OracleError, InteriorityError, ResourceError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
