"""Text formats for graphs and vertex functions.

Graph files are line oriented, ``#`` starts a comment::

    v <id> <m> <c>      vertex with measure m > 0 and killing c >= 0
    e <id1> <id2> <b>   undirected edge with weight b > 0
    x <id> <w>          weight w > 0 of edges leaving the file (truncated graphs)

Vertices that only occur in edge lines get m = 1, c = 0.  Function files
hold ``<id> <value>`` lines; unlisted vertices are 0.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Iterable

from .graph import (
    GraphError,
    Vertex,
    VertexFunction,
    Violation,
    WeightedGraph,
    format_vertex,
    parse_vertex,
    validate,
    vertex_key,
)


class GraphFormatError(GraphError):
    """Syntax error in a graph or function file (bad token count, non-numeric field)."""


class GraphSemanticError(GraphError):
    """The file parsed but describes an invalid graph."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def fmt_float(x: float) -> str:
    """17 significant digits, the fixed numeric format of every output file."""
    return f"{x:.17g}"


def _number(token: str, where: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise GraphFormatError(f"{where}: expected a number, got {token!r}") from None


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_graph(text: str, *, parse_id: Callable[[str], Vertex] = parse_vertex) -> tuple[WeightedGraph, list[Violation]]:
    """Parse graph text without rejecting semantic problems.

    Returns the graph as written (asymmetric duplicates are kept asymmetric)
    together with violations that only the file syntax can reveal, such as
    duplicate edge lines.  Combine with :func:`validate` for the full list.
    """
    b: dict[Vertex, dict[Vertex, float]] = {}
    m: dict[Vertex, float] = {}
    c: dict[Vertex, float] = {}
    ext: dict[Vertex, float] = {}
    order: dict[Vertex, None] = {}
    problems: list[Violation] = []
    seen_edges: set = set()

    for lineno, toks in _lines(text):
        tag, args = toks[0], toks[1:]
        where = f"line {lineno}"
        if tag == "v":
            if len(args) != 3:
                raise GraphFormatError(f"{where}: 'v' takes <id> <m> <c>")
            x = parse_id(args[0])
            if x in m:
                problems.append(Violation("duplicate vertex", (x,), where))
            m[x] = _number(args[1], where)
            c[x] = _number(args[2], where)
            order.setdefault(x)
        elif tag == "e":
            if len(args) != 3:
                raise GraphFormatError(f"{where}: 'e' takes <id1> <id2> <b>")
            x, y = parse_id(args[0]), parse_id(args[1])
            w = _number(args[2], where)
            order.setdefault(x)
            order.setdefault(y)
            if x == y:
                problems.append(Violation("self-loop", (x, y), where))
                continue
            key = (x, y) if vertex_key(x) <= vertex_key(y) else (y, x)
            if key in seen_edges:
                problems.append(Violation("duplicate edge", (x, y), where))
                # later line only overrides the direction it names, so differing weights show up as asymmetry
                b.setdefault(x, {})[y] = w
                continue
            seen_edges.add(key)
            b.setdefault(x, {})[y] = w
            b.setdefault(y, {})[x] = w
        elif tag == "x":
            if len(args) != 2:
                raise GraphFormatError(f"{where}: 'x' takes <id> <w>")
            x = parse_id(args[0])
            w = _number(args[1], where)
            if not (w > 0 and math.isfinite(w)):
                problems.append(Violation("boundary degree positivity", (x,), where))
            ext[x] = ext.get(x, 0.0) + w
            order.setdefault(x)
        else:
            raise GraphFormatError(f"{where}: unknown record type {tag!r}")

    verts = tuple(sorted(order, key=vertex_key))
    g = WeightedGraph(
        vertices=verts,
        b={x: b.get(x, {}) for x in verts},
        c={x: c.get(x, 0.0) for x in verts},
        m={x: m.get(x, 1.0) for x in verts},
        external=ext,
        # a closed finite graph satisfies (A); escaping weight means the file truncates something unknown
        metadata={"family": "custom_file", "condition_A": True if not ext else None},
    )
    return g, problems


def load_graph(path, **kw) -> tuple[WeightedGraph, list[Violation]]:
    """Read a graph file; return it with every violation (syntax-level and invariant-level)."""
    text = Path(path).read_text(encoding="utf-8")
    g, problems = parse_graph(text, **kw)
    return g, problems + validate(g)


def read_graph(path, **kw) -> WeightedGraph:
    """Read a graph file, raising :class:`GraphSemanticError` if it is not a valid graph."""
    g, problems = load_graph(path, **kw)
    if problems:
        raise GraphSemanticError(problems)
    return g


def dumps_graph(g: WeightedGraph, header: Iterable[str] = (), fmt_id: Callable[[Vertex], str] = format_vertex) -> str:
    lines = [f"# {h}" for h in header]
    for x in g.vertices:
        lines.append(f"v {fmt_id(x)} {fmt_float(g.m[x])} {fmt_float(g.c[x])}")
    for x, y, w in g.edges():
        lines.append(f"e {fmt_id(x)} {fmt_id(y)} {fmt_float(w)}")
    for x in g.vertices:
        w = g.external.get(x, 0.0)
        if w:
            lines.append(f"x {fmt_id(x)} {fmt_float(w)}")
    return "\n".join(lines) + "\n"


def write_graph(g: WeightedGraph, path, **kw) -> None:
    Path(path).write_text(dumps_graph(g, **kw), encoding="utf-8", newline="\n")


def parse_function(text: str, *, parse_id: Callable[[str], Vertex] = parse_vertex) -> VertexFunction:
    values: dict[Vertex, float] = {}
    for lineno, toks in _lines(text):
        if len(toks) != 2:
            raise GraphFormatError(f"line {lineno}: expected '<id> <value>'")
        x = parse_id(toks[0])
        if x in values:
            raise GraphFormatError(f"line {lineno}: vertex {toks[0]} listed twice")
        values[x] = _number(toks[1], f"line {lineno}")
    return VertexFunction(values)


def read_function(path, **kw) -> VertexFunction:
    return parse_function(Path(path).read_text(encoding="utf-8"), **kw)


def dumps_function(u: VertexFunction, fmt_id: Callable[[Vertex], str] = format_vertex) -> str:
    return "".join(f"{fmt_id(x)} {fmt_float(v)}\n" for x, v in u.items())


def write_function(u: VertexFunction, path, **kw) -> None:
    Path(path).write_text(dumps_function(u, **kw), encoding="utf-8", newline="\n")
