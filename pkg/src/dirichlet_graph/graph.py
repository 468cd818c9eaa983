"""Weighted graphs, lazy graph families and finite ball realizations."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

Vertex = Hashable

# Hard cap on the length of a single neighbor list returned by an oracle.
MAX_NEIGHBORS = 1_000_000


class GraphError(ValueError):
    """Raised for malformed graph data."""


class OracleError(GraphError):
    """Raised when an oracle breaks its contract (asymmetry, self-loops, bad weights)."""


class ResourceError(RuntimeError):
    """Raised when an oracle hands back an unboundedly long neighbor list."""

    def __init__(self, vertex, limit):
        super().__init__(f"neighbor list of vertex {vertex!r} exceeds {limit} entries")
        self.vertex = vertex
        self.limit = limit


def vertex_key(v):
    """Sort key giving a canonical total order on mixed vertex identifiers."""
    if isinstance(v, bool):
        return (3, str(v))
    if isinstance(v, int):
        return (0, v)
    if isinstance(v, tuple):
        if all(type(x) is int for x in v):
            return (1, len(v), 0, v)
        return (1, len(v), 1, tuple(vertex_key(x) for x in v))
    return (2, str(v))


def format_vertex(v) -> str:
    """Canonical text form: ints as-is, tuples as ``(i,j)``, strings unchanged."""
    if isinstance(v, tuple):
        return "(" + ",".join(format_vertex(x) for x in v) + ")"
    return str(v)


def parse_vertex(text: str):
    """Inverse of :func:`format_vertex` for integers, integer tuples and plain strings."""
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        inner = text[1:-1].strip()
        if not inner:
            return ()
        return tuple(parse_vertex(p) for p in inner.split(","))
    try:
        return int(text)
    except ValueError:
        return text


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite realization of a weighted graph ``(b, c)`` over a measure ``m``.

    ``b`` is stored as an adjacency map ``b[x][y]``.  It is not forced to be
    symmetric here so that :func:`validate` can report violations as data.
    ``external`` holds, per vertex, the total weight of edges leading to
    vertices that are not part of this realization; ``deg`` includes it.
    """

    vertices: tuple
    b: Mapping[Vertex, Mapping[Vertex, float]]
    c: Mapping[Vertex, float]
    m: Mapping[Vertex, float]
    external: Mapping[Vertex, float] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[Vertex, Vertex, float]],
        *,
        vertices: Iterable[Vertex] = (),
        c: Mapping[Vertex, float] | None = None,
        m: Mapping[Vertex, float] | None = None,
        external: Mapping[Vertex, float] | None = None,
        metadata: Mapping[str, Any] | None = None,
    ) -> "WeightedGraph":
        """Build a symmetric graph from undirected edges; missing ``m`` is 1, missing ``c`` is 0."""
        adj: dict[Vertex, dict[Vertex, float]] = {}
        verts = set(vertices)
        for x, y, w in edges:
            adj.setdefault(x, {})[y] = float(w)
            adj.setdefault(y, {})[x] = float(w)
            verts.update((x, y))
        c = dict(c or {})
        m = dict(m or {})
        verts.update(c, m)
        ordered = tuple(sorted(verts, key=vertex_key))
        return cls(
            vertices=ordered,
            b={x: dict(adj.get(x, {})) for x in ordered},
            c={x: float(c.get(x, 0.0)) for x in ordered},
            m={x: float(m.get(x, 1.0)) for x in ordered},
            external={x: float(w) for x, w in (external or {}).items() if w},
            metadata=dict(metadata or {}),
        )

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, x) -> bool:
        return x in self.index

    @cached_property
    def index(self) -> dict[Vertex, int]:
        return {x: i for i, x in enumerate(self.vertices)}

    def neighbors(self, x) -> Mapping[Vertex, float]:
        return self.b.get(x, {})

    @cached_property
    def deg(self) -> dict[Vertex, float]:
        """Weighted degree including edges to unrealized vertices."""
        out = {}
        for x in self.vertices:
            row = self.b.get(x, {})
            out[x] = math.fsum(row[y] for y in sorted(row, key=vertex_key)) + self.external.get(x, 0.0)
        return out

    @cached_property
    def interior(self) -> frozenset:
        """Vertices whose complete neighborhood is realized."""
        return frozenset(x for x in self.vertices if not self.external.get(x, 0.0))

    def boundary_degree(self, x) -> float:
        return self.external.get(x, 0.0)

    def edges(self):
        """Yield each realized edge once as ``(x, y, b(x,y))`` in canonical order."""
        idx = self.index
        for x in self.vertices:
            row = self.b.get(x, {})
            for y in sorted(row, key=vertex_key):
                if y in idx and idx[y] > idx[x]:
                    yield x, y, row[y]

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Endpoint indices and weights of :meth:`edges`, in the same order."""
        idx = self.index
        ii, jj, ww = [], [], []
        for x, y, w in self.edges():
            ii.append(idx[x])
            jj.append(idx[y])
            ww.append(w)
        return np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp), np.array(ww, dtype=float)

    @cached_property
    def external_array(self) -> np.ndarray:
        return np.array([self.external.get(x, 0.0) for x in self.vertices], dtype=float)

    @cached_property
    def m_array(self) -> np.ndarray:
        return np.array([self.m[x] for x in self.vertices], dtype=float)

    @cached_property
    def c_array(self) -> np.ndarray:
        return np.array([self.c[x] for x in self.vertices], dtype=float)

    @cached_property
    def deg_array(self) -> np.ndarray:
        return np.array([self.deg[x] for x in self.vertices], dtype=float)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Sparse matrix of realized ``b`` in canonical vertex order."""
        idx = self.index
        rows, cols, vals = [], [], []
        for x in self.vertices:
            i = idx[x]
            for y, w in self.b.get(x, {}).items():
                j = idx.get(y)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(w)
        n = len(self.vertices)
        mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=float)
        mat.sort_indices()
        return mat

    def with_measure(self, m: Mapping[Vertex, float]) -> "WeightedGraph":
        return WeightedGraph(self.vertices, self.b, self.c, dict(m), self.external, self.metadata)

    def induced(self, subset: Iterable[Vertex]) -> "WeightedGraph":
        """Restrict to ``subset``; edges leaving it become external weight."""
        keep = set(subset)
        b, ext = {}, {}
        for x in self.vertices:
            if x not in keep:
                continue
            row = self.b.get(x, {})
            b[x] = {y: w for y, w in row.items() if y in keep}
            lost = math.fsum([w for y, w in row.items() if y not in keep] + [self.external.get(x, 0.0)])
            if lost > 0:
                ext[x] = lost
        verts = tuple(x for x in self.vertices if x in keep)
        return WeightedGraph(
            verts, b, {x: self.c[x] for x in verts}, {x: self.m[x] for x in verts}, ext, self.metadata
        )


@dataclass(frozen=True)
class Violation:
    rule: str
    where: tuple
    detail: str = ""

    def __str__(self) -> str:
        loc = ",".join(format_vertex(v) for v in self.where)
        msg = f"{self.rule} at ({loc})"
        return f"{msg}: {self.detail}" if self.detail else msg


def validate(g: WeightedGraph) -> list[Violation]:
    """Return every broken WeightedGraph invariant; an empty list means the graph is valid."""
    out: list[Violation] = []
    verts = set(g.vertices)
    for x in g.vertices:
        mx = g.m.get(x)
        if mx is None or not math.isfinite(mx) or mx <= 0:
            out.append(Violation("measure positivity", (x,), f"m={mx}"))
        cx = g.c.get(x, 0.0)
        if not math.isfinite(cx) or cx < 0:
            out.append(Violation("killing nonnegativity", (x,), f"c={cx}"))
        ext = g.external.get(x, 0.0)
        if not math.isfinite(ext) or ext < 0:
            out.append(Violation("boundary degree nonnegativity", (x,), f"external={ext}"))
    pairs = set()
    for x in g.vertices:
        row = g.b.get(x, {})
        for y in sorted(row, key=vertex_key):
            w = row[y]
            if y == x:
                out.append(Violation("zero diagonal", (x, x), f"b={w}"))
            elif y not in verts:
                out.append(Violation("unknown vertex", (x, y)))
            else:
                if not math.isfinite(w) or w <= 0:
                    out.append(Violation("weight positivity", (x, y), f"b={w}"))
                pairs.add((x, y) if vertex_key(x) < vertex_key(y) else (y, x))
    for x, y in sorted(pairs, key=lambda p: (vertex_key(p[0]), vertex_key(p[1]))):
        fwd, back = g.b.get(x, {}).get(y), g.b.get(y, {}).get(x)
        if fwd != back:
            out.append(Violation("symmetry", (x, y), f"b(x,y)={fwd} b(y,x)={back}"))
    return out


def is_connected(g: WeightedGraph) -> bool:
    """True iff the realized b-positive edges join every pair of vertices."""
    if len(g.vertices) <= 1:
        return True
    return len(component(g, g.vertices[0])) == len(g.vertices)


def component(g: WeightedGraph, start, within: set | frozenset | None = None) -> set:
    """Vertices reachable from ``start`` through realized edges (optionally staying inside ``within``)."""
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y, w in g.b.get(x, {}).items():
            if w > 0 and y not in seen and y in g.index and (within is None or y in within):
                seen.add(y)
                queue.append(y)
    return seen


# ---------------------------------------------------------------------------
# oracles and balls


def _zero(_x) -> float:
    return 0.0


def _one(_x) -> float:
    return 1.0


@dataclass(frozen=True)
class GraphOracle:
    """Lazy description of a (possibly infinite) graph.

    ``neighbors`` must return the complete, finite neighbor list of a vertex.
    ``external_degree`` is only nonzero for oracles backed by a truncated
    file: it carries weight toward vertices absent from the universe.
    """

    neighbors: Callable[[Vertex], Iterable[tuple[Vertex, float]]]
    measure: Callable[[Vertex], float] = _one
    killing: Callable[[Vertex], float] = _zero
    metadata: Mapping[str, Any] = field(default_factory=dict)
    contains: Callable[[Vertex], bool] | None = None
    external_degree: Callable[[Vertex], float] = _zero
    parse_vertex: Callable[[str], Vertex] = parse_vertex
    format_vertex: Callable[[Vertex], str] = format_vertex
    default_origin: Vertex | None = None

    @property
    def condition_a(self) -> bool | None:
        return self.metadata.get("condition_A")

    @property
    def finite_size(self) -> int | None:
        return self.metadata.get("size")


@dataclass(frozen=True, eq=False)
class Ball:
    oracle: GraphOracle
    origin: Vertex
    radius: int
    realization: WeightedGraph
    distance: Mapping[Vertex, int]

    @property
    def vertices(self) -> tuple:
        return self.realization.vertices

    @property
    def interior(self) -> frozenset:
        return self.realization.interior

    def sphere(self) -> list:
        return [x for x in self.realization.vertices if x not in self.realization.interior]


def _fetch(oracle: GraphOracle, x, limit: int) -> list[tuple[Vertex, float]]:
    nbrs = list(itertools.islice(oracle.neighbors(x), limit + 1))
    if len(nbrs) > limit:
        raise ResourceError(x, limit)
    return nbrs


def ball(oracle: GraphOracle, origin, radius: int, *, max_neighbors: int = MAX_NEIGHBORS) -> Ball:
    """Materialize the combinatorial ball of ``radius`` around ``origin``.

    Every realized vertex carries its true weighted degree from the oracle, so
    vertices on the outer sphere keep the weight of edges leaving the ball.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if oracle.contains is not None and not oracle.contains(origin):
        raise GraphError(f"origin {origin!r} is not a vertex of this graph")
    dist = {origin: 0}
    b: dict[Vertex, dict[Vertex, float]] = {}
    ext: dict[Vertex, float] = {}
    queue = deque([origin])
    while queue:
        # BFS order: once x is reached, every realized neighbor of x is already in dist
        # or is discovered here, so rows are built in one pass without holding the lists
        x = queue.popleft()
        inner = dist[x] < radius
        row: dict[Vertex, float] = {}
        outside: list[float] = []
        for y, w in _fetch(oracle, x, max_neighbors):
            w = float(w)
            if y == x:
                raise OracleError(f"self-loop at {x!r}")
            if not (w > 0 and math.isfinite(w)):
                raise OracleError(f"non-positive or non-finite weight {w} on ({x!r},{y!r})")
            if y in row:
                raise OracleError(f"duplicate neighbor {y!r} of {x!r}")
            if y not in dist and inner:
                dist[y] = dist[x] + 1
                queue.append(y)
            if y in dist:
                row[y] = w
            else:
                outside.append(w)
        outside.append(float(oracle.external_degree(x)))
        total = math.fsum(outside)
        if total > 0:
            ext[x] = total
        b[x] = row
    for x, row in b.items():
        for y, w in row.items():
            back = b[y].get(x)
            if back != w:
                raise OracleError(f"asymmetric oracle: b({x!r},{y!r})={w} but b({y!r},{x!r})={back}")

    verts = tuple(sorted(dist, key=vertex_key))
    m = {x: float(oracle.measure(x)) for x in verts}
    c = {x: float(oracle.killing(x)) for x in verts}
    meta = dict(oracle.metadata)
    meta.update(origin=origin, radius=radius)
    g = WeightedGraph(verts, b, c, m, ext, meta)
    return Ball(oracle, origin, radius, g, dist)


def oracle_from_graph(g: WeightedGraph, **metadata) -> GraphOracle:
    """Wrap a finite graph as an oracle; external weight is preserved."""
    meta = dict(g.metadata)
    meta.setdefault("family", "custom_file")
    meta.setdefault("size", len(g))
    # finite vertex sets with positive measure: any infinite path repeats vertices
    meta.setdefault("condition_A", True if not g.external else None)
    meta.update(metadata)
    nbr_lists = {x: [(y, g.b[x][y]) for y in sorted(g.b.get(x, {}), key=vertex_key)] for x in g.vertices}
    return GraphOracle(
        neighbors=lambda x: nbr_lists[x],
        measure=lambda x: g.m[x],
        killing=lambda x: g.c[x],
        metadata=meta,
        contains=lambda x: x in g.index,
        external_degree=lambda x: g.external.get(x, 0.0),
        default_origin=g.vertices[0] if g.vertices else None,
    )


# ---------------------------------------------------------------------------
# generators


def _as_positive_fraction(name: str, value) -> Fraction:
    try:
        q = Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise GraphError(f"{name} must be a rational number, got {value!r}") from exc
    if q <= 0:
        raise GraphError(f"{name} must be positive, got {value}")
    return q


def _lattice(d: int) -> GraphOracle:
    d = int(d)
    if d < 1:
        raise GraphError(f"lattice dimension must be >= 1, got {d}")
    if d == 1:
        def nbrs(n):
            return [(n - 1, 1.0), (n + 1, 1.0)]
        contains = lambda v: isinstance(v, int)  # noqa: E731
        origin = 0
    else:
        def nbrs(p):
            out = []
            for k in range(d):
                for s in (-1, 1):
                    q = list(p)
                    q[k] += s
                    out.append((tuple(q), 1.0))
            return out
        contains = lambda v: isinstance(v, tuple) and len(v) == d  # noqa: E731
        origin = (0,) * d
    meta = {"family": "lattice", "params": {"d": d}, "condition_A": True}
    return GraphOracle(nbrs, metadata=meta, contains=contains, default_origin=origin)


def _format_tree_vertex(v) -> str:
    return "root" + "".join(f".{i}" for i in v)


def _parse_tree_vertex(text: str):
    parts = text.strip().split(".")
    if parts[0] != "root":
        raise GraphError(f"tree vertices look like root.0.1, got {text!r}")
    return tuple(int(p) for p in parts[1:])


def _regular_tree(k: int) -> GraphOracle:
    k = int(k)
    if k < 1:
        raise GraphError(f"tree branching must be >= 1, got {k}")

    def nbrs(v):
        out = [(v[:-1], 1.0)] if v else []
        out.extend((v + (i,), 1.0) for i in range(k))
        return out

    contains = lambda v: isinstance(v, tuple) and all(isinstance(i, int) and 0 <= i < k for i in v)  # noqa: E731
    meta = {"family": "regular_tree", "params": {"k": k}, "condition_A": True}
    return GraphOracle(
        nbrs,
        metadata=meta,
        contains=contains,
        parse_vertex=_parse_tree_vertex,
        format_vertex=_format_tree_vertex,
        default_origin=(),
    )


def _path_chain(beta=1, mu=1, kappa=0, gamma=1) -> GraphOracle:
    """Half-line 0,1,2,... with b(n,n+1)=beta^n, m(n)=mu^n, c(n)=kappa*gamma^n."""
    beta_q = _as_positive_fraction("beta", beta)
    mu_q = _as_positive_fraction("mu", mu)
    gamma_q = _as_positive_fraction("gamma", gamma)
    kappa_q = Fraction(str(kappa))
    if kappa_q < 0:
        raise GraphError(f"kappa must be nonnegative, got {kappa}")
    bf, mf, kf, gf = float(beta_q), float(mu_q), float(kappa_q), float(gamma_q)

    def nbrs(n):
        out = [(n - 1, bf ** (n - 1))] if n > 0 else []
        out.append((n + 1, bf ** n))
        return out

    meta = {
        "family": "path_chain",
        "params": {"beta": str(beta_q), "mu": str(mu_q), "kappa": str(kappa_q), "gamma": str(gamma_q)},
        # the only infinite path escaping to infinity visits n, n+1, ...; sum mu^n diverges iff mu >= 1
        "condition_A": mu_q >= 1,
    }
    return GraphOracle(
        nbrs,
        measure=lambda n: mf ** n,
        killing=(lambda n: kf * gf ** n) if kf else _zero,
        metadata=meta,
        contains=lambda v: isinstance(v, int) and v >= 0,
        default_origin=0,
    )


def _star(n: int) -> GraphOracle:
    n = int(n)
    if n < 1:
        raise GraphError(f"star needs at least one leaf, got {n}")
    leaves = [(i, 1.0) for i in range(1, n + 1)]

    def nbrs(v):
        return leaves if v == 0 else [(0, 1.0)]

    meta = {"family": "star", "params": {"n": n}, "condition_A": True, "size": n + 1}
    return GraphOracle(nbrs, metadata=meta, contains=lambda v: isinstance(v, int) and 0 <= v <= n, default_origin=0)


def _complete(n: int) -> GraphOracle:
    n = int(n)
    if n < 1:
        raise GraphError(f"complete graph needs at least one vertex, got {n}")

    def nbrs(v):
        return [(u, 1.0) for u in range(n) if u != v]

    meta = {"family": "complete", "params": {"n": n}, "condition_A": True, "size": n}
    return GraphOracle(nbrs, metadata=meta, contains=lambda v: isinstance(v, int) and 0 <= v < n, default_origin=0)


def _custom_file(path) -> GraphOracle:
    from .io import read_graph

    return oracle_from_graph(read_graph(path), family="custom_file", params={"path": str(path)})


FAMILIES: dict[str, Callable[..., GraphOracle]] = {
    "lattice": _lattice,
    "regular_tree": _regular_tree,
    "path_chain": _path_chain,
    "star": _star,
    "complete": _complete,
    "custom_file": _custom_file,
}

ALIASES = {"tree": "regular_tree", "chain": "path_chain", "Z": "lattice", "file": "custom_file"}

# name of the parameter taken by a bare positional value in ``family:value``
_POSITIONAL = {"lattice": "d", "regular_tree": "k", "star": "n", "complete": "n", "custom_file": "path"}


def generate(family: str, **params) -> GraphOracle:
    """Return the oracle of a built-in graph family.

    >>> generate("lattice", d=1).neighbors(0)
    [(-1, 1.0), (1, 1.0)]
    """
    name = ALIASES.get(family, family)
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise GraphError(f"unknown graph family {family!r}; known: {', '.join(sorted(FAMILIES))}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise GraphError(f"bad parameters for {name}: {exc}") from exc


def parse_family_spec(text: str) -> tuple[str, dict[str, str]]:
    """Split ``lattice:2`` or ``path_chain:beta=2,mu=1/2`` into family name and params."""
    name, _, rest = text.partition(":")
    name = ALIASES.get(name.strip(), name.strip())
    params: dict[str, str] = {}
    if rest:
        for part in rest.split(","):
            key, eq, value = part.partition("=")
            if eq:
                params[key.strip()] = value.strip()
            elif name in _POSITIONAL and _POSITIONAL[name] not in params:
                params[_POSITIONAL[name]] = key.strip()
            else:
                raise GraphError(f"cannot parse family parameter {part!r} in {text!r}")
    return name, params


def generate_from_spec(text: str) -> GraphOracle:
    name, params = parse_family_spec(text)
    return generate(name, **params)


def lattice_ball_size(d: int, r: int) -> int:
    """Number of points of Z^d at l1-distance <= r."""
    return sum(2 ** k * math.comb(d, k) * math.comb(r, k) for k in range(min(d, r) + 1))


# ---------------------------------------------------------------------------
# finitely supported functions


class SupportError(GraphError):
    """A function's support leaves the vertex set it is evaluated on."""


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """Real function with finite support, extended by zero elsewhere."""

    values: Mapping[Vertex, float]

    def __post_init__(self):
        object.__setattr__(self, "values", {x: float(v) for x, v in self.values.items()})

    def __call__(self, x) -> float:
        return self.values.get(x, 0.0)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.support)

    @property
    def support(self) -> tuple:
        return tuple(sorted(self.values, key=vertex_key))

    def items(self):
        return [(x, self.values[x]) for x in self.support]

    @classmethod
    def indicator(cls, *vertices) -> "VertexFunction":
        return cls({x: 1.0 for x in vertices})

    @classmethod
    def constant(cls, vertices: Iterable[Vertex], value: float = 1.0) -> "VertexFunction":
        return cls({x: value for x in vertices})

    @classmethod
    def from_array(cls, g: WeightedGraph, arr: Sequence[float]) -> "VertexFunction":
        return cls(dict(zip(g.vertices, (float(a) for a in arr))))

    def check_support(self, g: WeightedGraph) -> None:
        idx = g.index
        for x in self.values:
            if x not in idx:
                raise SupportError(f"support vertex {format_vertex(x)} is not realized in the graph")

    def to_array(self, g: WeightedGraph) -> np.ndarray:
        """Values in ``g``'s canonical order; raises if the support escapes ``g``."""
        self.check_support(g)
        arr = np.zeros(len(g.vertices))
        idx = g.index
        for x, v in self.values.items():
            arr[idx[x]] = v
        return arr

    def restrict(self, vertices: Iterable[Vertex]) -> "VertexFunction":
        keep = set(vertices)
        return VertexFunction({x: v for x, v in self.values.items() if x in keep})

    def max_abs(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)
