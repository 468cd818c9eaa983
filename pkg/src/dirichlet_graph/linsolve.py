"""Restricted Dirichlet systems and their conjugate-gradient solution.

A system on a finite set ``G`` reads, for ``x`` in ``G``::

    ((deg(x) + c(x)) / m(x) + alpha) u(x) - (1/m(x)) sum_{y in G} b(x,y) u(y) = f(x)

with ``u = 0`` off ``G``.  Multiplying row ``x`` by ``m(x)`` gives a symmetric
matrix ``A``; the operator ``K = M^{-1} A`` is self-adjoint in the
``m``-weighted inner product, which is the one CG runs in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .graph import GraphError, Vertex, VertexFunction, WeightedGraph, component, format_vertex, vertex_key

DEFAULT_TOL = 1e-10


class NumericalError(ArithmeticError):
    """NaN or infinity met while solving."""


class SingularSystemError(GraphError):
    """A constrained system with alpha = 0 has a component with no Dirichlet condition."""


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    graph: WeightedGraph
    domain: frozenset
    alpha: float
    rhs: VertexFunction

    def __post_init__(self):
        object.__setattr__(self, "domain", frozenset(self.domain))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.domain:
            raise ValueError("domain must be nonempty")
        missing = [x for x in self.domain if x not in self.graph.index]
        if missing:
            raise GraphError(f"domain vertex {format_vertex(missing[0])} is not in the graph")
        outside = [x for x, v in self.rhs.items() if v != 0.0 and x not in self.domain]
        if outside:
            raise GraphError(f"rhs is nonzero at {format_vertex(outside[0])}, outside the domain")


@dataclass(frozen=True, eq=False)
class System:
    """Symmetric system ``A u = M f`` over ``vertices`` (canonical order)."""

    vertices: tuple
    matrix: sparse.csr_matrix
    measure: np.ndarray
    rhs: np.ndarray

    def operator_matrix(self) -> sparse.csr_matrix:
        """``M^{-1} A``, the row form ``(L_G + alpha)``."""
        return sparse.diags(1.0 / self.measure) @ self.matrix

    def residual(self, u: np.ndarray) -> np.ndarray:
        return (self.matrix @ u) / self.measure - self.rhs

    def norm(self, v: np.ndarray) -> float:
        return math.sqrt(float(np.dot(self.measure * v, v)))


@dataclass(frozen=True, eq=False)
class SolveResult:
    solution: VertexFunction
    iterations: int
    residual_norm: float
    converged: bool


def _block(g: WeightedGraph, verts: list, alpha: float) -> sparse.csr_matrix:
    idx = np.array([g.index[x] for x in verts], dtype=np.intp)
    sub = g.adjacency[idx][:, idx]
    diag = g.deg_array[idx] + g.c_array[idx] + alpha * g.m_array[idx]
    mat = (sparse.diags(diag) - sub).tocsr()
    mat.sort_indices()
    return mat


def _ordered(g: WeightedGraph, vertices: Iterable[Vertex]) -> list:
    return sorted(vertices, key=g.index.__getitem__)


def assemble(p: DirichletProblem) -> System:
    verts = _ordered(p.graph, p.domain)
    g = p.graph
    m = np.array([g.m[x] for x in verts])
    f = np.array([p.rhs(x) for x in verts])
    return System(tuple(verts), _block(g, verts, p.alpha), m, f)


def pcg(system: System, tol: float = DEFAULT_TOL, max_iter: int | None = None, x0: np.ndarray | None = None):
    """Jacobi-preconditioned CG for ``K u = f`` in the ``m``-inner product.

    Returns ``(u, iterations, residual_norm, converged)`` where the residual
    norm is recomputed from the final iterate.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    n = len(system.vertices)
    if max_iter is None:
        max_iter = 20 * max(n, 1)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    A, m, f = system.matrix, system.measure, system.rhs
    if not (np.all(np.isfinite(A.data)) and np.all(np.isfinite(f)) and np.all(np.isfinite(m))):
        raise NumericalError("non-finite entries in the assembled system")
    if n == 0:
        return np.zeros(0), 0, 0.0, True

    target = tol * max(1.0, system.norm(f))
    precond = m / A.diagonal()
    u = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = f - (A @ u) / m
    res = system.norm(r)
    it = 0
    while res > target and it < max_iter:
        z = precond * r
        p = z.copy()
        rz = float(np.dot(m * r, z))
        while it < max_iter:
            Ap = A @ p
            pAp = float(np.dot(p, Ap))
            if not math.isfinite(pAp) or not math.isfinite(rz):
                raise NumericalError(f"non-finite value in CG at iteration {it}")
            if pAp <= 0:
                break
            step = rz / pAp
            u += step * p
            r -= step * (Ap / m)
            it += 1
            if system.norm(r) <= target:
                break
            z = precond * r
            rz_new = float(np.dot(m * r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
        if not np.all(np.isfinite(u)):
            raise NumericalError(f"non-finite iterate in CG at iteration {it}")
        # restart from the true residual so the reported norm is honest
        r = f - (A @ u) / m
        res = system.norm(r)
        if pAp <= 0:
            break
    return u, it, res, res <= target


def solve(p: DirichletProblem, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> SolveResult:
    """Approximate ``(L_G + alpha)^{-1} f``; non-convergence is reported, not raised."""
    system = assemble(p)
    u, it, res, ok = pcg(system, tol, max_iter)
    return SolveResult(VertexFunction(dict(zip(system.vertices, u.tolist()))), it, res, ok)


def _floating_component(g: WeightedGraph, unknowns: set, pinned: Mapping) -> set | None:
    seen: set = set()
    for start in _ordered(g, unknowns):
        if start in seen:
            continue
        comp = component(g, start, within=unknowns)
        seen |= comp
        grounded = False
        for x in comp:
            if g.c[x] > 0 or g.external.get(x, 0.0) > 0:
                grounded = True
                break
            if any(y not in unknowns for y in g.neighbors(x)):
                # neighbor is pinned or held at zero outside the domain
                grounded = True
                break
        if not grounded:
            return comp
    return None


def solve_constrained(
    g: WeightedGraph,
    domain: Iterable[Vertex],
    pinned: Mapping[Vertex, float],
    alpha: float = 0.0,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> SolveResult:
    """Extend ``pinned`` values into ``domain`` so that ``(L + alpha) u = 0`` there.

    ``u`` is zero outside ``domain`` and the pinned set.  With ``alpha = 0``
    every component of the unknowns must touch a pinned vertex, a vertex held
    at zero, or carry killing; otherwise :class:`SingularSystemError`.  The
    measure drops out when ``alpha = 0`` and the residual is then the plain
    Euclidean one.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    for x in pinned:
        if x not in g.index:
            raise GraphError(f"pinned vertex {format_vertex(x)} is not in the graph")
    domain = set(domain)
    for x in domain:
        if x not in g.index:
            raise GraphError(f"domain vertex {format_vertex(x)} is not in the graph")
    unknowns = domain - set(pinned)
    if alpha == 0 and unknowns:
        floating = _floating_component(g, unknowns, pinned)
        if floating is not None:
            first = min(floating, key=vertex_key)
            raise SingularSystemError(
                f"alpha = 0 and the component of {format_vertex(first)} ({len(floating)} vertices) "
                "touches no Dirichlet condition"
            )
    verts = _ordered(g, unknowns)
    flux = np.array(
        [math.fsum(w * pinned[y] for y, w in sorted(g.neighbors(x).items(), key=lambda t: vertex_key(t[0])) if y in pinned) for x in verts]
    )
    if alpha == 0:
        # m cancels from A u = flux; the unweighted inner product keeps wildly varying measures out of the solve
        system = System(tuple(verts), _block(g, verts, 0.0), np.ones(len(verts)), flux)
    else:
        m = np.array([g.m[x] for x in verts])
        system = System(tuple(verts), _block(g, verts, alpha), m, flux / m if verts else flux)
    u, it, res, ok = pcg(system, tol, max_iter)
    values = {x: float(v) for x, v in pinned.items()}
    values.update(zip(verts, u.tolist()))
    return SolveResult(VertexFunction(values), it, res, ok)
