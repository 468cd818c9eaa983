"""Equilibrium potentials, capacities and restricted resolvents along ball exhaustions.

The exhaustion used throughout is ``Omega_n`` = interior of ``ball(o, n)``:
the vertices whose whole neighborhood lies in the ball.  Vertices on the
outer sphere of the ball are realized only to carry the zero condition.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

from .graph import Ball, GraphOracle, Vertex, VertexFunction, ball, format_vertex, is_connected
from .linsolve import DEFAULT_TOL, DirichletProblem, SolveResult, solve, solve_constrained
from .operator import energy, formal_laplacian

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "DIRICHLET_GRAPH_THREADS"
# capacities are read off at 1e-8 relative accuracy, so their solves run tighter
SOLVER_TOL = 1e-12
RESOLVENT_TOL = DEFAULT_TOL
# allowed disagreement between the energy and the flux evaluation of a capacity
CAPACITY_AGREEMENT = 1e-6


class ConvergenceError(RuntimeError):
    """The linear solver stopped before reaching its tolerance."""

    def __init__(self, what: str, result: SolveResult):
        super().__init__(
            f"{what}: solver did not converge in {result.iterations} iterations "
            f"(residual {result.residual_norm:.3e})"
        )
        self.result = result


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree, or a monotone sequence is not monotone."""


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn: Callable[[T], R], items: Sequence[T], threads: int | None) -> list[R]:
    n = thread_count(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _check_radii(radii: Sequence[int], minimum: int) -> list[int]:
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("radii must be nonempty")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly increasing, got {radii}")
    if radii[0] < minimum:
        raise ValueError(f"radii must be >= {minimum}, got {radii}")
    return radii


def is_stabilized(values: Sequence[float], tol: float) -> bool:
    """Two-radius window: positive limit if the last step is below ``tol`` relative, zero limit if below ``tol``."""
    if not values:
        return False
    last = values[-1]
    if abs(last) < tol:
        return True
    if len(values) < 2:
        return False
    return abs(last - values[-2]) < tol * max(1.0, abs(last)) and last > 10 * tol


@dataclass(frozen=True, eq=False)
class Equilibrium:
    ball: Ball
    potential: VertexFunction
    capacity: float
    flux_capacity: float
    result: SolveResult

    @property
    def domain(self) -> frozenset:
        return self.ball.interior


def equilibrium_on_ball(
    b: Ball, *, tol: float = SOLVER_TOL, max_iter: int | None = None, agreement: float = CAPACITY_AGREEMENT
) -> Equilibrium:
    """Equilibrium potential of ``b.origin`` relative to the interior of ``b``."""
    g, o = b.realization, b.origin
    if o not in g.interior:
        raise ValueError(f"origin {format_vertex(o)} is not an interior vertex of the ball")
    res = solve_constrained(g, g.interior, {o: 1.0}, alpha=0.0, tol=tol, max_iter=max_iter)
    if not res.converged:
        raise ConvergenceError(f"equilibrium potential at radius {b.radius}", res)
    e = res.solution
    cap = energy(g, e).total
    flux = formal_laplacian(g, e)(o) * g.m[o]
    scale = max(abs(cap), abs(flux))
    if abs(cap - flux) > agreement * scale + 10 * tol * (g.deg[o] + g.c[o]):
        raise ConsistencyError(
            f"capacity at radius {b.radius}: energy {cap!r} and flux {flux!r} disagree"
        )
    return Equilibrium(b, e, cap, flux, res)


def equilibrium_potential(
    oracle: GraphOracle, o: Vertex, radius: int, *, tol: float = SOLVER_TOL, max_iter: int | None = None
) -> tuple[VertexFunction, float]:
    """Equilibrium potential ``e_n`` and capacity ``cap(o, Omega_n)`` for ``Omega_n`` the interior of ``ball(o, radius)``.

    ``e_n`` is 1 at ``o``, harmonic on the rest of ``Omega_n`` and 0 outside.
    The capacity is its energy, cross-checked against the flux ``(L e_n)(o) m(o)``.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    eq = equilibrium_on_ball(ball(oracle, o, radius), tol=tol, max_iter=max_iter)
    return eq.potential, eq.capacity


@dataclass
class CapacitySequence:
    origin: Vertex
    radii: list[int]
    values: list[float]
    potentials: list[VertexFunction] | None
    limit_estimate: float
    stabilized: bool
    flux_values: list[float] = field(default_factory=list)
    min_laplacian: list[float] = field(default_factory=list)
    ball_sizes: list[int] = field(default_factory=list)
    connected: bool = True


def capacity_sequence(
    oracle: GraphOracle,
    o: Vertex,
    radii: Iterable[int],
    tol: float = 1e-6,
    *,
    solver_tol: float = SOLVER_TOL,
    max_iter: int | None = None,
    keep_potentials: bool = False,
    threads: int | None = None,
) -> CapacitySequence:
    """Capacities ``cap(o, Omega_n)`` along the given radii.

    ``tol`` drives the stabilization flag only; linear solves use ``solver_tol``.
    """
    radii = _check_radii(list(radii), 1)

    def run(r: int):
        eq = equilibrium_on_ball(ball(oracle, o, r), tol=solver_tol, max_iter=max_iter)
        g = eq.ball.realization
        lap = formal_laplacian(g, eq.potential)
        low = min(lap(x) for x in g.interior)
        pot = eq.potential if keep_potentials else None
        return eq.capacity, eq.flux_capacity, low, len(g), pot, is_connected(g)

    rows = _map(run, radii, threads)
    values = [r[0] for r in rows]
    for k in range(1, len(values)):
        if values[k] > values[k - 1] + 2 * solver_tol * max(1.0, values[k - 1]):
            raise ConsistencyError(
                f"capacity increased from {values[k - 1]!r} (radius {radii[k - 1]}) to {values[k]!r} (radius {radii[k]})"
            )
    return CapacitySequence(
        origin=o,
        radii=radii,
        values=values,
        potentials=[r[4] for r in rows] if keep_potentials else None,
        limit_estimate=values[-1],
        stabilized=is_stabilized(values, tol),
        flux_values=[r[1] for r in rows],
        min_laplacian=[r[2] for r in rows],
        ball_sizes=[r[3] for r in rows],
        connected=rows[-1][5],
    )


def _resolvent_on_ball(b: Ball, alpha: float, f: VertexFunction, tol: float, max_iter: int | None) -> SolveResult:
    g = b.realization
    rhs = VertexFunction({x: v for x, v in f.items() if v != 0.0})
    prob = DirichletProblem(g, frozenset(g.vertices), alpha, rhs)
    res = solve(prob, tol=tol, max_iter=max_iter)
    if not res.converged:
        raise ConvergenceError(f"resolvent at radius {b.radius}", res)
    return res


@dataclass
class ResolventTrace:
    alpha: float
    radii: list[int]
    probes: list[Vertex]
    traces: list[list[float]]
    solution: VertexFunction
    solutions: list[VertexFunction] | None = None


def resolvent_limit(
    oracle: GraphOracle,
    o: Vertex,
    alpha: float,
    f: VertexFunction,
    radii: Iterable[int],
    tol: float = RESOLVENT_TOL,
    *,
    probes: Sequence[Vertex] | None = None,
    max_iter: int | None = None,
    keep_solutions: bool = False,
    threads: int | None = None,
) -> ResolventTrace:
    """Solutions of ``(L_{G_n} + alpha) u_n = f`` on the balls ``G_n = ball(o, n)``.

    For ``f >= 0`` the solutions increase with ``n``; a decrease beyond
    ``2 tol`` (scaled by ``max f / alpha``) raises :class:`ConsistencyError`.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if any(v < 0 for v in f.values.values()):
        raise ValueError("f must be nonnegative")
    radii = _check_radii(list(radii), 0)
    probes = [o] if probes is None else list(probes)
    first = ball(oracle, o, radii[0])
    for x, v in f.items():
        if v != 0.0 and x not in first.realization.index:
            raise ValueError(f"f is supported at {format_vertex(x)}, outside the smallest ball")
    for x in probes:
        if x not in first.realization.index:
            raise ValueError(f"probe {format_vertex(x)} lies outside the smallest ball")

    def run(r: int):
        b = first if r == radii[0] else ball(oracle, o, r)
        return _resolvent_on_ball(b, alpha, f, tol, max_iter).solution

    sols = _map(run, radii, threads)
    slack = 2 * tol * max(1.0, f.max_abs() / alpha)
    for k in range(1, len(sols)):
        prev, cur = sols[k - 1], sols[k]
        for x, v in prev.items():
            if cur(x) < v - slack:
                raise ConsistencyError(
                    f"resolvent decreased at {format_vertex(x)} from radius {radii[k - 1]} to {radii[k]}: {v!r} -> {cur(x)!r}"
                )
    traces = [[s(p) for p in probes] for s in sols]
    return ResolventTrace(alpha, radii, probes, traces, sols[-1], sols if keep_solutions else None)


@dataclass
class DeficiencySequence:
    alpha: float
    radii: list[int]
    probe_vertices: list[Vertex]
    deficiencies: list[list[float]]
    stabilized: bool
    connected: bool = True

    def at(self, probe: Vertex) -> list[float]:
        k = self.probe_vertices.index(probe)
        return [row[k] for row in self.deficiencies]


def deficiency_on_ball(b: Ball, alpha: float, probes: Sequence[Vertex], tol: float = RESOLVENT_TOL, max_iter: int | None = None) -> list[float]:
    """``1 - alpha (L_G + alpha)^{-1} 1_G`` at the probes, ``G`` the full ball."""
    ones = VertexFunction.constant(b.realization.vertices, 1.0)
    u = _resolvent_on_ball(b, alpha, ones, tol, max_iter).solution
    return [1.0 - alpha * u(p) for p in probes]


def deficiency_sequence(
    oracle: GraphOracle,
    o: Vertex,
    alpha: float,
    radii: Iterable[int],
    probes: Sequence[Vertex] | None = None,
    tol: float = 1e-6,
    *,
    solver_tol: float = RESOLVENT_TOL,
    max_iter: int | None = None,
    threads: int | None = None,
) -> DeficiencySequence:
    """Stochastic-completeness deficiencies along the ball exhaustion around ``o``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    radii = _check_radii(list(radii), 0)
    probes = [o] if probes is None else list(probes)
    first = ball(oracle, o, radii[0])
    for p in probes:
        if p not in first.realization.index:
            raise ValueError(f"probe {format_vertex(p)} lies outside the smallest ball")

    def run(r: int):
        b = first if r == radii[0] else ball(oracle, o, r)
        return deficiency_on_ball(b, alpha, probes, solver_tol, max_iter), is_connected(b.realization)

    results = _map(run, radii, threads)
    rows = [r[0] for r in results]
    slack = 2 * solver_tol
    for k, row in enumerate(rows):
        for p, d in zip(probes, row):
            if not (-slack <= d <= 1 + slack) or math.isnan(d):
                raise ConsistencyError(f"deficiency {d!r} at {format_vertex(p)} (radius {radii[k]}) outside [0, 1]")
            if k and d > rows[k - 1][probes.index(p)] + slack:
                raise ConsistencyError(f"deficiency increased at {format_vertex(p)} between radii {radii[k - 1]} and {radii[k]}")
    stab = all(is_stabilized([row[i] for row in rows], tol) for i in range(len(probes)))
    return DeficiencySequence(alpha, radii, probes, rows, stab, results[-1][1])

