"""Formal Laplacian, energy form and Green's-formula bookkeeping on finite realizations.

Functions are extended by zero outside their support.  Edges from a realized
vertex to a vertex outside the realization therefore see the value 0 on the
far end; their weight enters through ``g.external``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, SupportError, VertexFunction, WeightedGraph, format_vertex


class InteriorityError(GraphError):
    """A function required to be compactly supported inside the realization touches its edge."""


def _total(terms: np.ndarray, compensated: bool = False) -> float:
    if compensated:
        return math.fsum(terms.tolist())
    return float(np.sum(terms))


@dataclass(frozen=True)
class EnergyReport:
    jump_part: float
    killing_part: float

    @property
    def total(self) -> float:
        return self.jump_part + self.killing_part


def laplacian_array(g: WeightedGraph, u: np.ndarray) -> np.ndarray:
    """Array form of the formal Laplacian for values given in canonical order."""
    return ((g.deg_array + g.c_array) * u - g.adjacency @ u) / g.m_array


def formal_laplacian(g: WeightedGraph, u: VertexFunction) -> VertexFunction:
    """Apply ``L u(x) = (1/m(x)) sum_y b(x,y)(u(x)-u(y)) + c(x)u(x)/m(x)`` on every realized vertex.

    >>> g = WeightedGraph.from_edges([("a", "b", 1), ("b", "c", 1)])
    >>> formal_laplacian(g, VertexFunction.indicator("b")).items()
    [('a', -1.0), ('b', 2.0), ('c', -1.0)]
    """
    return VertexFunction.from_array(g, laplacian_array(g, u.to_array(g)))


def _jump_terms(g: WeightedGraph, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    i, j, w = g.edge_arrays
    inner = w * ((u[i] - u[j]) * (v[i] - v[j]))
    outer = g.external_array * (u * v)
    return np.concatenate([inner, outer])


def energy(g: WeightedGraph, u: VertexFunction, *, compensated: bool = False) -> EnergyReport:
    """Energy of ``u`` split into its jump and killing parts."""
    arr = u.to_array(g)
    jump = _total(_jump_terms(g, arr, arr), compensated)
    kill = _total(g.c_array * (arr * arr), compensated)
    return EnergyReport(jump, kill)


def energy_bilinear(g: WeightedGraph, u: VertexFunction, v: VertexFunction, *, compensated: bool = False) -> float:
    """Bilinear energy, summed edge by edge (not by polarization)."""
    a, b = u.to_array(g), v.to_array(g)
    jump = _total(_jump_terms(g, a, b), compensated)
    kill = _total(g.c_array * (a * b), compensated)
    return jump + kill


def check_interior(g: WeightedGraph, v: VertexFunction) -> None:
    """Raise unless every support vertex of ``v`` has all its neighbors realized in ``g``."""
    v.check_support(g)
    for x, val in v.items():
        if val != 0.0 and x not in g.interior:
            raise InteriorityError(
                f"vertex {format_vertex(x)} in the support has neighbors outside the realization "
                f"(escaping weight {g.external.get(x, 0.0)!r})"
            )


def pairing(g: WeightedGraph, w: VertexFunction, v: VertexFunction, *, compensated: bool = False) -> float:
    """``sum_x (L w)(x) v(x) m(x)``."""
    lw = laplacian_array(g, w.to_array(g))
    return _total(lw * v.to_array(g) * g.m_array, compensated)


def green_defect(g: WeightedGraph, u: VertexFunction, v: VertexFunction, *, compensated: bool = False) -> float:
    """``Q(u, v) - sum_x (L u)(x) v(x) m(x)``; zero up to roundoff when ``v`` is interior-supported."""
    check_interior(g, v)
    if not any(v.values.values()):
        return 0.0
    return energy_bilinear(g, u, v, compensated=compensated) - pairing(g, u, v, compensated=compensated)


def boundary_sum(g: WeightedGraph, u: VertexFunction, *, compensated: bool = False) -> float:
    """``sum_x (L u)(x) m(x)`` over the realized vertices."""
    arr = u.to_array(g)
    return _total(laplacian_array(g, arr) * g.m_array, compensated)


def local_energy_density(g: WeightedGraph, u: VertexFunction, x) -> float:
    """``sum_y b(x,y) (u(x) - u(y))^2``, unrealized neighbors counting with value 0."""
    if x not in g.index:
        raise SupportError(f"vertex {format_vertex(x)} is not realized")
    u.check_support(g)
    ux = u(x)
    row = g.neighbors(x)
    terms = [row[y] * (ux - u(y)) ** 2 for y in sorted(row, key=lambda y: g.index[y])]
    terms.append(g.external.get(x, 0.0) * ux * ux)
    return float(np.sum(terms))


def clamp(u: VertexFunction, lo: float, hi: float) -> VertexFunction:
    """Pointwise ``(u v lo) ^ hi`` on the support."""
    if lo > hi:
        raise ValueError(f"clamp needs lo <= hi, got lo={lo} hi={hi}")
    return VertexFunction({x: min(max(val, lo), hi) for x, val in u.values.items()})
