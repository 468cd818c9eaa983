"""Three-valued recurrence and stochastic-completeness verdicts, Green-sum and witness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import GraphOracle, Vertex, VertexFunction, WeightedGraph, format_vertex
from .operator import boundary_sum, laplacian_array
from .potential import CapacitySequence, DeficiencySequence, capacity_sequence, deficiency_sequence

POSITIVE = "positive"
NEGATIVE = "negative"
UNDETERMINED = "undetermined"

RECURRENCE = "recurrence"
SC = "stochastic_completeness"

WITNESS_TOL = 1e-10

REFUTATION_NOTE = (
    "finite realization: a failed check refutes the candidate, passing checks do not certify a witness "
    "on the infinite graph"
)


@dataclass
class ClassificationReport:
    question: str
    verdict: str
    evidence: CapacitySequence | DeficiencySequence
    thresholds: dict[str, float]
    connected: bool
    notes: list[str] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        if isinstance(self.evidence, CapacitySequence):
            return list(self.evidence.values)
        return self.evidence.at(self.evidence.probe_vertices[0])


def classify_recurrence(
    oracle: GraphOracle, o: Vertex, radii: Iterable[int], tol: float = 1e-6, **kw
) -> ClassificationReport:
    """Recurrent (positive) when the capacities never increase and end at or below ``tol``.

    Transient (negative) when they stabilize above ``10 tol``.  Extra keyword
    arguments go to :func:`capacity_sequence`.
    """
    seq = capacity_sequence(oracle, o, radii, tol, **kw)
    connected = seq.connected
    thresholds = {"tol": tol, "positive_below": tol, "negative_above": 10 * tol}
    notes = []
    vals = seq.values
    if not connected:
        notes.append("ball around the origin is disconnected; recurrence is only defined for connected graphs")
        verdict = UNDETERMINED
    elif vals[-1] <= tol and all(b <= a for a, b in zip(vals, vals[1:])):
        verdict = POSITIVE
        notes.append("capacity trend to zero: recurrent")
    elif seq.stabilized and vals[-1] > 10 * tol:
        verdict = NEGATIVE
        notes.append(f"capacity stabilized near {vals[-1]:.6g}: transient")
    else:
        verdict = UNDETERMINED
        if len(vals) > 1 and vals[-1] < vals[-2]:
            notes.append("capacity still decreasing; extend the radii")
    notes.append("limits judged from the last two radii only")
    return ClassificationReport(RECURRENCE, verdict, seq, thresholds, connected, notes)


def classify_stochastic_completeness(
    oracle: GraphOracle, o: Vertex, alpha: float, radii: Iterable[int], tol: float = 1e-6, **kw
) -> ClassificationReport:
    """Complete (positive) when the deficiency at ``o`` falls below ``tol``; incomplete when it stabilizes above ``10 tol``."""
    seq = deficiency_sequence(oracle, o, alpha, radii, [o], tol, **kw)
    vals = seq.at(o)
    thresholds = {"tol": tol, "alpha": alpha, "positive_below": tol, "negative_above": 10 * tol}
    notes = []
    if vals[-1] < tol:
        verdict = POSITIVE
        notes.append("deficiency 1 - alpha G_alpha 1 vanishes at the probe: stochastically complete")
    elif seq.stabilized and vals[-1] > 10 * tol:
        verdict = NEGATIVE
        notes.append(f"deficiency stabilized near {vals[-1]:.6g}: not stochastically complete")
    else:
        verdict = UNDETERMINED
    notes.append("limits judged from the last two radii only")
    return ClassificationReport(SC, verdict, seq, thresholds, seq.connected, notes)


@dataclass
class GreenCheck:
    mode: str
    boundary_sum: float
    contributions: dict[Vertex, float]
    l1_u: float
    l1_laplacian: float
    truncated: bool
    condition_a: bool | None
    notes: list[str] = field(default_factory=list)


def check_green_criterion(g: WeightedGraph, u: VertexFunction, mode: str = RECURRENCE) -> tuple[float, GreenCheck]:
    """Evaluate ``sum_x (L u)(x) m(x)`` on the realization together with the l1 bookkeeping."""
    if mode in ("sc", SC):
        mode = SC
    elif mode != RECURRENCE:
        raise ValueError(f"mode must be 'recurrence' or 'sc', got {mode!r}")
    arr = u.to_array(g)
    lap = laplacian_array(g, arr)
    contrib = lap * g.m_array
    total = boundary_sum(g, u)
    truncated = any(v != 0.0 and x not in g.interior for x, v in u.items())
    cond_a = g.metadata.get("condition_A")
    notes = []
    if truncated:
        notes.append("support reaches the edge of the realization: the sum is a truncation")
    if mode == SC and cond_a is not True:
        notes.append("condition (A) not certified for this graph: the l1 criterion may not characterize completeness")
    check = GreenCheck(
        mode=mode,
        boundary_sum=total,
        contributions=dict(zip(g.vertices, contrib.tolist())),
        l1_u=float(np.sum(np.abs(arr) * g.m_array)),
        l1_laplacian=float(np.sum(np.abs(contrib))),
        truncated=truncated,
        condition_a=cond_a,
        notes=notes,
    )
    return total, check


WITNESS_CHECKS = (
    "nonnegative",
    "L1_finite_on_carrier",
    "Linf_bounded",
    "laplacian_nonpositive",
    "laplacian_nontrivial",
    "l2_laplacian_finite_on_carrier",
)


@dataclass
class WitnessReport:
    u: VertexFunction
    checks: dict[str, bool]
    boundary_sum_value: float
    notes: list[str] = field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return not all(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k in WITNESS_CHECKS if not self.checks[k]]


def check_uniqueness_witness(g: WeightedGraph, u: VertexFunction, tol: float = WITNESS_TOL) -> WitnessReport:
    """Test the sign, integrability and nontriviality conditions a witness ``u`` must meet.

    Everything is recomputed from ``u`` on the realization ``g``.
    """
    arr = u.to_array(g)
    lap = laplacian_array(g, arr)
    m = g.m_array
    checks = {
        "nonnegative": bool(np.all(arr >= 0)),
        "L1_finite_on_carrier": math.isfinite(float(np.sum(np.abs(arr) * m))),
        "Linf_bounded": bool(np.all(np.isfinite(arr))),
        "laplacian_nonpositive": bool(np.all(lap <= tol)),
        "laplacian_nontrivial": bool(np.any(np.abs(lap) > tol)),
        "l2_laplacian_finite_on_carrier": math.isfinite(float(np.sum(lap * lap * m))),
    }
    notes = [REFUTATION_NOTE]
    if not checks["laplacian_nonpositive"]:
        k = int(np.argmax(lap))
        notes.append(f"L u is positive at {format_vertex(g.vertices[k])} ({lap[k]:.6g})")
    return WitnessReport(u, checks, boundary_sum(g, u), notes)


def implication_violations(pairs: Sequence[tuple[str, str]]) -> list[int]:
    """Indices of (recurrence, sc) verdict pairs that are recurrent but not stochastically complete."""
    return [i for i, (r, s) in enumerate(pairs) if r == POSITIVE and s == NEGATIVE]
