"""Potential theory on weighted graphs: capacities, restricted resolvents,
recurrence and stochastic completeness along finite exhaustions."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Ball,
    GraphOracle,
    VertexFunction,
    WeightedGraph,
    ball,
    generate,
    is_connected,
    validate,
)
from .operator import (  # noqa: E402
    boundary_sum,
    clamp,
    energy,
    energy_bilinear,
    formal_laplacian,
    green_defect,
    local_energy_density,
)
from .linsolve import DirichletProblem, assemble, solve, solve_constrained  # noqa: E402
from .potential import (  # noqa: E402
    capacity_sequence,
    deficiency_sequence,
    equilibrium_potential,
    resolvent_limit,
)
from .classify import (  # noqa: E402
    check_green_criterion,
    check_uniqueness_witness,
    classify_recurrence,
    classify_stochastic_completeness,
)
