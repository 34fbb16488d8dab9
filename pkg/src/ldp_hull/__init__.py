"""Large-deviation analysis of the convex-hull area of planar random walks.

The pipeline: represent an increment law (`increments`), evaluate its rate
function by convex conjugation (`legendre`), trace cumulant level sets
(`levelset`), solve for the optimal trajectories and the area rate function
(`solver`), cross-check with a discretized variational minimizer (`oracle`)
and polygonal-line convexification (`polyline`), and compare against tilted
Monte Carlo estimates (`montecarlo`).
"""

from .errors import (
    DomainError,
    NoCandidateError,
    NoConvergenceError,
    NotFullPlaneError,
    NotSymmetricError,
    OutOfRangeError,
    OutsideDomainError,
)
from .increments import (
    Atoms,
    Atoms1D,
    Gaussian,
    Gaussian1D,
    Graph1D,
    IncrementModel,
    SupportClass,
    atoms,
    atoms1d,
    cumulant,
    cumulant_gradient,
    cumulant_hessian,
    drift,
    from_spec,
    gaussian,
    gaussian1d,
    graph1d,
    is_centrally_symmetric,
    regularize,
    support_class,
    to_spec,
)
from .legendre import Trajectory, energy, rate, rate_1d, rate_1d_gradient, rate_gradient
from .levelset import (
    LevelArc,
    arc_mass,
    arc_parametrization,
    half_area,
    half_area_derivative,
    level_radius,
    sublevel_area,
    trace_level,
)
from .montecarlo import LdpEstimate, WalkSample, estimate_ldp, hull_area_points, simulate_walk
from .oracle import DiscreteCurve, convexify_curve, curve_points, minimize_discrete
from .polyline import (
    PolygonalLine,
    convex_hull_vertices,
    convexify,
    hull_area,
    signed_area_integral,
    winding_signed_area,
)
from .solver import (
    ALL_DIRECTIONS,
    Candidate,
    GraphSolution,
    RateResult,
    build_trajectory,
    candidate_directions,
    euler_lagrange_residual,
    euler_lagrange_residual_1d,
    graph_trajectory,
    rate_of_area,
    symmetric_level,
)

__version__ = "0.1.0"
