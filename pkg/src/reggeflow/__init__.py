"""Regge curvature, discrete Einstein metrics and discrete Ricci flows on
triangulated 3-manifolds."""

from .complex import (
    Triangulation3,
    TriangulationError,
    TriangulationParseError,
    build_16cell,
    build_from_tetrahedra,
    edge_key,
    metric_from_block_vector,
    block_order_indices,
    parse_triangulation,
)
from .curvature import (
    CurvatureReport,
    cooper_rivin,
    einstein_residual,
    functionals,
    ricci,
)
from .flow import FlowConfig, FlowStatus, FlowTrajectory, conservation_check, flow_rhs, integrate
from .geometry import InadmissibleError
from .metric import MetricError, is_admissible, random_admissible, scale, uniform_metric
from .rng import SplitMix64
from .stability import (
    StabilityReport,
    grad_Q,
    jacobian_R_wrt_l,
    lichnerowicz,
    minimize_Q,
    polish_einstein,
    stability_test,
)

__version__ = "0.1.0"
