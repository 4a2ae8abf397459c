"""Constrained-degree percolation in random environment on the square lattice."""
from .lattice import (
    Box, BlockGeometry, Edge, GeometryError, Graph, Vertex, block_geometry, boundary,
    edges_in, external_edge_boundary,
)
from .env import ClockField, ConstraintDist, Environment, SeedSpec, sample_clocks, sample_environment
from .dynamics import (
    Configuration, CoupledTriple, CoverageError, evolve_bernoulli, evolve_cdpre, evolve_coupled,
    evolve_intermediate, exact_distribution,
)
from .analysis import connects, covariance_pair, influence_zone, mzone_escape_frequency
from .estimate import (
    ThetaTable, decay_fit, dominance_check, simon_lieb_check, susceptibility, theta_table,
    threshold_scan, verify_block_combinatorics,
)
from .osss import RevealmentReport, influence_table, osss_check, revealment_table, run_Tk
from ._kernels import UnrevealedReadError

__version__ = "0.1.0"
