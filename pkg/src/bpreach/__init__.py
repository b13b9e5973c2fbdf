"""Backprojection-set over-approximation for linear systems with ReLU policies."""

from .geometry import (
    HPolytope,
    HyperRectangle,
    PartitionGrid,
    bounding_box_of_union,
    contains,
    intersects,
    partition,
    to_polytope,
)
from .lp import LinearProgram, LpOutcome, LpStatus, SimplexSolver, solve
from .network import AffineBoundPair, Layer, MlpNetwork, crown_relax, evaluate, make_clip_network
from .reach import BpRun, ForwardRun, backward_step, breach_lp, reach_lp_forward, rebreach_lp
from .systems import LtiSystem
from .verify import OracleReport, Verdict, certify_backward, certify_forward, oracle_bp, simulate

__version__ = "0.1.0"
