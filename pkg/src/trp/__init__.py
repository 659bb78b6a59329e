"""Topological risk parity: signed signals propagated through a rooted correlation tree."""

from .data import (
    ActiveSet,
    AssetId,
    ReturnsPanel,
    TrpConfig,
    active_set,
    load_returns,
    load_signals,
    recent_magnitude,
)
from .dependence import SpanningTree, brute_force_mst, build_mst, correlation_matrix, distance_matrix
from .flow_model import FlowModelParams, generate_returns, population_covariance
from .propagation import (
    Portfolio,
    TopoFactors,
    allocate,
    alpha,
    normalize_leverage,
    postprocess,
    topo_factors,
)
from .topology import RootedTopology, anchor_market_sector, root_tree, select_root

__version__ = "0.1.0"
