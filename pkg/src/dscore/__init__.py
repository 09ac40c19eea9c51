"""Spectral community detection for directed networks under the directed
degree-corrected block model."""

from .graph import (
    DirectedGraph,
    NodeSet,
    degrees,
    from_edge_list,
    induced_subgraph,
    largest_weak_component,
    product_component,
    to_edge_list,
)
from .model import DcbmParams, expected_matrix, sample_adjacency, theoretical_svd, validate
from .pipeline import AlgorithmSpec, run_core_only, run_entire, run_intersection_attach
from .metrics import misclustering

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "DcbmParams",
    "DirectedGraph",
    "NodeSet",
    "degrees",
    "expected_matrix",
    "from_edge_list",
    "induced_subgraph",
    "largest_weak_component",
    "misclustering",
    "product_component",
    "run_core_only",
    "run_entire",
    "run_intersection_attach",
    "sample_adjacency",
    "theoretical_svd",
    "to_edge_list",
    "validate",
]
