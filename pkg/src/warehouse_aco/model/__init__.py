"""Learned edge heuristic: features, parameters and network."""

from warehouse_aco.model.network import (
    ETA_EPSILON,
    HeuristicPrediction,
    backward,
    forward,
    forward_features,
)
from warehouse_aco.model.params import Gradients, ModelParams

__all__ = [
    "ETA_EPSILON",
    "Gradients",
    "HeuristicPrediction",
    "ModelParams",
    "backward",
    "forward",
    "forward_features",
]
