"""Heuristic predicted by the trained network."""

from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import structlog

from warehouse_aco.adapters.storage.checkpoint_store import load_checkpoint
from warehouse_aco.domain.models import (
    HeuristicField,
    HeuristicSourceKind,
    HeuristicWeights,
    TrafficState,
    WarehouseInstance,
)
from warehouse_aco.model.features import GraphIndex
from warehouse_aco.model.network import forward
from warehouse_aco.model.params import ModelParams
from warehouse_aco.services.aco_engine import expert_heuristic

logger = structlog.get_logger(__name__)


@dataclass
class LearnedHeuristic:
    """
    Eval-mode network output η = ŷ + ε.

    Re-evaluated from the previous iteration's traffic during a solve.
    """

    params: ModelParams
    weights: HeuristicWeights = field(default_factory=HeuristicWeights)
    kind: HeuristicSourceKind = HeuristicSourceKind.LEARNED

    @classmethod
    def from_checkpoint(
        cls, path: Path, weights: HeuristicWeights | None = None
    ) -> "LearnedHeuristic":
        """
        Load the network from a checkpoint file.

        Raises:
            CheckpointCorruptedError: If the file is malformed
        """
        return cls(params=load_checkpoint(path), weights=weights or HeuristicWeights())

    def _context(self, instance: WarehouseInstance) -> tuple[GraphIndex, np.ndarray]:
        return GraphIndex.from_instance(instance), expert_heuristic(instance, self.weights).eta

    def evaluate(self, instance: WarehouseInstance, traffic: TrafficState) -> HeuristicField:
        graph, expert_eta = self._context(instance)
        prediction = forward(instance, traffic, self.params, "eval", graph, expert_eta)
        return prediction.heuristic_field

    def refresher(
        self, instance: WarehouseInstance
    ) -> Callable[[TrafficState], HeuristicField] | None:
        graph, expert_eta = self._context(instance)

        def refresh(traffic: TrafficState) -> HeuristicField:
            prediction = forward(instance, traffic, self.params, "eval", graph, expert_eta)
            logger.debug("heuristic_refreshed", mean_load=float(traffic.load.mean()))
            return prediction.heuristic_field

        return refresh
