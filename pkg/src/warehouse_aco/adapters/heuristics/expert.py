"""Attribute-aware expert heuristic."""

from collections.abc import Callable
from dataclasses import dataclass, field

from warehouse_aco.domain.models import (
    HeuristicField,
    HeuristicSourceKind,
    HeuristicWeights,
    TrafficState,
    WarehouseInstance,
)
from warehouse_aco.services.aco_engine import expert_heuristic


@dataclass
class ExpertHeuristic:
    """Closed-form H from distance, size, weight and special handling."""

    weights: HeuristicWeights = field(default_factory=HeuristicWeights)
    kind: HeuristicSourceKind = HeuristicSourceKind.EXPERT

    def evaluate(self, instance: WarehouseInstance, traffic: TrafficState) -> HeuristicField:
        return expert_heuristic(instance, self.weights)

    def refresher(
        self, instance: WarehouseInstance
    ) -> Callable[[TrafficState], HeuristicField] | None:
        return None
