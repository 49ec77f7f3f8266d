"""Base protocol for heuristic sources."""

from collections.abc import Callable
from typing import Protocol

from warehouse_aco.domain.models import (
    HeuristicField,
    HeuristicSourceKind,
    TrafficState,
    WarehouseInstance,
)


class HeuristicSource(Protocol):
    """Protocol for per-edge heuristic providers."""

    kind: HeuristicSourceKind

    def evaluate(self, instance: WarehouseInstance, traffic: TrafficState) -> HeuristicField:
        """
        Heuristic for every edge of an instance.

        Args:
            instance: Instance to evaluate
            traffic: Current traffic state (ignored by traffic-blind sources)

        Returns:
            Strictly positive heuristic field
        """
        ...

    def refresher(
        self, instance: WarehouseInstance
    ) -> Callable[[TrafficState], HeuristicField] | None:
        """
        Callback re-evaluating the heuristic between ACO iterations.

        Returns:
            None when the heuristic does not depend on traffic
        """
        ...
