"""Pytest fixtures and configuration."""

from collections.abc import Callable, Sequence

import numpy as np
import pytest
import structlog

from warehouse_aco.config import reset_settings
from warehouse_aco.domain.models import (
    Cargo,
    Edge,
    HeuristicNetConfig,
    InstanceKind,
    WarehouseInstance,
)
from warehouse_aco.logging_config import setup_logging

InstanceFactory = Callable[..., WarehouseInstance]


def build_instance(
    coords: Sequence[Sequence[float]],
    edges: Sequence[tuple[int, int]] | None = None,
    kind: InstanceKind = InstanceKind.TSP,
    capacity: float = 20.0,
) -> WarehouseInstance:
    """Instance with unit attributes and Manhattan free-flow times; complete when no edges given."""
    nodes = [Cargo(x=float(c[0]), y=float(c[1]), z=float(c[2])) for c in coords]
    n = len(nodes)
    if edges is None:
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return WarehouseInstance(
        kind=kind,
        nodes=nodes,
        edges=[
            Edge(
                u=u,
                v=v,
                capacity=capacity,
                free_flow_time=sum(abs(a - b) for a, b in zip(coords[u], coords[v])),
            )
            for u, v in edges
        ],
    )


@pytest.fixture(scope="session", autouse=True)
def setup_test_logging() -> None:
    """Setup logging for tests."""
    setup_logging(log_level="WARNING", environment="development")


@pytest.fixture(autouse=True)
def reset_config() -> None:
    """Reset configuration singleton between tests."""
    reset_settings()


@pytest.fixture
def test_logger() -> structlog.stdlib.BoundLogger:
    """Get test logger."""
    return structlog.get_logger("test")


@pytest.fixture
def make_instance() -> InstanceFactory:
    """Factory for hand-built instances."""
    return build_instance


@pytest.fixture
def triangle() -> WarehouseInstance:
    """Complete 3-node instance with edge lengths 1, 1 and 2."""
    return build_instance([(0, 0, 0), (1, 0, 0), (1, 1, 0)])


@pytest.fixture
def unit_square() -> WarehouseInstance:
    """Complete 4-node instance on the corners of a unit square."""
    return build_instance([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])


@pytest.fixture
def small_net_config() -> HeuristicNetConfig:
    """Narrow network that keeps gradient checks fast."""
    return HeuristicNetConfig(hidden_dim=6, fusion_dim=4, gnn_layers=2, decoder_depth=3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
