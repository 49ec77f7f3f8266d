"""Graph indexing and per-instance feature extraction for the heuristic network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from warehouse_aco.domain.exceptions import EmptyNeighborhoodError, IsolatedNodeError
from warehouse_aco.domain.models import TrafficState, WarehouseInstance


def _one_hot(index: np.ndarray, n_cols: int, weights: np.ndarray | None = None) -> csr_matrix:
    rows = np.arange(index.size)
    data = np.ones(index.size) if weights is None else weights
    return csr_matrix((data, (rows, index)), shape=(index.size, n_cols))


@dataclass(frozen=True)
class AttentionPairs:
    """
    (query node, key node) pairs of the fusion attention.

    `edge` holds the undirected edge id of each pair, -1 for self pairs.
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    edge: np.ndarray
    src_matrix: csr_matrix  # (P, n) one-hot of src
    dst_matrix: csr_matrix  # (P, n) one-hot of dst

    @classmethod
    def build(
        cls, n_nodes: int, src: np.ndarray, dst: np.ndarray, edge: np.ndarray
    ) -> AttentionPairs:
        """
        Raises:
            EmptyNeighborhoodError: If some node has no pair
        """
        counts = np.bincount(src, minlength=n_nodes)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise EmptyNeighborhoodError(int(empty[0]))
        return cls(
            n_nodes=n_nodes,
            src=src,
            dst=dst,
            edge=edge,
            src_matrix=_one_hot(src, n_nodes),
            dst_matrix=_one_hot(dst, n_nodes),
        )


@dataclass(frozen=True)
class GraphIndex:
    """
    Directed view of an undirected edge list.

    Directed edge k < m runs u -> v of edge k; k >= m runs v -> u of edge k - m.
    """

    n_nodes: int
    n_edges: int
    src: np.ndarray
    dst: np.ndarray
    edge_of: np.ndarray
    src_matrix: csr_matrix  # (2m, n)
    dst_matrix: csr_matrix  # (2m, n)
    mean_matrix: csr_matrix  # (n, 2m), row i averages edges leaving i
    pairs: AttentionPairs

    @property
    def n_directed(self) -> int:
        return 2 * self.n_edges

    @classmethod
    def from_edges(cls, n_nodes: int, edge_index: np.ndarray) -> GraphIndex:
        """
        Raises:
            IsolatedNodeError: If a node has no incident edge
        """
        edge_index = np.asarray(edge_index, dtype=np.int64).reshape(-1, 2)
        m = edge_index.shape[0]
        src = np.concatenate([edge_index[:, 0], edge_index[:, 1]])
        dst = np.concatenate([edge_index[:, 1], edge_index[:, 0]])
        edge_of = np.concatenate([np.arange(m), np.arange(m)])

        degree = np.bincount(src, minlength=n_nodes)
        isolated = np.flatnonzero(degree == 0)
        if isolated.size:
            raise IsolatedNodeError(int(isolated[0]))

        src_matrix = _one_hot(src, n_nodes)
        mean_matrix = _one_hot(src, n_nodes, 1.0 / degree[src]).T.tocsr()
        selves = np.arange(n_nodes)
        pairs = AttentionPairs.build(
            n_nodes,
            np.concatenate([src, selves]),
            np.concatenate([dst, selves]),
            np.concatenate([edge_of, np.full(n_nodes, -1)]),
        )
        return cls(
            n_nodes=n_nodes,
            n_edges=m,
            src=src,
            dst=dst,
            edge_of=edge_of,
            src_matrix=src_matrix,
            dst_matrix=_one_hot(dst, n_nodes),
            mean_matrix=mean_matrix,
            pairs=pairs,
        )

    @classmethod
    def from_instance(cls, instance: WarehouseInstance) -> GraphIndex:
        return cls.from_edges(instance.n_nodes, instance.edge_index)


def minmax(values: np.ndarray) -> np.ndarray:
    """Column-wise min-max scaling to [0, 1]; constant columns become 0."""
    values = np.asarray(values, dtype=np.float64)
    low = values.min(axis=0)
    span = values.max(axis=0) - low
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (values - low) / safe, 0.0)


@dataclass(frozen=True)
class FeatureBundle:
    """Network inputs of one (instance, traffic) pair."""

    node_static: np.ndarray  # (n, 6) x, y, z, size, weight, special
    edge_static: np.ndarray  # (m, 3) distance, expert H, capacity
    node_dynamic: np.ndarray  # (n, 3) mean load, max load, depot flag
    edge_dynamic: np.ndarray  # (m,) tc / cap

    def edge_inputs(self, graph: GraphIndex) -> np.ndarray:
        """(2m, 4) per directed edge: static columns plus load."""
        per_edge = np.column_stack([self.edge_static, self.edge_dynamic])
        return per_edge[graph.edge_of]

    def pair_distance(self, pairs: AttentionPairs) -> np.ndarray:
        """Normalized distance of each attention pair, 0 for self pairs."""
        distance = self.edge_static[:, 0]
        return np.where(pairs.edge >= 0, distance[np.maximum(pairs.edge, 0)], 0.0)


def extract_features(
    instance: WarehouseInstance, traffic: TrafficState, expert_eta: np.ndarray
) -> FeatureBundle:
    """
    Build network inputs.

    Static columns are min-max normalized per instance; loads are raw tc/cap.
    """
    node_static = minmax(np.column_stack([instance.coords, instance.attributes]))
    edge_static = minmax(
        np.column_stack([instance.edge_distance, expert_eta, instance.capacity])
    )
    load = traffic.load

    incident = [load[edges] for edges in instance.neighbor_edges]
    node_dynamic = np.zeros((instance.n_nodes, 3))
    node_dynamic[:, 0] = [loads.mean() for loads in incident]
    node_dynamic[:, 1] = [loads.max() for loads in incident]
    node_dynamic[instance.depot, 2] = 1.0

    return FeatureBundle(
        node_static=node_static,
        edge_static=edge_static,
        node_dynamic=node_dynamic,
        edge_dynamic=load.copy(),
    )
