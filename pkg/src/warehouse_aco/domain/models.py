"""Domain models using Pydantic for validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from warehouse_aco.domain.exceptions import (
    DisconnectedGraphError,
    InvalidInstanceError,
    MissingEdgeError,
)

DEFAULT_CAPACITY = 20.0

# Probability of a tour seen by the training loss
TourProbability = Literal["per_step", "joint"]


class InstanceKind(str, Enum):
    """Routing mode of an instance."""

    TSP = "tsp"  # closed tour back to the depot
    WAREHOUSE = "warehouse"  # open pickup path


class HeuristicSourceKind(str, Enum):
    """Where a heuristic field came from."""

    EXPERT = "expert"
    LEARNED = "learned"


class Cargo(BaseModel):
    """One node: 3D position plus physical and handling attributes."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float = Field(..., description="Grid x coordinate")
    y: float = Field(..., description="Grid y coordinate")
    z: float = Field(..., description="Grid z coordinate (level)")
    size: float = Field(default=1.0, ge=0.0, description="Volume units, 0 for waypoints")
    weight: float = Field(default=1.0, ge=0.0, description="Mass units, 0 for waypoints")
    special: float = Field(
        default=1.0, gt=0.0, le=1.0, description="Handling factor, 1 = unconstrained"
    )

    @property
    def position(self) -> tuple[float, float, float]:
        """Coordinates as a tuple."""
        return (self.x, self.y, self.z)


class Edge(BaseModel):
    """Undirected edge with capacity and free-flow travel time."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    u: int = Field(..., ge=0)
    v: int = Field(..., ge=0)
    capacity: float = Field(default=DEFAULT_CAPACITY, gt=0.0, description="Simultaneous traversals")
    free_flow_time: float = Field(..., gt=0.0, description="Travel time at zero load")


class WarehouseInstance(BaseModel):
    """
    Warehouse or TSP graph.

    Immutable after construction. Node ids are list positions; edges are
    stored canonically with u < v and their list position is the edge id
    used by every per-edge array in the solver and the network.
    """

    model_config = ConfigDict(frozen=True)

    version: Literal[1] = 1
    kind: InstanceKind = InstanceKind.TSP
    dimension: Literal[3] = 3
    depot: int = Field(default=0, ge=0)
    nodes: list[Cargo]
    edges: list[Edge]

    @field_validator("edges")
    @classmethod
    def canonicalize_edges(cls, edges: list[Edge]) -> list[Edge]:
        """Store every edge with u < v."""
        return [e if e.u <= e.v else e.model_copy(update={"u": e.v, "v": e.u}) for e in edges]

    @model_validator(mode="after")
    def check_structure(self) -> WarehouseInstance:
        """Validate node ids, edge uniqueness and connectivity."""
        n = len(self.nodes)
        if n < 2:
            raise InvalidInstanceError(f"need at least 2 nodes, got {n}")
        if self.depot >= n:
            raise InvalidInstanceError(f"depot {self.depot} out of range")
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.v >= n:
                raise InvalidInstanceError(f"edge ({e.u}, {e.v}) references unknown node")
            if e.u == e.v:
                raise InvalidInstanceError(f"self-edge on node {e.u}")
            if (e.u, e.v) in seen:
                raise InvalidInstanceError(f"duplicate edge ({e.u}, {e.v})")
            seen.add((e.u, e.v))
        if not self.edges:
            raise DisconnectedGraphError(n)
        n_components, _ = connected_components(self.adjacency_matrix(), directed=False)
        if n_components != 1:
            raise DisconnectedGraphError(int(n_components))
        return self

    def adjacency_matrix(self, weights: np.ndarray | None = None) -> coo_matrix:
        idx = np.array([(e.u, e.v) for e in self.edges], dtype=np.int64).reshape(-1, 2)
        data = np.ones(len(idx)) if weights is None else weights
        n = len(self.nodes)
        return coo_matrix((data, (idx[:, 0], idx[:, 1])), shape=(n, n))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def closed(self) -> bool:
        """Whether tours return to the depot."""
        return self.kind is InstanceKind.TSP

    @cached_property
    def coords(self) -> np.ndarray:
        """(n, 3) coordinates."""
        return np.array([c.position for c in self.nodes], dtype=np.float64)

    @cached_property
    def attributes(self) -> np.ndarray:
        """(n, 3) columns size, weight, special."""
        return np.array([(c.size, c.weight, c.special) for c in self.nodes], dtype=np.float64)

    @cached_property
    def edge_index(self) -> np.ndarray:
        """(m, 2) endpoint ids, u < v."""
        return np.array([(e.u, e.v) for e in self.edges], dtype=np.int64)

    @cached_property
    def capacity(self) -> np.ndarray:
        return np.array([e.capacity for e in self.edges], dtype=np.float64)

    @cached_property
    def free_flow_time(self) -> np.ndarray:
        return np.array([e.free_flow_time for e in self.edges], dtype=np.float64)

    @cached_property
    def edge_distance(self) -> np.ndarray:
        """Manhattan length of every edge."""
        u, v = self.edge_index[:, 0], self.edge_index[:, 1]
        return np.abs(self.coords[u] - self.coords[v]).sum(axis=1)

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, int], int]:
        """Edge id by node pair, both orientations."""
        lookup: dict[tuple[int, int], int] = {}
        for k, e in enumerate(self.edges):
            lookup[(e.u, e.v)] = k
            lookup[(e.v, e.u)] = k
        return lookup

    @cached_property
    def neighbor_nodes(self) -> list[np.ndarray]:
        """Neighbour ids per node, ascending."""
        return [nodes for nodes, _ in self.incidence]

    @cached_property
    def neighbor_edges(self) -> list[np.ndarray]:
        """Edge ids aligned with `neighbor_nodes`."""
        return [edges for _, edges in self.incidence]

    @cached_property
    def incidence(self) -> list[tuple[np.ndarray, np.ndarray]]:
        buckets: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for k, e in enumerate(self.edges):
            buckets[e.u].append((e.v, k))
            buckets[e.v].append((e.u, k))
        result = []
        for bucket in buckets:
            bucket.sort()
            result.append(
                (
                    np.array([b[0] for b in bucket], dtype=np.int64),
                    np.array([b[1] for b in bucket], dtype=np.int64),
                )
            )
        return result

    @cached_property
    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbor_nodes], dtype=np.int64)

    @property
    def is_complete(self) -> bool:
        n = self.n_nodes
        return self.n_edges == n * (n - 1) // 2

    @cached_property
    def shortest_path_tree(self) -> tuple[np.ndarray, np.ndarray]:
        graph = self.adjacency_matrix(self.free_flow_time).tocsr()
        dist, pred = shortest_path(graph, method="D", directed=False, return_predecessors=True)
        return dist, pred

    @property
    def path_lengths(self) -> np.ndarray:
        """All-pairs shortest travel times."""
        return self.shortest_path_tree[0]

    def edge_id(self, u: int, v: int) -> int:
        """Edge id for a node pair."""
        try:
            return self.edge_lookup[(u, v)]
        except KeyError:
            raise MissingEdgeError(u, v) from None

    def path_between(self, source: int, target: int) -> list[int]:
        """Shortest node path from source to target, both included."""
        pred = self.shortest_path_tree[1]
        path = [target]
        while path[-1] != source:
            path.append(int(pred[source, path[-1]]))
        path.reverse()
        return path


@dataclass
class TrafficState:
    """
    Per-edge traversal counts for one ACO iteration.

    Mutated only by the ant loop; everything else takes copies.
    """

    flow: np.ndarray
    free_flow_time: np.ndarray
    capacity: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.flow < 0):
            raise InvalidInstanceError("traffic flow must be non-negative")
        if np.any(self.free_flow_time <= 0):
            raise InvalidInstanceError("free-flow time must be positive")
        if np.any(self.capacity <= 0):
            raise InvalidInstanceError("capacity must be positive")

    @classmethod
    def fresh(cls, instance: WarehouseInstance) -> TrafficState:
        """Zero-flow state for an instance."""
        return cls(
            flow=np.zeros(instance.n_edges),
            free_flow_time=instance.free_flow_time.copy(),
            capacity=instance.capacity.copy(),
        )

    @property
    def load(self) -> np.ndarray:
        """Flow relative to capacity, tc / cap."""
        return self.flow / self.capacity

    def traverse(self, edge: int) -> None:
        self.flow[edge] += 1.0

    def reset(self) -> None:
        self.flow[:] = 0.0

    def copy(self) -> TrafficState:
        return TrafficState(self.flow.copy(), self.free_flow_time.copy(), self.capacity.copy())


class AcoParams(BaseModel):
    """Ant colony parameters."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha: float = Field(default=1.0, ge=0.0, description="Pheromone exponent")
    beta: float = Field(default=2.0, ge=0.0, description="Heuristic exponent")
    rho: float = Field(default=0.1, gt=0.0, lt=1.0, description="Evaporation rate")
    q: float = Field(default=1.0, gt=0.0, description="Deposit constant")
    n_ants: int = Field(default=20, ge=1)
    n_iterations: int = Field(default=50, ge=1)
    delta: float = Field(default=0.5, ge=0.0, description="Congestion adjustment")
    seed: int = 0


class HeuristicWeights(BaseModel):
    """Weights of the attribute-aware expert heuristic."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha_h: float = Field(default=0.1, ge=0.0, description="Size weight")
    beta_h: float = Field(default=0.1, ge=0.0, description="Weight-attribute weight")
    gamma_h: float = Field(default=1.0, gt=0.0, description="Special-handling weight")


def _check_positive_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise InvalidInstanceError(f"{what} entries must be finite and > 0")


@dataclass
class PheromoneField:
    """Per-edge pheromone levels."""

    tau: np.ndarray

    def __post_init__(self) -> None:
        _check_positive_finite(self.tau, "pheromone")

    @classmethod
    def uniform(cls, n_edges: int, value: float = 1.0) -> PheromoneField:
        return cls(np.full(n_edges, value, dtype=np.float64))


@dataclass
class HeuristicField:
    """Per-edge heuristic desirability."""

    eta: np.ndarray
    source: HeuristicSourceKind = HeuristicSourceKind.EXPERT

    def __post_init__(self) -> None:
        _check_positive_finite(self.eta, "heuristic")

    def scaled(self, factor: float) -> HeuristicField:
        return HeuristicField(self.eta * factor, self.source)


@dataclass(frozen=True)
class TransitionStep:
    """One sampled move: the candidates it chose from and what it picked."""

    candidate_edges: np.ndarray
    log_tau: np.ndarray  # alpha * log(tau) over the candidates
    probabilities: np.ndarray
    chosen: int  # index into candidate_edges


@dataclass
class Tour:
    """
    One ant's route.

    `visit_order` lists required nodes by first visit, starting at the
    depot. `path` is the full walk including detours (and the return to the
    depot for closed tours); `edges` are the traversed edge ids.
    """

    visit_order: list[int]
    path: list[int]
    edges: list[int]
    cost: float
    con: float = 0.0
    log_selection_prob: float = 0.0
    steps: list[TransitionStep] = field(default_factory=list)

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        return list(zip(self.path[:-1], self.path[1:]))


class IterationStats(BaseModel):
    """Cost summary of one ACO iteration."""

    iteration: int = Field(..., ge=0)
    best_cost: float
    mean_cost: float


@dataclass
class SolveResult:
    """Outcome of a full ACO run."""

    best_tour: Tour
    history: list[IterationStats]
    con: float
    best_iteration: int


class HeuristicNetConfig(BaseModel):
    """Architecture and numerical constants of the heuristic network."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    node_features: int = Field(default=6, ge=1)
    edge_features: int = Field(default=4, ge=1)
    dynamic_features: int = Field(default=3, ge=1)
    hidden_dim: int = Field(default=32, ge=1)
    fusion_dim: int = Field(default=16, ge=1)
    gnn_layers: int = Field(default=12, ge=0)
    decoder_depth: int = Field(default=3, ge=1)
    bn_eps: float = Field(default=1e-5, gt=0.0)
    bn_momentum: float = Field(default=0.1, gt=0.0, le=1.0)
    fusion_variant: Literal["static", "static_dynamic"] = "static"


class TrainConfig(BaseModel):
    """Training run configuration, loaded from a JSON document."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=200, ge=1)
    instances_per_epoch: int = Field(default=4, ge=1)
    min_nodes: int = Field(default=20, ge=2)
    max_nodes: int = Field(default=50, ge=2)
    instance_kind: InstanceKind = InstanceKind.TSP
    k_neighbors: int = Field(default=10, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0.0)
    clip_norm: float = Field(default=1.0, gt=0.0)
    n_ants: int = Field(default=10, ge=1)
    rollout_iterations: int = Field(default=5, ge=1)
    tour_probability: TourProbability = Field(
        default="per_step",
        description="per_step: geometric mean of the sampled move probabilities; joint: product",
    )
    alpha: float = Field(default=1.0, ge=0.0)
    beta: float = Field(default=2.0, ge=0.0)
    rho: float = Field(default=0.1, gt=0.0, lt=1.0)
    delta: float = Field(default=0.5, ge=0.0)
    heuristic_weights: HeuristicWeights = Field(default_factory=HeuristicWeights)
    network: HeuristicNetConfig = Field(default_factory=HeuristicNetConfig)
    seed: int = 0
    checkpoint_every: int = Field(default=50, ge=0, description="0 disables periodic checkpoints")
    checkpoint_dir: Path | None = None

    @model_validator(mode="after")
    def check_node_range(self) -> TrainConfig:
        if self.max_nodes < self.min_nodes:
            raise ValueError("max_nodes must be >= min_nodes")
        return self

    def aco_params(self, seed: int) -> AcoParams:
        return AcoParams(
            alpha=self.alpha,
            beta=self.beta,
            rho=self.rho,
            n_ants=self.n_ants,
            n_iterations=self.rollout_iterations,
            delta=self.delta,
            seed=seed,
        )


class EpochRecord(BaseModel):
    """One line of the training log."""

    epoch: int
    mean_loss: float
    mean_best_cost: float
    mean_con: float
    wall_clock_s: float
    grad_norm: float = 0.0


class InstanceEntry(BaseModel):
    """Benchmark instance: a file or a generator call."""

    model_config = ConfigDict(extra="forbid")

    id: str | None = None
    path: Path | None = None
    generator: Literal["tsp", "warehouse"] | None = None
    n: int = Field(default=8, ge=2)
    k: int = Field(default=10, ge=1)
    seed: int = 0
    planar: bool = False
    shelves_x: int = Field(default=4, ge=1)
    shelves_y: int = Field(default=25, ge=1)
    levels: int = Field(default=5, ge=1)
    cargo: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def check_source(self) -> InstanceEntry:
        if (self.path is None) == (self.generator is None):
            raise ValueError("exactly one of path or generator must be set")
        return self

    @property
    def label(self) -> str:
        if self.id:
            return self.id
        if self.path is not None:
            return self.path.stem
        if self.generator == "tsp":
            return f"tsp-n{self.n}-k{self.k}-s{self.seed}"
        return (
            f"wh-{self.shelves_x}x{self.shelves_y}x{self.levels}-c{self.cargo}-s{self.seed}"
        )


class MethodSpec(BaseModel):
    """One solver configuration in a suite."""

    model_config = ConfigDict(extra="forbid")

    name: str
    heuristic: Literal["exact", "expert", "learned"]
    checkpoint: Path | None = None


class SuiteConfig(BaseModel):
    """Benchmark suite: methods x instances x seeds."""

    model_config = ConfigDict(extra="forbid")

    instances: list[InstanceEntry] = Field(..., min_length=1)
    methods: list[MethodSpec] = Field(..., min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0])
    baseline: str | None = "brute-force"
    ants: int = Field(default=20, ge=1)
    iterations: int = Field(default=50, ge=1)
    alpha: float = Field(default=1.0, ge=0.0)
    beta: float = Field(default=2.0, ge=0.0)
    rho: float = Field(default=0.1, gt=0.0, lt=1.0)
    delta: float = Field(default=0.0, ge=0.0)
    heuristic_weights: HeuristicWeights = Field(default_factory=HeuristicWeights)
    n_jobs: int = Field(default=1, ge=1)

    def aco_params(self, seed: int) -> AcoParams:
        return AcoParams(
            alpha=self.alpha,
            beta=self.beta,
            rho=self.rho,
            n_ants=self.ants,
            n_iterations=self.iterations,
            delta=self.delta,
            seed=seed,
        )


class BenchResult(BaseModel):
    """One (method, instance, seed) cell."""

    method: str
    instance: str
    seed: int
    seconds: float = Field(..., ge=0.0)
    cost: float = Field(..., gt=0.0)
    con: float = Field(..., ge=0.0)
    gap_pct: float | None = None


class MethodSummary(BaseModel):
    """Per-method aggregate over a suite."""

    method: str
    count: int
    mean_seconds: float
    mean_cost: float
    mean_gap_pct: float | None
    mean_con: float


class CurvePoint(BaseModel):
    iteration: int
    best: float
    mean: float


class SolveReport(BaseModel):
    """Output document of a single solve."""

    heuristic: HeuristicSourceKind
    visit_order: list[int]
    path: list[int]
    cost: float
    con: float
    seconds: float
    best_iteration: int
    curve: list[CurvePoint]
