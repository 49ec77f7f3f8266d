"""Ant system: expert heuristic, congestion-aware costing, tour sampling and pheromone update."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog

from warehouse_aco.domain.exceptions import (
    DeadEndError,
    NonPositiveCostError,
    ZeroDenominatorError,
)
from warehouse_aco.domain.models import (
    AcoParams,
    HeuristicField,
    HeuristicSourceKind,
    HeuristicWeights,
    IterationStats,
    PheromoneField,
    SolveResult,
    Tour,
    TrafficState,
    TransitionStep,
    WarehouseInstance,
)

HeuristicRefresh = Callable[[TrafficState], HeuristicField]


def expert_heuristic(instance: WarehouseInstance, weights: HeuristicWeights) -> HeuristicField:
    """
    Attribute-aware heuristic H = γ·sc / (d + α_h·size + β_h·wt) per edge.

    Sizes and weights of the two endpoints are summed, special factors averaged.

    Raises:
        ZeroDenominatorError: If an edge has a vanishing denominator
    """
    u, v = instance.edge_index[:, 0], instance.edge_index[:, 1]
    attrs = instance.attributes
    size = attrs[u, 0] + attrs[v, 0]
    wt = attrs[u, 1] + attrs[v, 1]
    sc = 0.5 * (attrs[u, 2] + attrs[v, 2])

    denominator = instance.edge_distance + weights.alpha_h * size + weights.beta_h * wt
    bad = np.flatnonzero(denominator <= 0.0)
    if bad.size:
        k = int(bad[0])
        raise ZeroDenominatorError(int(u[k]), int(v[k]))
    return HeuristicField(weights.gamma_h * sc / denominator, HeuristicSourceKind.EXPERT)


def congestion_term(
    edge: int, traffic: TrafficState, delta: float, capacity: float | None = None
) -> float:
    """Congestion penalty t·δ·(tc/cap) of a single edge."""
    cap = traffic.capacity[edge] if capacity is None else capacity
    return float(traffic.free_flow_time[edge] * delta * (traffic.flow[edge] / cap))


def path_cost(
    instance: WarehouseInstance,
    tour: Tour,
    cost_field: HeuristicField,
    traffic: TrafficState,
    delta: float,
) -> float:
    """
    Total cost Σ (1/H + Con) over the walked edges under a fixed traffic state.

    Raises:
        MissingEdgeError: If two consecutive path nodes are not adjacent
    """
    cost = 0.0
    for u, v in tour.edge_list:
        e = instance.edge_id(u, v)
        cost += 1.0 / cost_field.eta[e] + congestion_term(e, traffic, delta)
    return cost


def _softmax(logits: np.ndarray) -> np.ndarray:
    weights = np.exp(logits - logits.max())
    return weights / weights.sum()


def transition_probabilities(
    instance: WarehouseInstance,
    current: int,
    visited: np.ndarray,
    tau: PheromoneField,
    eta: HeuristicField,
    params: AcoParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Selection distribution over the unvisited neighbours of `current`.

    Args:
        visited: Boolean mask over node ids

    Returns:
        (candidate nodes, candidate edge ids, probabilities)

    Raises:
        DeadEndError: If every neighbour is already visited
    """
    nodes = instance.neighbor_nodes[current]
    edges = instance.neighbor_edges[current]
    mask = ~visited[nodes]
    if not mask.any():
        raise DeadEndError(current)
    nodes, edges = nodes[mask], edges[mask]
    logits = params.alpha * np.log(tau.tau[edges]) + params.beta * np.log(eta.eta[edges])
    return nodes, edges, _softmax(logits)


def replay_log_prob(tour: Tour, eta: np.ndarray, beta: float) -> float:
    """Log selection probability of the recorded moves under another heuristic."""
    total = 0.0
    for step in tour.steps:
        logits = step.log_tau + beta * np.log(eta[step.candidate_edges])
        shifted = logits - logits.max()
        total += float(shifted[step.chosen] - np.log(np.exp(shifted).sum()))
    return total


def pheromone_update(
    tau: PheromoneField, tours: Sequence[Tour], params: AcoParams
) -> PheromoneField:
    """
    Evaporate every edge by (1 - ρ) and deposit Q / cost on each edge an ant used.

    Raises:
        NonPositiveCostError: If a tour cost is not strictly positive
    """
    updated = (1.0 - params.rho) * tau.tau
    for tour in tours:
        if not tour.cost > 0.0:
            raise NonPositiveCostError(tour.cost)
        used = np.unique(np.asarray(tour.edges, dtype=np.int64))
        updated[used] += params.q / tour.cost
    return PheromoneField(updated)


@dataclass
class _Walk:
    """Mutable state of one ant while it builds a tour."""

    instance: WarehouseInstance
    inverse_h: np.ndarray
    traffic: TrafficState
    delta: float
    position: int
    path: list[int] = field(default_factory=list)
    edges: list[int] = field(default_factory=list)
    cost: float = 0.0
    con: float = 0.0

    def step(self, edge: int, target: int) -> None:
        self.traffic.traverse(edge)
        penalty = congestion_term(edge, self.traffic, self.delta)
        self.cost += self.inverse_h[edge] + penalty
        self.con += penalty
        self.edges.append(edge)
        self.path.append(target)
        self.position = target

    def detour(self, target: int) -> None:
        route = self.instance.path_between(self.position, target)
        for u, v in zip(route[:-1], route[1:]):
            self.step(self.instance.edge_id(u, v), v)

    def move_to(self, target: int) -> None:
        edge = self.instance.edge_lookup.get((self.position, target))
        if edge is None:
            self.detour(target)
        else:
            self.step(edge, target)


def construct_tour(
    instance: WarehouseInstance,
    log_tau: np.ndarray,
    log_eta: np.ndarray,
    cost_field: HeuristicField,
    traffic: TrafficState,
    params: AcoParams,
    rng: np.random.Generator,
) -> Tour:
    """
    Let one ant build a tour from the depot, updating traffic as it moves.

    When every neighbour is visited the ant detours along a shortest path
    to the nearest unvisited node; detour moves are not sampled.

    Args:
        log_tau: α·log τ per edge
        log_eta: β·log η per edge
        cost_field: Expert heuristic used for costing
    """
    n = instance.n_nodes
    visited = np.zeros(n, dtype=bool)
    visited[instance.depot] = True
    walk = _Walk(
        instance=instance,
        inverse_h=1.0 / cost_field.eta,
        traffic=traffic,
        delta=params.delta,
        position=instance.depot,
        path=[instance.depot],
    )
    order = [instance.depot]
    steps: list[TransitionStep] = []
    log_prob = 0.0

    for _ in range(n - 1):
        current = walk.position
        nodes = instance.neighbor_nodes[current]
        mask = ~visited[nodes]
        if mask.any():
            candidates = nodes[mask]
            edges = instance.neighbor_edges[current][mask]
            pick = 0
            if candidates.size > 1:
                step_log_tau = log_tau[edges]
                probs = _softmax(step_log_tau + log_eta[edges])
                cumulative = np.cumsum(probs)
                pick = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
                pick = min(pick, candidates.size - 1)
                steps.append(TransitionStep(edges, step_log_tau, probs, pick))
                log_prob += float(np.log(probs[pick]))
            target = int(candidates[pick])
            walk.step(int(edges[pick]), target)
        else:
            unvisited = np.flatnonzero(~visited)
            target = int(unvisited[np.argmin(instance.path_lengths[current, unvisited])])
            walk.detour(target)
        visited[target] = True
        order.append(target)

    if instance.closed and walk.position != instance.depot:
        walk.move_to(instance.depot)

    return Tour(
        visit_order=order,
        path=walk.path,
        edges=walk.edges,
        cost=walk.cost,
        con=walk.con,
        log_selection_prob=log_prob,
        steps=steps,
    )


def walk_order(
    instance: WarehouseInstance,
    order: Sequence[int],
    cost_field: HeuristicField,
    traffic: TrafficState,
    delta: float,
) -> Tour:
    """
    Walk a fixed visit order, costing it exactly as an ant would.

    Non-adjacent consecutive nodes are joined by shortest-path detours;
    closed instances return to the depot.
    """
    walk = _Walk(
        instance=instance,
        inverse_h=1.0 / cost_field.eta,
        traffic=traffic,
        delta=delta,
        position=order[0],
        path=[order[0]],
    )
    for target in order[1:]:
        walk.move_to(target)
    if instance.closed and walk.position != instance.depot:
        walk.move_to(instance.depot)
    return Tour(
        visit_order=list(order),
        path=walk.path,
        edges=walk.edges,
        cost=walk.cost,
        con=walk.con,
    )


@dataclass
class AntSystem:
    """
    Ant system bound to one instance.

    Uses dependency injection for the logger; never mutates the instance.
    """

    instance: WarehouseInstance
    params: AcoParams
    cost_field: HeuristicField
    logger: structlog.stdlib.BoundLogger = field(
        default_factory=lambda: structlog.get_logger(__name__)
    )

    def run_iteration(
        self,
        tau: PheromoneField,
        eta: HeuristicField,
        traffic: TrafficState,
        rng: np.random.Generator,
    ) -> list[Tour]:
        """Build one tour per ant, sequentially, sharing the traffic state."""
        log_tau = self.params.alpha * np.log(tau.tau)
        log_eta = self.params.beta * np.log(eta.eta)
        return [
            construct_tour(
                self.instance, log_tau, log_eta, self.cost_field, traffic, self.params, rng
            )
            for _ in range(self.params.n_ants)
        ]

    def solve(self, eta: HeuristicField, refresh: HeuristicRefresh | None = None) -> SolveResult:
        """
        Run the full colony.

        Args:
            eta: Heuristic for the first iteration
            refresh: Optional callback re-evaluating the heuristic from the
                previous iteration's traffic

        Returns:
            Best tour, per-iteration stats, and its congestion under the last
            iteration's traffic
        """
        rng = np.random.default_rng(self.params.seed)
        tau = PheromoneField.uniform(self.instance.n_edges)
        traffic = TrafficState.fresh(self.instance)
        best: Tour | None = None
        best_iteration = 0
        history: list[IterationStats] = []

        for iteration in range(self.params.n_iterations):
            if refresh is not None and iteration > 0:
                eta = refresh(traffic.copy())
            traffic.reset()
            tours = self.run_iteration(tau, eta, traffic, rng)
            tau = pheromone_update(tau, tours, self.params)

            costs = np.array([t.cost for t in tours])
            leader = int(np.argmin(costs))
            if best is None or costs[leader] < best.cost:
                best, best_iteration = tours[leader], iteration
            history.append(
                IterationStats(
                    iteration=iteration,
                    best_cost=float(costs[leader]),
                    mean_cost=float(costs.mean()),
                )
            )
            self.logger.debug(
                "aco_iteration_completed",
                iteration=iteration,
                best_cost=float(costs[leader]),
                mean_cost=float(costs.mean()),
            )

        assert best is not None
        con = sum(congestion_term(e, traffic, self.params.delta) for e in best.edges)
        self.logger.info(
            "aco_solve_completed",
            nodes=self.instance.n_nodes,
            best_cost=best.cost,
            con=con,
            best_iteration=best_iteration,
            heuristic=eta.source.value,
        )
        return SolveResult(best_tour=best, history=history, con=con, best_iteration=best_iteration)


def solve(
    instance: WarehouseInstance,
    eta: HeuristicField,
    params: AcoParams,
    cost_field: HeuristicField | None = None,
    refresh: HeuristicRefresh | None = None,
    logger: structlog.stdlib.BoundLogger | None = None,
) -> SolveResult:
    """
    Solve an instance with a given heuristic.

    Args:
        cost_field: Expert heuristic used for costing; defaults to `eta`
            when that is an expert field, else to the default-weight expert field
    """
    if cost_field is None:
        if eta.source is HeuristicSourceKind.EXPERT:
            cost_field = eta
        else:
            cost_field = expert_heuristic(instance, HeuristicWeights())
    system = AntSystem(
        instance=instance,
        params=params,
        cost_field=cost_field,
        logger=logger or structlog.get_logger(__name__),
    )
    return system.solve(eta, refresh=refresh)
