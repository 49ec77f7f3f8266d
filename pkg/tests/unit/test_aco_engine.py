"""Unit tests for the ant system."""

import numpy as np
import pytest
from pydantic import ValidationError
from pytest_mock import MockerFixture

from tests.conftest import InstanceFactory
from warehouse_aco.domain.exceptions import (
    DeadEndError,
    MissingEdgeError,
    NonPositiveCostError,
    ZeroDenominatorError,
)
from warehouse_aco.domain.models import (
    AcoParams,
    Cargo,
    Edge,
    HeuristicField,
    HeuristicWeights,
    InstanceKind,
    PheromoneField,
    Tour,
    TrafficState,
    WarehouseInstance,
)
from warehouse_aco.services.aco_engine import (
    AntSystem,
    congestion_term,
    construct_tour,
    expert_heuristic,
    path_cost,
    pheromone_update,
    replay_log_prob,
    solve,
    transition_probabilities,
    walk_order,
)
from warehouse_aco.services.warehouse_model import gen_tsp_instance

pytestmark = pytest.mark.unit

DISTANCE_ONLY = HeuristicWeights(alpha_h=0.0, beta_h=0.0, gamma_h=1.0)


def _tour(path: list[int], cost: float = 1.0, edges: list[int] | None = None) -> Tour:
    return Tour(visit_order=path, path=path, edges=edges or [], cost=cost)


def _star(make_instance: InstanceFactory) -> WarehouseInstance:
    """Depot 0 joined to leaves 1 and 2 only."""
    return make_instance([(0, 0, 0), (1, 0, 0), (0, 1, 0)], edges=[(0, 1), (0, 2)])


class TestExpertHeuristic:
    """Tests for expert_heuristic."""

    def test_distance_only(self, make_instance: InstanceFactory) -> None:
        """Test H = γ·sc / d with zero attribute weights."""
        instance = make_instance([(0, 0, 0), (4, 0, 0)])

        eta = expert_heuristic(instance, DISTANCE_ONLY)

        assert eta.eta[0] == pytest.approx(0.25)

    def test_attribute_terms(self) -> None:
        """Test size and weight sums enter the denominator."""
        instance = WarehouseInstance(
            nodes=[
                Cargo(x=0, y=0, z=0, size=0.5, weight=0.5),
                Cargo(x=2, y=0, z=0, size=0.5, weight=0.5),
            ],
            edges=[Edge(u=0, v=1, free_flow_time=2.0)],
        )

        eta = expert_heuristic(instance, HeuristicWeights(alpha_h=1.0, beta_h=1.0, gamma_h=2.0))

        assert eta.eta[0] == pytest.approx(0.5)

    def test_special_factor_is_averaged(self) -> None:
        """Test the special factors of both endpoints are averaged."""
        instance = WarehouseInstance(
            nodes=[Cargo(x=0, y=0, z=0, special=0.5), Cargo(x=1, y=0, z=0)],
            edges=[Edge(u=0, v=1, free_flow_time=1.0)],
        )

        assert expert_heuristic(instance, DISTANCE_ONLY).eta[0] == pytest.approx(0.75)

    def test_linear_in_gamma(self, triangle: WarehouseInstance) -> None:
        """Test doubling γ doubles every entry."""
        base = expert_heuristic(triangle, HeuristicWeights(gamma_h=1.0)).eta
        doubled = expert_heuristic(triangle, HeuristicWeights(gamma_h=2.0)).eta

        assert np.allclose(doubled, 2.0 * base)

    def test_zero_denominator(self) -> None:
        """Test co-located endpoints with zero attribute weights raise."""
        instance = WarehouseInstance(
            nodes=[Cargo(x=0, y=0, z=0), Cargo(x=0, y=0, z=0)],
            edges=[Edge(u=0, v=1, free_flow_time=1.0)],
        )

        with pytest.raises(ZeroDenominatorError):
            expert_heuristic(instance, DISTANCE_ONLY)


class TestCongestion:
    """Tests for congestion_term and path_cost."""

    def _traffic(self, flow: float) -> TrafficState:
        return TrafficState(np.array([flow]), np.array([1.0]), np.array([20.0]))

    def test_congestion_example(self) -> None:
        """Test t·δ·tc/cap with t=1, δ=0.5, tc=10, cap=20."""
        assert congestion_term(0, self._traffic(10.0), 0.5) == pytest.approx(0.25)

    def test_zero_delta(self) -> None:
        """Test δ = 0 disables the penalty."""
        assert congestion_term(0, self._traffic(15.0), 0.0) == 0.0

    def test_zero_flow(self) -> None:
        """Test an idle edge has no penalty."""
        assert congestion_term(0, self._traffic(0.0), 0.5) == 0.0

    def test_capacity_override(self) -> None:
        """Test an explicit capacity replaces the stored one."""
        assert congestion_term(0, self._traffic(10.0), 0.5, capacity=10.0) == pytest.approx(0.5)

    def test_monotone_in_flow(self) -> None:
        """Test the penalty never decreases as flow grows."""
        values = [congestion_term(0, self._traffic(float(f)), 0.3) for f in range(30)]

        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_single_edge_cost(self, make_instance: InstanceFactory) -> None:
        """Test one edge with H = 0.5 and δ = 0 costs 2."""
        instance = make_instance([(0, 0, 0), (1, 0, 0)])
        traffic = TrafficState.fresh(instance)

        cost = path_cost(instance, _tour([0, 1]), HeuristicField(np.array([0.5])), traffic, 0.0)

        assert cost == pytest.approx(2.0)

    def test_unit_triangle_cost(self, triangle: WarehouseInstance) -> None:
        """Test a closed tour over three unit-H edges costs 3."""
        unit = HeuristicField(np.ones(3))

        cost = path_cost(triangle, _tour([0, 1, 2, 0]), unit, TrafficState.fresh(triangle), 0.0)

        assert cost == pytest.approx(3.0)

    def test_congested_cost_grows(self, triangle: WarehouseInstance) -> None:
        """Test loading the walked edges raises the cost."""
        unit = HeuristicField(np.ones(3))
        tour = _tour([0, 1, 2, 0])
        idle = TrafficState.fresh(triangle)
        busy = idle.copy()
        busy.flow[:] = 5.0

        assert path_cost(triangle, tour, unit, busy, 0.5) > path_cost(
            triangle, tour, unit, idle, 0.5
        )

    def test_missing_edge(self, make_instance: InstanceFactory) -> None:
        """Test a path jumping between non-adjacent nodes raises."""
        line = make_instance([(0, 0, 0), (1, 0, 0), (2, 0, 0)], edges=[(0, 1), (1, 2)])

        with pytest.raises(MissingEdgeError):
            path_cost(
                line, _tour([0, 2]), HeuristicField(np.ones(2)), TrafficState.fresh(line), 0.0
            )


class TestTransitionProbabilities:
    """Tests for transition_probabilities."""

    def _visited(self, n: int, *nodes: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[list(nodes)] = True
        return mask

    @pytest.mark.parametrize(
        ("tau", "eta", "alpha", "beta", "expected"),
        [
            ((1.0, 1.0), (1.0, 1.0), 1.0, 2.0, (0.5, 0.5)),
            ((4.0, 1.0), (1.0, 1.0), 1.0, 0.0, (0.8, 0.2)),
            ((1.0, 1.0), (3.0, 1.0), 1.0, 1.0, (0.75, 0.25)),
        ],
    )
    def test_examples(
        self,
        make_instance: InstanceFactory,
        tau: tuple[float, float],
        eta: tuple[float, float],
        alpha: float,
        beta: float,
        expected: tuple[float, float],
    ) -> None:
        """Test the normalized τ^α η^β distribution on hand-computed cases."""
        star = _star(make_instance)

        nodes, edges, probs = transition_probabilities(
            star,
            0,
            self._visited(3, 0),
            PheromoneField(np.array(tau)),
            HeuristicField(np.array(eta)),
            AcoParams(alpha=alpha, beta=beta),
        )

        assert nodes.tolist() == [1, 2]
        assert edges.tolist() == [0, 1]
        assert probs == pytest.approx(expected)

    def test_visited_neighbours_excluded(self, make_instance: InstanceFactory) -> None:
        """Test visited nodes get no probability mass."""
        star = _star(make_instance)

        nodes, _, probs = transition_probabilities(
            star,
            0,
            self._visited(3, 0, 1),
            PheromoneField.uniform(2),
            HeuristicField(np.ones(2)),
            AcoParams(),
        )

        assert nodes.tolist() == [2]
        assert probs.tolist() == [1.0]

    def test_dead_end(self, make_instance: InstanceFactory) -> None:
        """Test a node whose neighbours are all visited raises DeadEndError."""
        star = _star(make_instance)

        with pytest.raises(DeadEndError):
            transition_probabilities(
                star,
                1,
                self._visited(3, 0, 1),
                PheromoneField.uniform(2),
                HeuristicField(np.ones(2)),
                AcoParams(),
            )

    def test_normalized_on_random_states(self) -> None:
        """Test distributions sum to 1 across many random states."""
        rng = np.random.default_rng(42)
        instance = gen_tsp_instance(15, seed=4, k_neighbors=5)
        checked = 0
        while checked < 1000:
            current = int(rng.integers(instance.n_nodes))
            visited = rng.random(instance.n_nodes) < 0.4
            visited[current] = True
            tau = PheromoneField(rng.uniform(1e-3, 10.0, instance.n_edges))
            eta = HeuristicField(rng.uniform(1e-3, 10.0, instance.n_edges))
            params = AcoParams(alpha=rng.uniform(0, 3), beta=rng.uniform(0, 5))
            try:
                _, _, probs = transition_probabilities(
                    instance, current, visited, tau, eta, params
                )
            except DeadEndError:
                continue

            assert abs(probs.sum() - 1.0) <= 1e-9
            assert np.all(probs >= 0.0)
            checked += 1

    @pytest.mark.parametrize("factor", [1e-3, 0.5, 7.0, 1e4])
    def test_heuristic_scale_invariance(self, factor: float) -> None:
        """Test multiplying every η by c > 0 leaves the distribution unchanged."""
        rng = np.random.default_rng(7)
        instance = gen_tsp_instance(12, seed=1, k_neighbors=6)
        visited = np.zeros(instance.n_nodes, dtype=bool)
        visited[[0, 3]] = True
        tau = PheromoneField(rng.uniform(0.1, 5.0, instance.n_edges))
        eta = HeuristicField(rng.uniform(0.1, 5.0, instance.n_edges))
        params = AcoParams(alpha=1.0, beta=2.0)

        _, _, base = transition_probabilities(instance, 0, visited, tau, eta, params)
        _, _, scaled = transition_probabilities(
            instance, 0, visited, tau, eta.scaled(factor), params
        )

        assert np.max(np.abs(base - scaled)) <= 1e-12


class TestPheromoneUpdate:
    """Tests for pheromone_update."""

    def test_evaporation_only(self) -> None:
        """Test an unused edge decays to (1 - ρ)·τ."""
        tau = pheromone_update(PheromoneField.uniform(2), [], AcoParams(rho=0.1))

        assert tau.tau == pytest.approx([0.9, 0.9])

    def test_single_deposit(self) -> None:
        """Test one ant with cost 4 deposits 0.25 on its edge."""
        tours = [_tour([0, 1], cost=4.0, edges=[0])]

        tau = pheromone_update(PheromoneField.uniform(2), tours, AcoParams(rho=0.1, q=1.0))

        assert tau.tau[0] - 0.9 == pytest.approx(0.25)
        assert tau.tau[1] == pytest.approx(0.9)

    def test_deposits_add_up(self) -> None:
        """Test two ants with costs 2 and 4 deposit 0.75 in total."""
        tours = [_tour([0, 1], cost=2.0, edges=[0]), _tour([0, 1], cost=4.0, edges=[0])]

        tau = pheromone_update(PheromoneField.uniform(1), tours, AcoParams(rho=0.1, q=1.0))

        assert tau.tau[0] - 0.9 == pytest.approx(0.75)

    def test_repeated_edge_deposits_once(self) -> None:
        """Test an ant walking an edge twice deposits on it once."""
        tours = [_tour([0, 1, 0], cost=2.0, edges=[0, 0])]

        tau = pheromone_update(PheromoneField.uniform(1), tours, AcoParams(rho=0.5, q=1.0))

        assert tau.tau[0] == pytest.approx(1.0)

    def test_geometric_decay(self) -> None:
        """Test 50 deposit-free steps match τ·(1 - ρ)^t."""
        rng = np.random.default_rng(3)
        start = rng.uniform(0.5, 2.0, 10)
        params = AcoParams(rho=0.13)
        tau = PheromoneField(start.copy())
        for step in range(1, 51):
            tau = pheromone_update(tau, [], params)

            assert np.allclose(tau.tau, start * (1 - 0.13) ** step, rtol=1e-12, atol=0.0)

    def test_stays_positive(self) -> None:
        """Test τ stays strictly positive through many random updates."""
        rng = np.random.default_rng(5)
        tau = PheromoneField.uniform(6)
        for _ in range(1000):
            params = AcoParams(rho=float(rng.uniform(0.01, 0.3)), q=float(rng.uniform(0.1, 2.0)))
            tours = [
                _tour([0], cost=float(rng.uniform(0.1, 50.0)), edges=rng.choice(6, 3).tolist())
                for _ in range(int(rng.integers(0, 4)))
            ]
            tau = pheromone_update(tau, tours, params)

            assert np.all(tau.tau > 0.0)

    def test_non_positive_cost(self) -> None:
        """Test a zero-cost tour is rejected."""
        with pytest.raises(NonPositiveCostError):
            pheromone_update(PheromoneField.uniform(1), [_tour([0], cost=0.0)], AcoParams())


class TestConstructTour:
    """Tests for construct_tour and walk_order."""

    def _construct(
        self,
        instance: WarehouseInstance,
        params: AcoParams,
        rng: np.random.Generator,
        eta: HeuristicField | None = None,
        traffic: TrafficState | None = None,
    ) -> Tour:
        cost_field = expert_heuristic(instance, HeuristicWeights())
        eta = eta or cost_field
        return construct_tour(
            instance,
            params.alpha * np.log(PheromoneField.uniform(instance.n_edges).tau),
            params.beta * np.log(eta.eta),
            cost_field,
            traffic or TrafficState.fresh(instance),
            params,
            rng,
        )

    def test_two_node_tour(self, make_instance: InstanceFactory, rng: np.random.Generator) -> None:
        """Test the forced tour of a two-node instance has probability 1."""
        instance = make_instance([(0, 0, 0), (1, 0, 0)])

        tour = self._construct(instance, AcoParams(), rng)

        assert tour.visit_order == [0, 1]
        assert tour.path == [0, 1, 0]
        assert tour.log_selection_prob == 0.0
        assert tour.steps == []

    def test_collinear_prefers_near_node(
        self, make_instance: InstanceFactory, rng: np.random.Generator
    ) -> None:
        """Test visiting 1 then 2 is at least as likely as 2 then 1 under η = 1/d."""
        line = make_instance([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
        eta = HeuristicField(1.0 / line.edge_distance)
        params = AcoParams(alpha=0.0, beta=1.0)

        orders = [self._construct(line, params, rng, eta).visit_order for _ in range(3000)]
        near_first = sum(order == [0, 1, 2] for order in orders) / len(orders)

        assert near_first >= 0.5
        assert near_first == pytest.approx(2.0 / 3.0, abs=0.05)

    def test_collinear_log_probabilities(
        self, make_instance: InstanceFactory, rng: np.random.Generator
    ) -> None:
        """Test the recorded log-probability matches the enumerated order."""
        line = make_instance([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
        eta = HeuristicField(1.0 / line.edge_distance)
        params = AcoParams(alpha=0.0, beta=1.0)

        for _ in range(20):
            tour = self._construct(line, params, rng, eta)
            expected = 2.0 / 3.0 if tour.visit_order == [0, 1, 2] else 1.0 / 3.0

            assert tour.log_selection_prob == pytest.approx(np.log(expected))

    def test_tours_are_valid_walks(self, rng: np.random.Generator) -> None:
        """Test every tour visits each node once and walks existing edges."""
        instance = gen_tsp_instance(25, seed=8, k_neighbors=2)
        params = AcoParams(delta=0.5)

        for _ in range(20):
            tour = self._construct(instance, params, rng)

            assert sorted(tour.visit_order) == list(range(25))
            assert tour.visit_order[0] == instance.depot
            assert tour.path[0] == tour.path[-1] == instance.depot
            assert tour.edges == [instance.edge_id(u, v) for u, v in tour.edge_list]

    def test_dead_end_detours(self, make_instance: InstanceFactory) -> None:
        """Test an ant stuck on a leaf detours back through the hub."""
        hub = make_instance(
            [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], edges=[(0, 1), (0, 2), (0, 3)]
        )

        tour = self._construct(hub, AcoParams(), np.random.default_rng(0))

        assert sorted(tour.visit_order) == [0, 1, 2, 3]
        assert len(tour.path) == 7
        assert tour.path[::2] == [0, 0, 0, 0]
        assert len(tour.steps) == 1

    def test_open_instance_does_not_return(self, make_instance: InstanceFactory) -> None:
        """Test warehouse-mode paths end at the last pickup."""
        line = make_instance(
            [(0, 0, 0), (1, 0, 0), (2, 0, 0)], edges=[(0, 1), (1, 2)], kind=InstanceKind.WAREHOUSE
        )

        tour = self._construct(line, AcoParams(), np.random.default_rng(0))

        assert tour.path == [0, 1, 2]

    def test_zero_delta_cost_is_inverse_heuristic_sum(self, rng: np.random.Generator) -> None:
        """Test with δ = 0 the cost is exactly Σ 1/H and congestion is 0."""
        instance = gen_tsp_instance(12, seed=2, k_neighbors=4)
        inverse_h = 1.0 / expert_heuristic(instance, HeuristicWeights()).eta

        tour = self._construct(instance, AcoParams(delta=0.0), rng)

        assert tour.cost == pytest.approx(sum(inverse_h[e] for e in tour.edges), abs=1e-12)
        assert tour.con == 0.0

    def test_congestion_counts_shared_traffic(self, rng: np.random.Generator) -> None:
        """Test cost minus Σ 1/H equals the accumulated congestion."""
        instance = gen_tsp_instance(10, seed=6, k_neighbors=9)
        inverse_h = 1.0 / expert_heuristic(instance, HeuristicWeights()).eta
        traffic = TrafficState.fresh(instance)
        traffic.flow[:] = 4.0

        tour = self._construct(instance, AcoParams(delta=0.5), rng, traffic=traffic)

        assert tour.con > 0.0
        assert tour.cost - sum(inverse_h[e] for e in tour.edges) == pytest.approx(tour.con)
        assert traffic.flow.sum() == pytest.approx(4.0 * instance.n_edges + len(tour.edges))

    def test_replay_matches_sampling(self, rng: np.random.Generator) -> None:
        """Test replaying recorded steps reproduces the sampled log-probability."""
        instance = gen_tsp_instance(14, seed=9, k_neighbors=5)
        eta = expert_heuristic(instance, HeuristicWeights())
        params = AcoParams(alpha=1.0, beta=2.0)

        for _ in range(10):
            tour = self._construct(instance, params, rng, eta)

            assert replay_log_prob(tour, eta.eta, params.beta) == pytest.approx(
                tour.log_selection_prob, abs=1e-12
            )

    def test_walk_order_unit_square(self, unit_square: WarehouseInstance) -> None:
        """Test the perimeter order of a unit square costs 4 under H = 1/d."""
        cost_field = expert_heuristic(unit_square, DISTANCE_ONLY)

        tour = walk_order(
            unit_square, [0, 1, 2, 3], cost_field, TrafficState.fresh(unit_square), 0.0
        )

        assert tour.path == [0, 1, 2, 3, 0]
        assert tour.cost == pytest.approx(4.0)

    def test_walk_order_detours(self, make_instance: InstanceFactory) -> None:
        """Test non-adjacent consecutive nodes are joined by shortest paths."""
        line = make_instance([(0, 0, 0), (1, 0, 0), (2, 0, 0)], edges=[(0, 1), (1, 2)])
        cost_field = expert_heuristic(line, DISTANCE_ONLY)

        tour = walk_order(line, [0, 2, 1], cost_field, TrafficState.fresh(line), 0.0)

        assert tour.path == [0, 1, 2, 1, 0]
        assert tour.cost == pytest.approx(4.0)


class TestSolve:
    """Tests for AntSystem.solve and solve."""

    def test_zero_iterations_rejected(self) -> None:
        """Test a colony with no iterations cannot be configured."""
        with pytest.raises(ValidationError):
            AcoParams(n_iterations=0)

    def test_deterministic(self) -> None:
        """Test a fixed seed reproduces the best tour and statistics."""
        instance = gen_tsp_instance(15, seed=3, k_neighbors=5)
        eta = expert_heuristic(instance, HeuristicWeights())
        params = AcoParams(n_ants=8, n_iterations=10, seed=21)

        first = solve(instance, eta, params)
        second = solve(instance, eta, params)

        assert first.best_tour.visit_order == second.best_tour.visit_order
        assert first.best_tour.cost == second.best_tour.cost
        assert first.con == second.con
        assert [s.model_dump() for s in first.history] == [s.model_dump() for s in second.history]

    def test_history_and_best(self) -> None:
        """Test one stats row per iteration and the best tour matches its row."""
        instance = gen_tsp_instance(12, seed=5, k_neighbors=4)
        eta = expert_heuristic(instance, HeuristicWeights())

        result = solve(instance, eta, AcoParams(n_ants=5, n_iterations=7, seed=1))

        assert [s.iteration for s in result.history] == list(range(7))
        assert result.best_tour.cost == min(s.best_cost for s in result.history)
        assert result.history[result.best_iteration].best_cost == result.best_tour.cost
        assert all(s.best_cost <= s.mean_cost for s in result.history)

    def test_zero_delta_reports_no_congestion(self) -> None:
        """Test δ = 0 yields con = 0 and cost Σ 1/H."""
        instance = gen_tsp_instance(10, seed=4, k_neighbors=9)
        eta = expert_heuristic(instance, HeuristicWeights())

        result = solve(instance, eta, AcoParams(n_ants=6, n_iterations=5, delta=0.0))
        inverse_h = 1.0 / eta.eta

        assert result.con == 0.0
        assert result.best_tour.cost == pytest.approx(
            sum(inverse_h[e] for e in result.best_tour.edges), abs=1e-12
        )

    def test_refresh_called_between_iterations(self, mocker: MockerFixture) -> None:
        """Test the refresh callback sees the previous iteration's traffic."""
        instance = gen_tsp_instance(10, seed=2, k_neighbors=3)
        eta = expert_heuristic(instance, HeuristicWeights())
        refresh = mocker.Mock(return_value=eta)
        params = AcoParams(n_ants=3, n_iterations=4)
        system = AntSystem(instance=instance, params=params, cost_field=eta)

        system.solve(eta, refresh=refresh)

        assert refresh.call_count == 3
        for call in refresh.call_args_list:
            traffic = call.args[0]
            assert isinstance(traffic, TrafficState)
            assert traffic.flow.sum() > 0.0

    def test_learned_field_costed_with_expert(self) -> None:
        """Test costs use the expert heuristic when η comes from elsewhere."""
        instance = gen_tsp_instance(9, seed=1, k_neighbors=8)
        expert = expert_heuristic(instance, HeuristicWeights())
        flat = HeuristicField(np.full(instance.n_edges, 0.5))

        result = solve(
            instance, flat, AcoParams(n_ants=4, n_iterations=3, delta=0.0), cost_field=expert
        )

        inverse_h = 1.0 / expert.eta
        assert result.best_tour.cost == pytest.approx(
            sum(inverse_h[e] for e in result.best_tour.edges)
        )
