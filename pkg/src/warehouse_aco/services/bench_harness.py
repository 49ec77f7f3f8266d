"""Benchmark harness: exact oracle, suite runner and per-method summaries."""

import itertools
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from joblib import Parallel, delayed

from warehouse_aco.adapters.heuristics import ExpertHeuristic, LearnedHeuristic
from warehouse_aco.adapters.storage.instance_store import load_instance
from warehouse_aco.adapters.storage.results_store import results_frame
from warehouse_aco.domain.exceptions import (
    BenchError,
    EmptyResultsError,
    MissingCheckpointError,
    SizeBoundError,
)
from warehouse_aco.domain.models import (
    BenchResult,
    HeuristicField,
    HeuristicWeights,
    InstanceEntry,
    MethodSpec,
    MethodSummary,
    SuiteConfig,
    Tour,
    TrafficState,
    WarehouseInstance,
)
from warehouse_aco.services.aco_engine import expert_heuristic, solve, walk_order
from warehouse_aco.services.warehouse_model import gen_tsp_instance, gen_warehouse_instance

logger = structlog.get_logger(__name__)

DP_BOUND = 12
PERMUTATION_BOUND = 9


def _inverse_cost_matrix(instance: WarehouseInstance, cost_field: HeuristicField) -> np.ndarray:
    n = instance.n_nodes
    matrix = np.full((n, n), np.inf)
    u, v = instance.edge_index[:, 0], instance.edge_index[:, 1]
    matrix[u, v] = matrix[v, u] = 1.0 / cost_field.eta
    return matrix


def held_karp(instance: WarehouseInstance, cost_field: HeuristicField) -> list[int]:
    """Visit order minimizing Σ 1/H by dynamic programming over subsets."""
    depot = instance.depot
    others = [v for v in range(instance.n_nodes) if v != depot]
    m = len(others)
    costs = _inverse_cost_matrix(instance, cost_field)
    inner = costs[np.ix_(others, others)]

    size = 1 << m
    best = np.full((size, m), np.inf)
    parent = np.full((size, m), -1, dtype=np.int64)
    for j in range(m):
        best[1 << j, j] = costs[depot, others[j]]

    for mask in range(1, size):
        members = [j for j in range(m) if mask >> j & 1]
        if len(members) < 2:
            continue
        for j in members:
            rest = mask ^ (1 << j)
            candidates = best[rest] + inner[:, j]
            k = int(np.argmin(candidates))
            best[mask, j] = candidates[k]
            parent[mask, j] = k

    full = size - 1
    closing = best[full] + (costs[others, depot] if instance.closed else 0.0)
    last = int(np.argmin(closing))

    order: list[int] = []
    mask = full
    while last >= 0:
        order.append(others[last])
        mask, last = mask ^ (1 << last), int(parent[mask, last])
    order.append(depot)
    order.reverse()
    return order


def exhaustive_search(
    instance: WarehouseInstance, cost_field: HeuristicField, delta: float
) -> list[int]:
    """
    Visit order minimizing the congestion-aware cost over all permutations.

    Flow is simulated from a fresh state, so an edge walked twice pays more.
    """
    depot = instance.depot
    others = [v for v in range(instance.n_nodes) if v != depot]
    perms = np.array(list(itertools.permutations(others)), dtype=np.int64).reshape(-1, len(others))
    columns = [np.full((perms.shape[0], 1), depot), perms]
    if instance.closed:
        columns.append(np.full((perms.shape[0], 1), depot))
    paths = np.hstack(columns)

    edge_ids = np.full((instance.n_nodes, instance.n_nodes), -1, dtype=np.int64)
    u, v = instance.edge_index[:, 0], instance.edge_index[:, 1]
    edge_ids[u, v] = edge_ids[v, u] = np.arange(instance.n_edges)
    walked = edge_ids[paths[:, :-1], paths[:, 1:]]

    # traversal count of each edge at the moment it is walked
    same = walked[:, :, None] == walked[:, None, :]
    flow = np.tril(same).sum(axis=2)

    inverse_h = 1.0 / cost_field.eta
    penalty = instance.free_flow_time[walked] * delta * flow / instance.capacity[walked]
    totals = (inverse_h[walked] + penalty).sum(axis=1)
    return [depot, *perms[int(np.argmin(totals))].tolist()]


def brute_force_tsp(
    instance: WarehouseInstance,
    delta: float,
    weights: HeuristicWeights | None = None,
) -> Tour:
    """
    Exact minimum-cost tour of a small complete instance.

    Held-Karp over 1/H when δ = 0 (n ≤ 12), exhaustive permutations otherwise
    (n ≤ 9). Open instances get open paths.

    Raises:
        SizeBoundError: If the instance is too large or not complete
    """
    n = instance.n_nodes
    bound = DP_BOUND if delta == 0.0 else PERMUTATION_BOUND
    if n > bound:
        raise SizeBoundError(n, bound)
    if not instance.is_complete:
        raise SizeBoundError(n, bound, "instance graph is not complete")

    cost_field = expert_heuristic(instance, weights or HeuristicWeights())
    if delta == 0.0:
        order = held_karp(instance, cost_field)
    else:
        order = exhaustive_search(instance, cost_field, delta)
    return walk_order(instance, order, cost_field, TrafficState.fresh(instance), delta)


def resolve_instance(entry: InstanceEntry, base_dir: Path | None = None) -> WarehouseInstance:
    """Load or generate one suite instance."""
    if entry.path is not None:
        path = entry.path if base_dir is None or entry.path.is_absolute() else base_dir / entry.path
        return load_instance(path)
    if entry.generator == "tsp":
        return gen_tsp_instance(entry.n, entry.seed, min(entry.k, entry.n - 1), planar=entry.planar)
    return gen_warehouse_instance(
        entry.shelves_x, entry.shelves_y, entry.levels, entry.cargo, entry.seed
    )


@dataclass(frozen=True)
class _Cell:
    method: MethodSpec
    label: str
    seed: int


def _run_cell(
    cell: _Cell,
    instance: WarehouseInstance,
    suite: SuiteConfig,
    learned: LearnedHeuristic | None,
) -> BenchResult:
    weights = suite.heuristic_weights
    fresh = TrafficState.fresh(instance)
    if cell.method.heuristic == "exact":
        started = time.perf_counter()
        tour = brute_force_tsp(instance, suite.delta, weights)
        seconds = time.perf_counter() - started
        cost, con = tour.cost, tour.con
    else:
        expert = ExpertHeuristic(weights)
        cost_field = expert.evaluate(instance, fresh)
        source = expert if learned is None else learned
        started = time.perf_counter()
        eta = source.evaluate(instance, fresh)
        result = solve(
            instance,
            eta,
            suite.aco_params(cell.seed),
            cost_field=cost_field,
            refresh=source.refresher(instance),
        )
        seconds = time.perf_counter() - started
        cost, con = result.best_tour.cost, result.con

    logger.info(
        "suite_cell_completed",
        method=cell.method.name,
        instance=cell.label,
        seed=cell.seed,
        cost=cost,
        con=con,
        seconds=round(seconds, 3),
    )
    return BenchResult(
        method=cell.method.name,
        instance=cell.label,
        seed=cell.seed,
        seconds=round(seconds, 3),
        cost=cost,
        con=con,
    )


def _load_models(
    methods: Sequence[MethodSpec], weights: HeuristicWeights, base_dir: Path | None
) -> dict[str, LearnedHeuristic]:
    models = {}
    for method in methods:
        if method.heuristic != "learned":
            continue
        path = method.checkpoint
        if path is not None and base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if path is None or not path.is_file():
            raise MissingCheckpointError(method.name, None if path is None else str(path))
        models[method.name] = LearnedHeuristic.from_checkpoint(path, weights)
    return models


def apply_gaps(results: list[BenchResult], baseline: str | None) -> list[BenchResult]:
    """Percentage gap of every result to the baseline method on the same cell."""
    if baseline is None:
        return results
    reference = {(r.instance, r.seed): r.cost for r in results if r.method == baseline}
    return [
        r.model_copy(
            update={
                "gap_pct": 100.0 * (r.cost - reference[(r.instance, r.seed)])
                / reference[(r.instance, r.seed)]
            }
        )
        if (r.instance, r.seed) in reference
        else r
        for r in results
    ]


def run_suite(suite: SuiteConfig, base_dir: Path | None = None) -> list[BenchResult]:
    """
    Run every (method, instance, seed) cell and attach baseline gaps.

    Args:
        suite: Suite description
        base_dir: Directory that relative instance and checkpoint paths
            are resolved against

    Raises:
        MissingCheckpointError: If a learned method has no checkpoint file
        BenchError: If the baseline is not one of the suite methods
    """
    names = [m.name for m in suite.methods]
    if suite.baseline is not None and suite.baseline not in names:
        raise BenchError(f"baseline {suite.baseline!r} is not a suite method")
    models = _load_models(suite.methods, suite.heuristic_weights, base_dir)

    instances = [resolve_instance(entry, base_dir) for entry in suite.instances]
    labels = [entry.label for entry in suite.instances]
    jobs = [
        (_Cell(method, label, seed), instance)
        for method in suite.methods
        for label, instance in zip(labels, instances)
        for seed in suite.seeds
    ]
    logger.info("suite_started", cells=len(jobs), n_jobs=suite.n_jobs)

    results = Parallel(n_jobs=suite.n_jobs)(
        delayed(_run_cell)(cell, instance, suite, models.get(cell.method.name))
        for cell, instance in jobs
    )
    return apply_gaps(list(results), suite.baseline)


def summarize(results: Sequence[BenchResult]) -> list[MethodSummary]:
    """
    Per-method means with counts, ordered by method name.

    Raises:
        EmptyResultsError: If there are no results
    """
    if not results:
        raise EmptyResultsError()
    frame = results_frame(results)
    grouped = frame.groupby("method", sort=True).agg(
        count=("cost", "size"),
        mean_seconds=("seconds", "mean"),
        mean_cost=("cost", "mean"),
        mean_gap_pct=("gap_pct", "mean"),
        mean_con=("con", "mean"),
    )
    return [
        MethodSummary(
            method=str(method),
            count=int(row["count"]),
            mean_seconds=float(row["mean_seconds"]),
            mean_cost=float(row["mean_cost"]),
            mean_gap_pct=None if pd.isna(row["mean_gap_pct"]) else float(row["mean_gap_pct"]),
            mean_con=float(row["mean_con"]),
        )
        for method, row in grouped.iterrows()
    ]
