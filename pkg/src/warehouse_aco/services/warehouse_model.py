"""Instance construction: distances and seeded TSP / shelf-grid generators."""

from collections import defaultdict

import numpy as np
import structlog
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial.distance import cdist

from warehouse_aco.domain.exceptions import GenerationError
from warehouse_aco.domain.models import (
    DEFAULT_CAPACITY,
    Cargo,
    Edge,
    InstanceKind,
    WarehouseInstance,
)

logger = structlog.get_logger(__name__)

# Shelf-grid geometry in grid units
AISLE_SPACING = 3.0
SLOT_PITCH = 1.0
LEVEL_HEIGHT = 1.0
SPECIAL_PROBABILITY = 0.2


def manhattan_distance(a: Cargo, b: Cargo) -> float:
    """L1 distance between two cargo positions."""
    return abs(a.x - b.x) + abs(a.y - b.y) + abs(a.z - b.z)


def _edges_from_pairs(
    pairs: set[tuple[int, int]], coords: np.ndarray, capacity: float
) -> list[Edge]:
    edges = []
    for u, v in sorted(pairs):
        length = float(np.abs(coords[u] - coords[v]).sum())
        edges.append(Edge(u=u, v=v, capacity=capacity, free_flow_time=length))
    return edges


def _repair_connectivity(pairs: set[tuple[int, int]], dist: np.ndarray) -> int:
    """
    Join components with minimum-spanning-tree edges until connected.

    Returns:
        Number of edges added
    """
    n = dist.shape[0]
    rows, cols = zip(*pairs) if pairs else ((), ())
    adjacency = np.zeros((n, n), dtype=bool)
    adjacency[list(rows), list(cols)] = True
    n_components, labels = connected_components(adjacency, directed=False)
    if n_components == 1:
        return 0

    mst = minimum_spanning_tree(dist).tocoo()
    order = np.lexsort((mst.col, mst.row, mst.data))
    parent = list(range(n_components))

    def find(c: int) -> int:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    added = 0
    for k in order:
        u, v = int(mst.row[k]), int(mst.col[k])
        cu, cv = find(int(labels[u])), find(int(labels[v]))
        if cu != cv:
            parent[cu] = cv
            pairs.add((min(u, v), max(u, v)))
            added += 1
    return added


def gen_tsp_instance(
    n: int,
    seed: int,
    k_neighbors: int = 10,
    capacity: float = DEFAULT_CAPACITY,
    planar: bool = False,
) -> WarehouseInstance:
    """
    Random instance in the unit cube with a k-nearest-neighbour edge set.

    Args:
        n: Number of nodes (node 0 is the depot)
        seed: Generator seed
        k_neighbors: Neighbours per node before symmetrization
        capacity: Capacity of every edge
        planar: Fix z at 0

    Returns:
        Connected TSP-mode instance with unit attributes

    Raises:
        GenerationError: If n < 2 or k_neighbors is not in [1, n - 1]
    """
    if n < 2:
        raise GenerationError(f"n must be >= 2, got {n}")
    if k_neighbors < 1 or k_neighbors >= n:
        raise GenerationError(f"k_neighbors must be in [1, {n - 1}], got {k_neighbors}")

    rng = np.random.default_rng(seed)
    coords = rng.random((n, 3))
    if planar:
        coords[:, 2] = 0.0

    dist = cdist(coords, coords, metric="cityblock")
    pairs: set[tuple[int, int]] = set()
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        order = order[order != i][:k_neighbors]
        for j in order:
            pairs.add((min(i, int(j)), max(i, int(j))))
    repaired = _repair_connectivity(pairs, dist)

    nodes = [Cargo(x=float(x), y=float(y), z=float(z)) for x, y, z in coords]
    instance = WarehouseInstance(
        kind=InstanceKind.TSP,
        depot=0,
        nodes=nodes,
        edges=_edges_from_pairs(pairs, coords, capacity),
    )
    logger.debug(
        "instance_generated",
        kind="tsp",
        n=n,
        seed=seed,
        edges=instance.n_edges,
        repaired_edges=repaired,
    )
    return instance


def gen_warehouse_instance(
    shelves_x: int,
    shelves_y: int,
    levels: int,
    n_cargo: int,
    seed: int,
    capacity: float = DEFAULT_CAPACITY,
) -> WarehouseInstance:
    """
    Pickup instance on a regular shelf grid.

    Aisles run along y at x = 3·a; slot b of level c sits at (3a, 1 + b, c).
    Each aisle has lift columns at its two ends, y = 0 (front) and
    y = shelves_y + 1 (back), and the front ends at level 0 form the
    cross-aisle through the depot at the origin. Lift stops and aisle
    entries are waypoint nodes without cargo (zero size and weight).

    Edges follow the grid: neighbouring occupied slots of one aisle level
    are joined along y and to the lift stops at both ends, lift stops of
    one column are joined across levels, and aisle entries are chained
    along x from the depot. Every edge changes one coordinate and level
    changes only happen in lift columns.

    Node 0 is the depot, nodes 1..n_cargo are the occupied slots and the
    waypoints follow.

    Args:
        shelves_x: Number of aisles
        shelves_y: Slots per aisle level
        levels: Shelf levels
        n_cargo: Occupied slots to sample
        seed: Generator seed
        capacity: Capacity of every edge

    Returns:
        Connected warehouse-mode instance

    Raises:
        GenerationError: If the grid is empty or holds fewer slots than n_cargo
    """
    if min(shelves_x, shelves_y, levels) < 1:
        raise GenerationError("grid dimensions must be positive")
    slots = shelves_x * shelves_y * levels
    if n_cargo < 1 or n_cargo > slots:
        raise GenerationError(f"n_cargo must be in [1, {slots}], got {n_cargo}")

    rng = np.random.default_rng(seed)
    occupied = np.sort(rng.choice(slots, size=n_cargo, replace=False))
    sizes = rng.uniform(0.5, 2.0, size=n_cargo)
    weights = rng.uniform(1.0, 10.0, size=n_cargo)
    special = np.where(rng.random(n_cargo) < SPECIAL_PROBABILITY, 0.5, 1.0)

    aisle, level, pos = np.unravel_index(occupied, (shelves_x, levels, shelves_y))
    nodes = [Cargo(x=0.0, y=0.0, z=0.0)]
    groups: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i in range(n_cargo):
        a, c, b = int(aisle[i]), int(level[i]), int(pos[i])
        nodes.append(
            Cargo(
                x=AISLE_SPACING * a,
                y=SLOT_PITCH * (1 + b),
                z=LEVEL_HEIGHT * c,
                size=float(sizes[i]),
                weight=float(weights[i]),
                special=float(special[i]),
            )
        )
        # slot order within (aisle, level) is ascending b because occupied is sorted
        groups[(a, c)].append(i + 1)

    back_y = SLOT_PITCH * (shelves_y + 1)
    stops: dict[tuple[int, float, int], int] = {(0, 0.0, 0): 0}

    def stop(a: int, y: float, c: int) -> int:
        key = (a, y, c)
        if key not in stops:
            stops[key] = len(nodes)
            nodes.append(
                Cargo(x=AISLE_SPACING * a, y=y, z=LEVEL_HEIGHT * c, size=0.0, weight=0.0)
            )
        return stops[key]

    pairs: set[tuple[int, int]] = set()

    def link(u: int, v: int) -> None:
        if u != v:
            pairs.add((min(u, v), max(u, v)))

    def chain(members: list[int]) -> None:
        for u, v in zip(members[:-1], members[1:]):
            link(u, v)

    entries: list[int] = []
    for a in range(shelves_x):
        present = sorted(c for (aa, c) in groups if aa == a)
        if not present:
            continue
        with_back = len(present) > 1
        for c in present:
            row = [stop(a, 0.0, c), *groups[(a, c)]]
            if with_back:
                row.append(stop(a, back_y, c))
            chain(row)
        chain([stop(a, 0.0, c) for c in sorted({0, *present})])
        if with_back:
            chain([stop(a, back_y, c) for c in present])
        entries.append(stop(a, 0.0, 0))

    chain([0, *entries])

    coords = np.array([c.position for c in nodes])
    instance = WarehouseInstance(
        kind=InstanceKind.WAREHOUSE,
        depot=0,
        nodes=nodes,
        edges=_edges_from_pairs(pairs, coords, capacity),
    )
    logger.debug(
        "instance_generated",
        kind="warehouse",
        slots=slots,
        cargo=n_cargo,
        waypoints=instance.n_nodes - n_cargo - 1,
        seed=seed,
        edges=instance.n_edges,
    )
    return instance
