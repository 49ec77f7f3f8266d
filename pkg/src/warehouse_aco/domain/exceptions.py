"""Custom exception hierarchy for warehouse ACO."""


class WarehouseAcoError(Exception):
    """Base exception for all warehouse ACO errors."""

    pass


# Instance errors
class InstanceError(WarehouseAcoError):
    """Base class for instance construction and validation errors."""

    pass


class InvalidInstanceError(InstanceError):
    """Instance violates a structural invariant."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Invalid instance: {reason}")


class DisconnectedGraphError(InstanceError):
    """Edge set does not connect every node."""

    def __init__(self, n_components: int) -> None:
        self.n_components = n_components
        super().__init__(f"Graph is disconnected ({n_components} components)")


class GenerationError(InstanceError):
    """Generator arguments are out of range."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Cannot generate instance: {reason}")


# Solver errors
class SolverError(WarehouseAcoError):
    """Base class for ant colony errors."""

    pass


class DeadEndError(SolverError):
    """Every neighbour of the current node is already visited."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"No unvisited neighbour from node {node}")


class MissingEdgeError(SolverError):
    """A tour uses a node pair that is not an edge of the instance."""

    def __init__(self, u: int, v: int) -> None:
        self.u = u
        self.v = v
        super().__init__(f"No edge between nodes {u} and {v}")


class ZeroDenominatorError(SolverError):
    """Expert heuristic denominator vanished on an edge."""

    def __init__(self, u: int, v: int) -> None:
        self.u = u
        self.v = v
        super().__init__(f"Heuristic denominator is zero on edge ({u}, {v})")


class NonPositiveCostError(SolverError):
    """A tour cost used for pheromone deposit is not strictly positive."""

    def __init__(self, cost: float) -> None:
        self.cost = cost
        super().__init__(f"Tour cost must be positive, got {cost}")


# Model errors
class ModelError(WarehouseAcoError):
    """Base class for heuristic network errors."""

    pass


class ShapeMismatchError(ModelError):
    """Array shapes do not agree with the network configuration."""

    def __init__(self, name: str, expected: tuple[int, ...], actual: tuple[int, ...]) -> None:
        self.name = name
        self.expected = expected
        self.actual = actual
        super().__init__(f"Shape mismatch for {name}: expected {expected}, got {actual}")


class IsolatedNodeError(ModelError):
    """A node has no neighbours to aggregate from."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Node {node} has no neighbours")


class EmptyNeighborhoodError(ModelError):
    """Attention neighbourhood of a node is empty."""

    def __init__(self, node: int) -> None:
        self.node = node
        super().__init__(f"Empty attention neighbourhood for node {node}")


class MissingCacheError(ModelError):
    """Backward pass requested without a train-mode forward cache."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"Missing forward cache: {reason}")


# Storage errors
class StorageError(WarehouseAcoError):
    """Base class for storage errors."""

    pass


class CheckpointCorruptedError(StorageError):
    """Checkpoint file is malformed."""

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"Checkpoint corrupted at {path}: {reason}")


class InstanceFileError(StorageError):
    """Instance document cannot be read or is invalid."""

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"Bad instance file {path}: {reason}")


# Training errors
class TrainingError(WarehouseAcoError):
    """Base class for training errors."""

    pass


class TrainingDivergedError(TrainingError):
    """Loss or gradient became non-finite."""

    def __init__(self, epoch: int, what: str) -> None:
        self.epoch = epoch
        self.what = what
        super().__init__(f"Non-finite {what} at epoch {epoch}")


# Benchmark errors
class BenchError(WarehouseAcoError):
    """Base class for benchmark harness errors."""

    pass


class SizeBoundError(BenchError):
    """Instance is too large or not complete for the exact oracle."""

    def __init__(self, n: int, bound: int, reason: str = "size bound exceeded") -> None:
        self.n = n
        self.bound = bound
        super().__init__(f"Exact oracle unavailable for n={n} (bound {bound}): {reason}")


class MissingCheckpointError(BenchError):
    """A learned method has no model checkpoint."""

    def __init__(self, method: str, path: str | None) -> None:
        self.method = method
        self.path = path
        super().__init__(f"Method {method} needs a checkpoint, not found: {path}")


class EmptyResultsError(BenchError):
    """Aggregation requested over no results."""

    def __init__(self) -> None:
        super().__init__("No results to summarize")
