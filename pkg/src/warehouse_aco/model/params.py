"""Parameter and gradient containers of the heuristic network."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import ValidationError

from warehouse_aco.domain.exceptions import ModelError, ShapeMismatchError
from warehouse_aco.domain.models import HeuristicNetConfig

RUNNING_STATS = ("running_mean", "running_var")


def expected_shapes(config: HeuristicNetConfig) -> dict[str, tuple[int, ...]]:
    """Ordered parameter manifest for a configuration."""
    hidden, fusion = config.hidden_dim, config.fusion_dim
    shapes: dict[str, tuple[int, ...]] = {
        "embed.node.W": (config.node_features, hidden),
        "embed.edge.W": (config.edge_features, hidden),
    }
    for layer in range(config.gnn_layers):
        prefix = f"gnn.{layer}"
        for branch in range(1, 5):
            shapes[f"{prefix}.W_v{branch}"] = (hidden, hidden)
        shapes[f"{prefix}.W_e"] = (hidden, hidden)
        for kind in ("bn_v", "bn_e"):
            for stat in ("gamma", "beta", *RUNNING_STATS):
                shapes[f"{prefix}.{kind}.{stat}"] = (hidden,)

    shapes["fusion.W_s"] = (hidden + config.node_features, fusion)
    shapes["fusion.W_d"] = (config.dynamic_features, fusion)
    shapes["fusion.log_sigma"] = (1,)
    shapes["fusion.w_t"] = (1,)
    shapes["fusion.b_t"] = (1,)
    shapes["fusion.W_q"] = (fusion, hidden)

    width = 3 * hidden
    for i in range(config.decoder_depth):
        out = 1 if i == config.decoder_depth - 1 else hidden
        shapes[f"decoder.{i}.W"] = (width, out)
        shapes[f"decoder.{i}.b"] = (out,)
        width = out
    return shapes


def infer_config(shapes: Mapping[str, tuple[int, ...]], **numerics: Any) -> HeuristicNetConfig:
    """
    Rebuild the architecture from a manifest's block shapes.

    BN constants and the fusion variant are not visible in shapes; they
    come from `numerics` or the defaults.

    Raises:
        ModelError: If a block the architecture always has is missing
    """
    try:
        node_features, hidden = shapes["embed.node.W"]
        edge_features, _ = shapes["embed.edge.W"]
        dynamic_features, fusion = shapes["fusion.W_d"]
    except (KeyError, ValueError) as e:
        raise ModelError(f"manifest lacks a core block: {e}") from e
    gnn_layers = sum(1 for name in shapes if name.startswith("gnn.") and name.endswith(".W_e"))
    depth = sum(1 for name in shapes if name.startswith("decoder.") and name.endswith(".W"))
    try:
        return HeuristicNetConfig(
            node_features=node_features,
            edge_features=edge_features,
            dynamic_features=dynamic_features,
            hidden_dim=hidden,
            fusion_dim=fusion,
            gnn_layers=gnn_layers,
            decoder_depth=depth,
            **numerics,
        )
    except ValidationError as e:
        raise ModelError(f"manifest describes no valid network: {e}") from e


def is_trainable(name: str) -> bool:
    return not name.endswith(RUNNING_STATS)


@dataclass
class ModelParams:
    """
    Named float64 arrays of the network, in manifest order.

    Running batch-norm statistics live here too but are not trainable.
    """

    config: HeuristicNetConfig
    values: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        self.validate()

    @classmethod
    def initialize(cls, config: HeuristicNetConfig, seed: int = 0) -> ModelParams:
        """Uniform ±1/sqrt(fan_in) weights, unit BN scale, zero shifts, sigma = 1."""
        rng = np.random.default_rng(seed)
        shapes = expected_shapes(config)
        values: dict[str, np.ndarray] = {}
        for name, shape in shapes.items():
            leaf = name.rsplit(".", 1)[-1]
            if leaf in ("gamma", "running_var"):
                values[name] = np.ones(shape)
            elif leaf in ("beta", "running_mean", "log_sigma", "w_t", "b_t"):
                values[name] = np.zeros(shape)
            elif leaf == "b":
                fan_in = shapes[name[:-1] + "W"][0]
                bound = 1.0 / np.sqrt(fan_in)
                values[name] = rng.uniform(-bound, bound, size=shape)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                values[name] = rng.uniform(-bound, bound, size=shape)
        return cls(config, values)

    def validate(self) -> None:
        """
        Raises:
            ShapeMismatchError: If a block is missing or mis-shaped
            ModelError: If any value is non-finite
        """
        shapes = expected_shapes(self.config)
        for name, shape in shapes.items():
            actual = self.values.get(name)
            if actual is None:
                raise ShapeMismatchError(name, shape, ())
            if actual.shape != shape:
                raise ShapeMismatchError(name, shape, actual.shape)
            if not np.all(np.isfinite(actual)):
                raise ModelError(f"non-finite values in {name}")
        extra = set(self.values) - set(shapes)
        if extra:
            name = sorted(extra)[0]
            raise ShapeMismatchError(name, (), self.values[name].shape)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def trainable_names(self) -> list[str]:
        return [name for name in self.values if is_trainable(name)]

    @property
    def sigma(self) -> float:
        return float(np.exp(self.values["fusion.log_sigma"][0]))

    def copy(self) -> ModelParams:
        return ModelParams(self.config, {k: v.copy() for k, v in self.values.items()})

    def apply_step(self, grads: Gradients, learning_rate: float) -> None:
        """Plain gradient-descent update of the trainable blocks, in place."""
        for name, grad in grads.values.items():
            self.values[name] -= learning_rate * grad

    def commit_running_stats(
        self, batch_stats: dict[str, tuple[np.ndarray, np.ndarray, int]]
    ) -> None:
        """
        Fold batch statistics of a train-mode forward into the running ones.

        Args:
            batch_stats: prefix -> (mean, biased variance, row count)
        """
        momentum = self.config.bn_momentum
        for prefix, (mean, var, rows) in batch_stats.items():
            unbiased = var * rows / (rows - 1) if rows > 1 else var
            running_mean = self.values[f"{prefix}.running_mean"]
            running_var = self.values[f"{prefix}.running_var"]
            self.values[f"{prefix}.running_mean"] = running_mean + momentum * (mean - running_mean)
            self.values[f"{prefix}.running_var"] = running_var + momentum * (unbiased - running_var)


@dataclass
class Gradients:
    """Gradients of the trainable blocks, keyed like ModelParams."""

    values: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: ModelParams) -> Gradients:
        return cls({name: np.zeros_like(params[name]) for name in params.trainable_names()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def accumulate(self, other: Gradients, weight: float = 1.0) -> None:
        for name, grad in other.values.items():
            self.values[name] += weight * grad

    def scale(self, factor: float) -> None:
        for name in self.values:
            self.values[name] *= factor

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.values.values())))

    def clip(self, max_norm: float) -> float:
        """
        Rescale to at most `max_norm` in global L2 norm.

        Returns:
            The norm before clipping
        """
        norm = self.global_norm()
        if norm > max_norm:
            self.scale(max_norm / norm)
        return norm

    def first_non_finite(self) -> str | None:
        for name, grad in self.values.items():
            if not np.all(np.isfinite(grad)):
                return name
        return None
