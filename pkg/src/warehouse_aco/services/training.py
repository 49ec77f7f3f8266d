"""CARL-loss training of the heuristic network over ACO rollouts."""

import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy.special import expit

from warehouse_aco.adapters.storage.checkpoint_store import save_checkpoint
from warehouse_aco.domain.exceptions import TrainingDivergedError, TrainingError
from warehouse_aco.domain.models import (
    EpochRecord,
    InstanceKind,
    PheromoneField,
    Tour,
    TourProbability,
    TrafficState,
    TrainConfig,
    WarehouseInstance,
)
from warehouse_aco.model.features import GraphIndex
from warehouse_aco.model.network import HeuristicPrediction, backward, forward
from warehouse_aco.model.params import Gradients, ModelParams
from warehouse_aco.services.aco_engine import (
    AntSystem,
    congestion_term,
    expert_heuristic,
    pheromone_update,
)
from warehouse_aco.services.warehouse_model import gen_tsp_instance, gen_warehouse_instance

LOG_PROB_FLOOR = -60.0
LN2 = math.log(2.0)

# Shelf grid used when training on warehouse instances
TRAIN_GRID = (4, 25, 5)


@dataclass
class Episode:
    """
    One ACO iteration's ants on one instance, with η held fixed.

    `tour_probability` picks the p_i the loss sees: "per_step" uses the
    geometric mean of an ant's sampled move probabilities, "joint" their
    product. Joint probabilities of 20+ node tours sit below e^-30, where
    ln(1 + p) carries no signal.
    """

    instance: WarehouseInstance
    tours: list[Tour]
    tour_probability: TourProbability = "per_step"
    cost_avg: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.tours:
            raise TrainingError("an episode needs at least one ant")
        costs = self.costs
        if not np.all(np.isfinite(costs)) or costs.min() < 0.0:
            raise TrainingError("ant costs must be finite and non-negative")
        if self.joint_log_probs.max() > 0.0:
            raise TrainingError("log selection probabilities must be <= 0")
        self.cost_avg = float(costs.mean())

    @property
    def costs(self) -> np.ndarray:
        return np.array([t.cost for t in self.tours])

    @property
    def joint_log_probs(self) -> np.ndarray:
        return np.array([t.log_selection_prob for t in self.tours])

    @property
    def step_counts(self) -> np.ndarray:
        return np.array([len(t.steps) for t in self.tours])

    def tour_log_probs(self, joint: np.ndarray) -> np.ndarray:
        """Map per-ant joint log probabilities to the ones the loss uses."""
        if self.tour_probability == "joint":
            return joint
        return joint / np.maximum(self.step_counts, 1)

    @property
    def log_probs(self) -> np.ndarray:
        return self.tour_log_probs(self.joint_log_probs)

    @property
    def step_scales(self) -> np.ndarray:
        """∂ log p_i / ∂ log(joint p_i) per ant."""
        if self.tour_probability == "joint":
            return np.ones(len(self.tours))
        return 1.0 / np.maximum(self.step_counts, 1)


def _advantages(costs: np.ndarray) -> np.ndarray:
    return np.abs(costs - costs.mean())


def carl_objective(costs: np.ndarray, log_probs: np.ndarray) -> float:
    """
    (1/n) Σ |C_i - mean C| · ln(1 + p_i) / ln 2, with p_i = exp(log_probs_i).

    Terms with log p below the floor count as 0.
    """
    live = log_probs >= LOG_PROB_FLOOR
    damped = np.where(live, np.log1p(np.exp(np.maximum(log_probs, LOG_PROB_FLOOR))), 0.0)
    return float(np.mean(_advantages(costs) * damped / LN2))


def carl_loss(episode: Episode) -> float:
    return carl_objective(episode.costs, episode.log_probs)


def carl_heuristic_gradient(episode: Episode, eta: np.ndarray, beta: float) -> np.ndarray:
    """
    ∂L/∂η per edge, costs treated as constants.

    Each sampled step contributes β (1[e = chosen] - p_e) / η_e to
    ∂ log p / ∂η over its candidates, scaled by 1/steps for per-step
    probabilities.
    """
    n = len(episode.tours)
    log_probs = episode.log_probs
    live = log_probs >= LOG_PROB_FLOOR
    weights = np.where(
        live,
        _advantages(episode.costs) * expit(log_probs) * episode.step_scales / (LN2 * n),
        0.0,
    )
    grad = np.zeros_like(eta)
    for weight, tour in zip(weights, episode.tours):
        if weight == 0.0:
            continue
        for step in tour.steps:
            local = -step.probabilities.copy()
            local[step.chosen] += 1.0
            np.add.at(grad, step.candidate_edges, weight * beta * local / eta[step.candidate_edges])
    return grad


def carl_gradient(
    episode: Episode, prediction: HeuristicPrediction, params: ModelParams, beta: float
) -> Gradients:
    """
    Parameter gradients of the episode loss.

    η = ŷ + ε, so ∂L/∂ŷ equals ∂L/∂η.

    Raises:
        MissingCacheError: If the prediction has no train-mode cache
    """
    eta = prediction.heuristic_field.eta
    return backward(prediction, carl_heuristic_gradient(episode, eta, beta), params)


@dataclass
class RolloutStats:
    losses: list[float]
    best_cost: float
    con: float
    grads: Gradients


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochRecord]
    stopped_early: bool = False


def sample_instance(config: TrainConfig, n: int, seed: int) -> WarehouseInstance:
    if config.instance_kind is InstanceKind.WAREHOUSE:
        sx, sy, levels = TRAIN_GRID
        return gen_warehouse_instance(sx, sy, levels, n - 1, seed)
    return gen_tsp_instance(n, seed, k_neighbors=min(config.k_neighbors, n - 1))


@dataclass
class Trainer:
    """
    Epoch loop: sample instances, roll out, accumulate CARL gradients, step.

    Uses dependency injection for the logger; mutates `params` in place.
    """

    config: TrainConfig
    params: ModelParams
    logger: structlog.stdlib.BoundLogger = field(
        default_factory=lambda: structlog.get_logger(__name__)
    )
    should_continue: Callable[[], bool] | None = None

    def rollout(self, instance: WarehouseInstance, seed: int) -> RolloutStats:
        """
        Run `rollout_iterations` episodes sharing one pheromone field.

        The heuristic of each episode is predicted from the previous
        episode's traffic (zero traffic for the first).
        """
        aco = self.config.aco_params(seed)
        expert = expert_heuristic(instance, self.config.heuristic_weights)
        graph = GraphIndex.from_instance(instance)
        system = AntSystem(instance=instance, params=aco, cost_field=expert, logger=self.logger)

        rng = np.random.default_rng(seed)
        tau = PheromoneField.uniform(instance.n_edges)
        traffic = TrafficState.fresh(instance)
        previous = traffic.copy()
        grads = Gradients.zeros_like(self.params)
        losses: list[float] = []
        best: Tour | None = None
        best_con = 0.0

        for _ in range(self.config.rollout_iterations):
            prediction = forward(instance, previous, self.params, "train", graph, expert.eta)
            assert prediction.cache is not None
            self.params.commit_running_stats(prediction.cache.batch_stats)

            traffic.reset()
            tours = system.run_iteration(tau, prediction.heuristic_field, traffic, rng)
            tau = pheromone_update(tau, tours, aco)

            episode = Episode(instance, tours, self.config.tour_probability)
            losses.append(carl_loss(episode))
            grads.accumulate(carl_gradient(episode, prediction, self.params, aco.beta))

            leader = min(tours, key=lambda t: t.cost)
            if best is None or leader.cost < best.cost:
                best = leader
                best_con = sum(congestion_term(e, traffic, aco.delta) for e in leader.edges)
            previous = traffic.copy()

        assert best is not None
        return RolloutStats(losses=losses, best_cost=best.cost, con=best_con, grads=grads)

    def run_epoch(self, epoch: int) -> EpochRecord:
        config = self.config
        started = time.perf_counter()
        rng = np.random.default_rng([config.seed, epoch])
        count = config.instances_per_epoch
        sizes = rng.integers(config.min_nodes, config.max_nodes + 1, size=count)
        seeds = rng.integers(0, 2**31 - 1, size=count)

        total = Gradients.zeros_like(self.params)
        losses: list[float] = []
        best_costs: list[float] = []
        cons: list[float] = []
        for n, seed in zip(sizes, seeds):
            instance = sample_instance(config, int(n), int(seed))
            stats = self.rollout(instance, int(seed))
            total.accumulate(stats.grads)
            losses.extend(stats.losses)
            best_costs.append(stats.best_cost)
            cons.append(stats.con)

        mean_loss = float(np.mean(losses))
        if not math.isfinite(mean_loss):
            raise TrainingDivergedError(epoch, "loss")
        total.scale(1.0 / len(losses))
        bad = total.first_non_finite()
        if bad is not None:
            raise TrainingDivergedError(epoch, f"gradient of {bad}")

        grad_norm = total.clip(config.clip_norm)
        self.params.apply_step(total, config.learning_rate)

        return EpochRecord(
            epoch=epoch,
            mean_loss=mean_loss,
            mean_best_cost=float(np.mean(best_costs)),
            mean_con=float(np.mean(cons)),
            wall_clock_s=round(time.perf_counter() - started, 3),
            grad_norm=grad_norm,
        )

    def train(self) -> TrainResult:
        config = self.config
        history: list[EpochRecord] = []
        self.logger.info(
            "training_started",
            epochs=config.epochs,
            instances_per_epoch=config.instances_per_epoch,
            nodes=(config.min_nodes, config.max_nodes),
            learning_rate=config.learning_rate,
        )
        for epoch in range(config.epochs):
            try:
                record = self.run_epoch(epoch)
            except TrainingDivergedError as e:
                self.logger.error("training_diverged", epoch=e.epoch, what=e.what)
                raise
            history.append(record)
            self.logger.info("epoch_completed", **record.model_dump())
            self._maybe_checkpoint(epoch + 1)

            if self.should_continue is not None and not self.should_continue():
                self.logger.warning("training_stopped_early", epochs_done=epoch + 1)
                return TrainResult(self.params, history, stopped_early=True)
        return TrainResult(self.params, history)

    def _maybe_checkpoint(self, epochs_done: int) -> None:
        every, directory = self.config.checkpoint_every, self.config.checkpoint_dir
        if not every or directory is None or epochs_done % every:
            return
        save_checkpoint(self.params, directory / f"epoch_{epochs_done:05d}.ckpt")


def train(
    config: TrainConfig,
    params: ModelParams | None = None,
    logger: structlog.stdlib.BoundLogger | None = None,
    should_continue: Callable[[], bool] | None = None,
) -> TrainResult:
    """
    Train from scratch (or from `params`) according to `config`.

    Raises:
        TrainingDivergedError: On a non-finite loss or gradient
    """
    trainer = Trainer(
        config=config,
        params=params or ModelParams.initialize(config.network, config.seed),
        logger=logger or structlog.get_logger(__name__),
        should_continue=should_continue,
    )
    return trainer.train()


def mean_loss_window(history: Sequence[EpochRecord], first: bool, size: int = 5) -> float:
    """Mean loss over the first or last `size` epochs."""
    window = history[:size] if first else history[-size:]
    return float(np.mean([r.mean_loss for r in window]))
