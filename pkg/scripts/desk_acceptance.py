#!/usr/bin/env python3
"""
Desk-scale reproduction of the statistical claims about the learned heuristic.

Prints one verdict per claim:
    training   - loss falls over training and learned ACO beats expert ACO
                 on held-out 50-node instances in at least 7 of 10 pairs
    congestion - learned ACO congests a 500-slot warehouse no more than
                 expert ACO at δ = 0.2, averaged over 5 seeds

Exit code is 0 when every verdict passes.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import structlog

from warehouse_aco.adapters.heuristics import ExpertHeuristic, LearnedHeuristic
from warehouse_aco.adapters.heuristics.base import HeuristicSource
from warehouse_aco.adapters.storage.checkpoint_store import save_checkpoint
from warehouse_aco.config import Settings, get_settings
from warehouse_aco.domain.models import (
    AcoParams,
    HeuristicNetConfig,
    HeuristicWeights,
    InstanceKind,
    TrafficState,
    TrainConfig,
    WarehouseInstance,
)
from warehouse_aco.logging_config import setup_logging
from warehouse_aco.services.aco_engine import expert_heuristic, solve
from warehouse_aco.services.training import TRAIN_GRID, mean_loss_window, train
from warehouse_aco.services.warehouse_model import gen_tsp_instance, gen_warehouse_instance

HELD_OUT_SEED = 10_000
logger = structlog.get_logger("desk_acceptance")


def run_solve(
    instance: WarehouseInstance, source: HeuristicSource, params: AcoParams
) -> tuple[float, float]:
    eta = source.evaluate(instance, TrafficState.fresh(instance))
    result = solve(
        instance,
        eta,
        params,
        cost_field=expert_heuristic(instance, HeuristicWeights()),
        refresh=source.refresher(instance),
    )
    return result.best_tour.cost, result.con


def check_training(args: argparse.Namespace, network: HeuristicNetConfig) -> bool:
    config = TrainConfig(
        epochs=args.epochs,
        instances_per_epoch=args.instances_per_epoch,
        min_nodes=20,
        max_nodes=50,
        network=network,
        seed=args.seed,
        checkpoint_every=0,
    )
    result = train(config)
    if args.out_dir is not None:
        save_checkpoint(result.params, args.out_dir / "tsp.ckpt")

    first = mean_loss_window(result.history, first=True)
    last = mean_loss_window(result.history, first=False)
    loss_ok = last <= first

    learned = LearnedHeuristic(result.params)
    expert = ExpertHeuristic()
    wins = 0
    for i in range(10):
        instance = gen_tsp_instance(50, HELD_OUT_SEED + i, k_neighbors=10)
        params = AcoParams(n_ants=args.ants, n_iterations=args.iterations, delta=0.0, seed=i)
        learned_cost, _ = run_solve(instance, learned, params)
        expert_cost, _ = run_solve(instance, expert, params)
        wins += learned_cost <= expert_cost
        logger.info("held_out_pair", instance=i, learned=learned_cost, expert=expert_cost)

    cost_ok = wins >= 7
    print(f"[{'PASS' if loss_ok else 'FAIL'}] training loss: first {first:.4f}, last {last:.4f}")
    print(f"[{'PASS' if cost_ok else 'FAIL'}] learned <= expert cost on {wins}/10 held-out pairs")
    return loss_ok and cost_ok


def check_congestion(args: argparse.Namespace, network: HeuristicNetConfig) -> bool:
    config = TrainConfig(
        epochs=args.epochs,
        instances_per_epoch=args.instances_per_epoch,
        # Warehouse sizes count the depot plus the picked cargo.
        min_nodes=101,
        max_nodes=101,
        instance_kind=InstanceKind.WAREHOUSE,
        delta=0.2,
        network=network,
        seed=args.seed,
        checkpoint_every=0,
    )
    params = train(config).params
    if args.out_dir is not None:
        save_checkpoint(params, args.out_dir / "warehouse.ckpt")

    sx, sy, levels = TRAIN_GRID
    learned = LearnedHeuristic(params)
    expert = ExpertHeuristic()
    learned_con: list[float] = []
    expert_con: list[float] = []
    for seed in range(5):
        instance = gen_warehouse_instance(sx, sy, levels, 100, HELD_OUT_SEED + seed)
        aco = AcoParams(n_ants=args.ants, n_iterations=args.iterations, delta=0.2, seed=seed)
        learned_con.append(run_solve(instance, learned, aco)[1])
        expert_con.append(run_solve(instance, expert, aco)[1])

    ok = float(np.mean(learned_con)) <= float(np.mean(expert_con))
    print(
        f"[{'PASS' if ok else 'FAIL'}] mean Con learned {np.mean(learned_con):.4f}"
        f" vs expert {np.mean(expert_con):.4f} over 5 seeds"
    )
    return ok


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Desk-scale learned-heuristic claims")
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--instances-per-epoch", type=int, default=4)
    parser.add_argument("--ants", type=int, default=20)
    parser.add_argument("--iterations", type=int, default=50)
    parser.add_argument("--gnn-layers", type=int, default=settings.gnn_layers)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--skip", choices=["training", "congestion"], action="append", default=[])
    parser.add_argument("--out-dir", type=Path, help="Keep the trained checkpoints here")
    return parser


def main(argv: list[str] | None = None) -> int:
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)

    setup_logging(log_level="WARNING", environment="development")
    network = HeuristicNetConfig(
        **{**settings.network_config().model_dump(), "gnn_layers": args.gnn_layers}
    )
    print(
        f"network: {network.gnn_layers} message passing layers,"
        f" {args.epochs} epochs x {args.instances_per_epoch} instances"
    )
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)

    verdicts = []
    if "training" not in args.skip:
        verdicts.append(check_training(args, network))
    if "congestion" not in args.skip:
        verdicts.append(check_congestion(args, network))
    return 0 if all(verdicts) else 1


if __name__ == "__main__":
    sys.exit(main())
