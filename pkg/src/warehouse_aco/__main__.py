"""Command-line entry point for warehouse ACO."""

import argparse
import signal
import sys
import time
from collections.abc import Sequence
from pathlib import Path

import structlog
from pydantic import ValidationError

from warehouse_aco import __version__
from warehouse_aco.adapters.heuristics import ExpertHeuristic, LearnedHeuristic, heuristic_sources
from warehouse_aco.adapters.heuristics.base import HeuristicSource
from warehouse_aco.adapters.storage.checkpoint_store import (
    load_checkpoint,
    read_manifest,
    save_checkpoint,
)
from warehouse_aco.adapters.storage.instance_store import load_instance, save_instance
from warehouse_aco.adapters.storage.results_store import (
    format_summary,
    write_loss_log,
    write_results,
    write_summary,
)
from warehouse_aco.config import Settings, get_settings
from warehouse_aco.domain.exceptions import MissingCheckpointError, WarehouseAcoError
from warehouse_aco.domain.models import (
    AcoParams,
    CurvePoint,
    HeuristicWeights,
    SolveReport,
    SuiteConfig,
    TrafficState,
    TrainConfig,
)
from warehouse_aco.logging_config import bind_run_context, get_logger, setup_logging
from warehouse_aco.services.aco_engine import expert_heuristic, solve
from warehouse_aco.services.bench_harness import run_suite, summarize
from warehouse_aco.services.training import train
from warehouse_aco.services.warehouse_model import gen_tsp_instance, gen_warehouse_instance


class GracefulShutdown:
    """Handle graceful shutdown on SIGTERM/SIGINT."""

    def __init__(self) -> None:
        self.shutdown_requested = False
        self._setup_signal_handlers()

    def _setup_signal_handlers(self) -> None:
        signal.signal(signal.SIGTERM, self._handle_signal)
        signal.signal(signal.SIGINT, self._handle_signal)

    def _handle_signal(self, signum: int, frame: object) -> None:
        signal_name = signal.Signals(signum).name
        print(f"\nReceived {signal_name}. Stopping after the current epoch...", file=sys.stderr)
        self.shutdown_requested = True

    def should_continue(self) -> bool:
        """
        Returns:
            True if training should go on, False if shutdown requested
        """
        return not self.shutdown_requested


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nahaco",
        description="Congestion-aware ant colony routing with a learned edge heuristic",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level, help="Override WACO_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate an instance file")
    kinds = gen.add_subparsers(dest="kind", required=True)
    tsp = kinds.add_parser("tsp", help="Random k-nearest-neighbour instance")
    tsp.add_argument("--n", type=int, required=True)
    tsp.add_argument("--seed", type=int, default=0)
    tsp.add_argument("--k", type=int, default=settings.k_neighbors)
    tsp.add_argument("--planar", action="store_true", help="Fix z at 0")
    tsp.add_argument("--capacity", type=float, default=settings.capacity)
    tsp.add_argument("--out", type=Path, required=True)

    wh = kinds.add_parser("warehouse", help="Shelf-grid pickup instance")
    wh.add_argument("--sx", type=int, required=True, help="Aisles")
    wh.add_argument("--sy", type=int, required=True, help="Slots per aisle level")
    wh.add_argument("--levels", type=int, required=True)
    wh.add_argument("--cargo", type=int, required=True)
    wh.add_argument("--seed", type=int, default=0)
    wh.add_argument("--capacity", type=float, default=settings.capacity)
    wh.add_argument("--out", type=Path, required=True)

    slv = commands.add_parser("solve", help="Run the ant colony on one instance")
    slv.add_argument("--instance", type=Path, required=True)
    slv.add_argument("--heuristic", choices=sorted(heuristic_sources), default="expert")
    slv.add_argument("--model", type=Path, help="Checkpoint for the learned heuristic")
    slv.add_argument("--ants", type=int, default=settings.ants)
    slv.add_argument("--iters", type=int, default=settings.iterations)
    slv.add_argument("--alpha", type=float, default=settings.alpha)
    slv.add_argument("--beta", type=float, default=settings.beta)
    slv.add_argument("--rho", type=float, default=settings.rho)
    slv.add_argument("--q", type=float, default=settings.q)
    slv.add_argument("--delta", type=float, default=settings.delta)
    slv.add_argument("--alpha-h", type=float, default=settings.alpha_h)
    slv.add_argument("--beta-h", type=float, default=settings.beta_h)
    slv.add_argument("--gamma-h", type=float, default=settings.gamma_h)
    slv.add_argument("--seed", type=int, default=0)
    slv.add_argument("--out", type=Path, help="Write the JSON report here")

    trn = commands.add_parser("train", help="Train the heuristic network")
    trn.add_argument("--config", type=Path, required=True, help="TrainConfig JSON")
    trn.add_argument("--out-model", type=Path, required=True)
    trn.add_argument("--log", type=Path, required=True, help="Loss log CSV")
    trn.add_argument("--init-model", type=Path, help="Resume from a checkpoint")

    bench = commands.add_parser("bench", help="Run a benchmark suite")
    bench.add_argument("--suite", type=Path, required=True, help="SuiteConfig JSON")
    bench.add_argument("--out", type=Path, required=True, help="Results CSV")
    bench.add_argument("--summary", type=Path, help="Summary CSV (default: <out>.summary.csv)")
    bench.add_argument("--n-jobs", type=int, help="Override the suite's worker count")

    inspect = commands.add_parser("inspect", help="Validate a checkpoint and list its blocks")
    inspect.add_argument("--model", type=Path, required=True)
    return parser


def cmd_gen(args: argparse.Namespace, logger: structlog.stdlib.BoundLogger) -> int:
    if args.kind == "tsp":
        instance = gen_tsp_instance(
            args.n, args.seed, k_neighbors=args.k, capacity=args.capacity, planar=args.planar
        )
    else:
        instance = gen_warehouse_instance(
            args.sx, args.sy, args.levels, args.cargo, args.seed, capacity=args.capacity
        )
    save_instance(instance, args.out)
    print(f"{args.out}: {instance.n_nodes} nodes, {instance.n_edges} edges")
    return 0


def cmd_solve(args: argparse.Namespace, logger: structlog.stdlib.BoundLogger) -> int:
    instance = load_instance(args.instance)
    weights = HeuristicWeights(alpha_h=args.alpha_h, beta_h=args.beta_h, gamma_h=args.gamma_h)
    params = AcoParams(
        alpha=args.alpha,
        beta=args.beta,
        rho=args.rho,
        q=args.q,
        n_ants=args.ants,
        n_iterations=args.iters,
        delta=args.delta,
        seed=args.seed,
    )
    cost_field = expert_heuristic(instance, weights)

    source: HeuristicSource
    if args.heuristic == "learned":
        if args.model is None or not args.model.is_file():
            raise MissingCheckpointError("learned", None if args.model is None else str(args.model))
        source = LearnedHeuristic.from_checkpoint(args.model, weights)
    else:
        source = ExpertHeuristic(weights)

    started = time.perf_counter()
    eta = source.evaluate(instance, TrafficState.fresh(instance))
    result = solve(
        instance, eta, params, cost_field=cost_field, refresh=source.refresher(instance)
    )
    seconds = round(time.perf_counter() - started, 3)

    report = SolveReport(
        heuristic=source.kind,
        visit_order=result.best_tour.visit_order,
        path=result.best_tour.path,
        cost=result.best_tour.cost,
        con=result.con,
        seconds=seconds,
        best_iteration=result.best_iteration,
        curve=[
            CurvePoint(iteration=s.iteration, best=s.best_cost, mean=s.mean_cost)
            for s in result.history
        ],
    )
    document = report.model_dump_json(indent=2)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(document, encoding="utf-8")
        logger.info("solve_report_written", path=str(args.out))
    print(f"cost={report.cost:.6f} con={report.con:.6f} seconds={seconds}")
    return 0


def cmd_train(
    args: argparse.Namespace, logger: structlog.stdlib.BoundLogger, settings: Settings
) -> int:
    config = TrainConfig.model_validate_json(args.config.read_text(encoding="utf-8"))
    if "network" not in config.model_fields_set:
        config = config.model_copy(update={"network": settings.network_config()})
    if config.checkpoint_dir is not None and not config.checkpoint_dir.is_absolute():
        config = config.model_copy(
            update={"checkpoint_dir": args.config.parent / config.checkpoint_dir}
        )
    initial = load_checkpoint(args.init_model) if args.init_model else None

    shutdown = GracefulShutdown()
    result = train(config, params=initial, logger=logger, should_continue=shutdown.should_continue)
    save_checkpoint(result.params, args.out_model)
    write_loss_log(result.history, args.log)
    if result.stopped_early:
        print(f"Stopped after {len(result.history)} epochs; model saved to {args.out_model}")
    else:
        print(f"Trained {len(result.history)} epochs; model saved to {args.out_model}")
    return 0


def cmd_bench(args: argparse.Namespace, logger: structlog.stdlib.BoundLogger) -> int:
    suite = SuiteConfig.model_validate_json(args.suite.read_text(encoding="utf-8"))
    if args.n_jobs is not None:
        suite = suite.model_copy(update={"n_jobs": args.n_jobs})

    results = run_suite(suite, base_dir=args.suite.parent)
    write_results(results, args.out)
    summaries = summarize(results)
    write_summary(summaries, args.summary or args.out.with_suffix(".summary.csv"))
    print(format_summary(summaries))
    return 0


def cmd_inspect(args: argparse.Namespace, logger: structlog.stdlib.BoundLogger) -> int:
    config, manifest = read_manifest(args.model)
    params = load_checkpoint(args.model)
    print(config.model_dump_json(indent=2))
    width = max(len(name) for name, _ in manifest)
    for name, shape in manifest:
        print(f"{name:<{width}}  {'x'.join(map(str, shape)) or 'scalar'}")
    trainable = sum(params[name].size for name in params.trainable_names())
    print(f"{len(manifest)} blocks, {trainable} trainable values")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code (0 for success, 1 for error)
    """
    try:
        settings = get_settings()
    except Exception as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        print("Please check your .env file and WACO_* environment variables.", file=sys.stderr)
        return 1

    args = build_parser(settings).parse_args(argv)
    setup_logging(log_level=args.log_level, environment=settings.environment)
    bind_run_context(command=args.command, seed=getattr(args, "seed", None))
    logger = get_logger(__name__)
    logger.debug("command_starting", command=args.command, version=__version__)

    try:
        if args.command == "gen":
            return cmd_gen(args, logger)
        if args.command == "solve":
            return cmd_solve(args, logger)
        if args.command == "train":
            return cmd_train(args, logger, settings)
        if args.command == "bench":
            return cmd_bench(args, logger)
        return cmd_inspect(args, logger)
    except (WarehouseAcoError, ValidationError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        logger.error("io_error", command=args.command, error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        logger.info("keyboard_interrupt")
        return 130


if __name__ == "__main__":
    sys.exit(main())
