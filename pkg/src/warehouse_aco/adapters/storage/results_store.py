"""CSV and plain-text tables for benchmark results and training logs."""

from collections.abc import Sequence
from pathlib import Path

import pandas as pd
import structlog

from warehouse_aco.domain.models import BenchResult, EpochRecord, MethodSummary

logger = structlog.get_logger(__name__)

RESULT_COLUMNS = ["method", "instance", "seed", "seconds", "cost", "con", "gap_pct"]
SUMMARY_COLUMNS = ["method", "count", "mean_seconds", "mean_cost", "mean_gap_pct", "mean_con"]
LOSS_COLUMNS = ["epoch", "mean_loss", "mean_best_cost", "mean_con", "wall_clock_s"]


def results_frame(results: Sequence[BenchResult]) -> pd.DataFrame:
    frame = pd.DataFrame([r.model_dump() for r in results], columns=RESULT_COLUMNS)
    frame["gap_pct"] = frame["gap_pct"].astype(float)
    return frame


def summary_frame(summaries: Sequence[MethodSummary]) -> pd.DataFrame:
    frame = pd.DataFrame([s.model_dump() for s in summaries], columns=SUMMARY_COLUMNS)
    frame["mean_gap_pct"] = frame["mean_gap_pct"].astype(float)
    return frame


def _write(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")


def write_results(results: Sequence[BenchResult], path: Path) -> None:
    _write(results_frame(results), path)
    logger.info("results_written", path=str(path), rows=len(results))


def write_summary(summaries: Sequence[MethodSummary], path: Path) -> None:
    _write(summary_frame(summaries), path)
    logger.info("summary_written", path=str(path), rows=len(summaries))


def format_summary(summaries: Sequence[MethodSummary]) -> str:
    """Aligned plain-text table, one row per method."""
    frame = summary_frame(summaries)
    return frame.to_string(index=False, float_format=lambda v: f"{v:.4f}", na_rep="-")


def write_loss_log(records: Sequence[EpochRecord], path: Path) -> None:
    """Training log, one row per epoch."""
    frame = pd.DataFrame([r.model_dump() for r in records], columns=LOSS_COLUMNS)
    _write(frame, path)
    logger.info("loss_log_written", path=str(path), epochs=len(records))
