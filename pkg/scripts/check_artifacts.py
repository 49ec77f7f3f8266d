#!/usr/bin/env python3
"""Sanity check for a directory of training and benchmark artifacts."""

import sys
from pathlib import Path

import numpy as np
import pandas as pd

from warehouse_aco.adapters.storage.checkpoint_store import load_checkpoint
from warehouse_aco.adapters.storage.results_store import LOSS_COLUMNS, RESULT_COLUMNS
from warehouse_aco.domain.exceptions import CheckpointCorruptedError


def check_checkpoints(artifacts_dir: Path) -> bool:
    checkpoints = sorted(artifacts_dir.rglob("*.ckpt"))
    if not checkpoints:
        print("⚠️ WARNING: No checkpoints found")
        return True

    healthy = True
    for path in checkpoints:
        try:
            params = load_checkpoint(path)
        except CheckpointCorruptedError as e:
            print(f"❌ ERROR: {e}")
            healthy = False
            continue
        trainable = sum(params[name].size for name in params.trainable_names())
        print(f"✅ OK: {path.name} ({trainable} trainable values)")
    return healthy


def check_loss_log(path: Path) -> bool:
    frame = pd.read_csv(path)
    if list(frame.columns) != LOSS_COLUMNS:
        print(f"❌ ERROR: {path.name} has columns {list(frame.columns)}")
        return False
    if frame.empty:
        print(f"⚠️ WARNING: {path.name} has no epochs")
        return True
    if not np.isfinite(frame["mean_loss"]).all():
        print(f"❌ ERROR: {path.name} contains non-finite losses")
        return False

    head = frame["mean_loss"].head(5).mean()
    tail = frame["mean_loss"].tail(5).mean()
    print(f"✅ OK: {path.name}: {len(frame)} epochs, loss {head:.4f} -> {tail:.4f}")
    if tail > head:
        print("   Loss went up over training; check the learning rate")
    return True


def check_results(path: Path) -> bool:
    frame = pd.read_csv(path)
    if list(frame.columns) != RESULT_COLUMNS:
        print(f"❌ ERROR: {path.name} has columns {list(frame.columns)}")
        return False
    if (frame["cost"] <= 0).any() or (frame["con"] < 0).any():
        print(f"❌ ERROR: {path.name} has non-positive costs or negative congestion")
        return False
    print(f"✅ OK: {path.name}: {len(frame)} rows, methods {sorted(frame['method'].unique())}")
    return True


def check_artifacts(artifacts_dir: Path = Path("./artifacts")) -> bool:
    """
    Check checkpoints, loss logs and result tables under a directory.

    Args:
        artifacts_dir: Directory written by `nahaco train` and `bench`

    Returns:
        True if every artifact is readable and consistent, False otherwise
    """
    if not artifacts_dir.is_dir():
        print(f"❌ ERROR: {artifacts_dir} not found")
        return False

    try:
        healthy = check_checkpoints(artifacts_dir)
        for path in sorted(artifacts_dir.rglob("*.csv")):
            if path.name.endswith(".summary.csv"):
                continue
            header = path.read_text(encoding="utf-8").split("\n", 1)[0].split(",")
            if header == LOSS_COLUMNS:
                healthy &= check_loss_log(path)
            elif header == RESULT_COLUMNS:
                healthy &= check_results(path)
        return healthy
    except (OSError, pd.errors.ParserError) as e:
        print(f"❌ ERROR: Unreadable artifact: {e}")
        return False


if __name__ == "__main__":
    artifacts_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("./artifacts")

    healthy = check_artifacts(artifacts_dir)
    sys.exit(0 if healthy else 1)
