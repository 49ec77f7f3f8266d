"""Unit tests for logging setup and processors."""

import json
from collections.abc import Generator

import numpy as np
import pytest
import structlog

from warehouse_aco.logging_config import (
    bind_run_context,
    get_logger,
    numpy_to_python,
    setup_logging,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def clean_context() -> Generator[None, None, None]:
    """Clear bound context and restore the test logging setup afterwards."""
    structlog.contextvars.clear_contextvars()
    yield
    structlog.contextvars.clear_contextvars()
    setup_logging(log_level="WARNING", environment="development")


class TestNumpyToPython:
    """Tests for the numpy_to_python processor."""

    def test_scalars(self) -> None:
        """Test numpy scalars become Python scalars."""
        event = numpy_to_python(None, "info", {"n": np.int64(3), "cost": np.float32(1.5)})

        assert event == {"n": 3, "cost": 1.5}
        assert type(event["n"]) is int

    def test_small_and_large_arrays(self) -> None:
        """Test small arrays are listed and large ones are reduced to their shape."""
        event = numpy_to_python(None, "info", {"a": np.arange(3), "b": np.zeros((10, 10))})

        assert event["a"] == [0, 1, 2]
        assert event["b"] == "ndarray(10, 10)"

    def test_tuples_and_plain_values(self) -> None:
        """Test tuples are converted element-wise and other values pass through."""
        event = numpy_to_python(
            None, "info", {"nodes": (np.int64(20), 50), "event": "epoch_completed"}
        )

        assert event == {"nodes": (20, 50), "event": "epoch_completed"}


class TestSetupLogging:
    """Tests for setup_logging and run context."""

    def test_production_renders_json(
        self, clean_context: None, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test production events are JSON lines on stderr with bound context."""
        setup_logging(log_level="INFO", environment="production")
        bind_run_context(command="solve", seed=7)

        get_logger("json-check").info("solve_finished", cost=np.float64(4.25))

        captured = capsys.readouterr()
        record = json.loads(captured.err.strip().splitlines()[-1])
        assert captured.out == ""
        assert record["event"] == "solve_finished"
        assert record["cost"] == 4.25
        assert record["command"] == "solve"
        assert record["seed"] == 7

    def test_bind_replaces_previous_context(self, clean_context: None) -> None:
        """Test binding a new run drops the previous run's identifiers."""
        bind_run_context(command="train", seed=1)
        bind_run_context(command="bench")

        assert structlog.contextvars.get_contextvars() == {"command": "bench"}
