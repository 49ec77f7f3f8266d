"""Integration tests for the desk acceptance script's command line."""

import importlib.util
from pathlib import Path
from types import ModuleType

import pytest

from warehouse_aco.config import get_settings

pytestmark = pytest.mark.integration

SCRIPT = Path(__file__).resolve().parents[2] / "scripts" / "desk_acceptance.py"


@pytest.fixture(scope="module")
def desk() -> ModuleType:
    spec = importlib.util.spec_from_file_location("desk_acceptance", SCRIPT)
    assert spec is not None and spec.loader is not None
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


class TestDeskAcceptanceCli:
    """Tests for the desk acceptance argument defaults."""

    def test_layers_follow_settings(self, desk: ModuleType) -> None:
        """Test the layer count defaults to the configured network depth."""
        settings = get_settings()

        args = desk.build_parser(settings).parse_args([])

        assert args.gnn_layers == settings.gnn_layers

    def test_layers_follow_environment(
        self, desk: ModuleType, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test WACO_GNN_LAYERS changes the default layer count."""
        monkeypatch.setenv("WACO_GNN_LAYERS", "3")

        args = desk.build_parser(get_settings()).parse_args([])

        assert args.gnn_layers == 3

    def test_reports_network(self, desk: ModuleType, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the run states the layer count it trains with."""
        code = desk.main(["--skip", "training", "--skip", "congestion", "--gnn-layers", "5"])

        assert code == 0
        assert "network: 5 message passing layers" in capsys.readouterr().out
