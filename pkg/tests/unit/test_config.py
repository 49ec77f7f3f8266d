"""Unit tests for settings."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from warehouse_aco.config import Settings, get_settings, reset_settings
from warehouse_aco.domain.models import HeuristicNetConfig, HeuristicWeights

pytestmark = pytest.mark.unit


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Run from an empty directory so no .env file or artifacts folder leaks in."""
    monkeypatch.chdir(tmp_path)


class TestSettings:
    """Tests for Settings."""

    def test_defaults(self) -> None:
        """Test default colony, heuristic and network values."""
        settings = Settings()

        assert (settings.ants, settings.iterations) == (20, 50)
        assert (settings.alpha, settings.beta, settings.rho, settings.q) == (1.0, 2.0, 0.1, 1.0)
        assert settings.delta == 0.5
        assert settings.k_neighbors == 10
        assert settings.capacity == 20.0
        assert settings.log_level == "INFO"

    def test_creates_artifacts_dir(self, tmp_path: Path) -> None:
        """Test the artifacts directory is created on load."""
        Settings(artifacts_dir=tmp_path / "out" / "models")

        assert (tmp_path / "out" / "models").is_dir()

    def test_environment_override(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test WACO_ variables override defaults."""
        monkeypatch.setenv("WACO_ANTS", "7")
        monkeypatch.setenv("WACO_DELTA", "0.0")
        monkeypatch.setenv("WACO_LOG_LEVEL", "DEBUG")

        settings = Settings()

        assert settings.ants == 7
        assert settings.delta == 0.0
        assert settings.log_level == "DEBUG"

    def test_env_file(self, tmp_path: Path) -> None:
        """Test values are read from a .env file in the working directory."""
        (tmp_path / ".env").write_text("WACO_GNN_LAYERS=3\nWACO_HIDDEN_DIM=8\n")

        settings = Settings()

        assert (settings.gnn_layers, settings.hidden_dim) == (3, 8)

    @pytest.mark.parametrize(
        ("name", "value"),
        [("WACO_LOG_LEVEL", "LOUD"), ("WACO_RHO", "1.5"), ("WACO_ANTS", "0")],
    )
    def test_invalid_values(self, monkeypatch: pytest.MonkeyPatch, name: str, value: str) -> None:
        """Test out-of-range values fail validation."""
        monkeypatch.setenv(name, value)

        with pytest.raises(ValidationError):
            Settings()

    def test_network_config(self) -> None:
        """Test the network config mirrors the settings."""
        config = Settings(hidden_dim=8, fusion_dim=4, gnn_layers=2).network_config()

        assert config == HeuristicNetConfig(hidden_dim=8, fusion_dim=4, gnn_layers=2)

    def test_heuristic_weights(self) -> None:
        """Test the expert weights mirror the settings."""
        weights = Settings(alpha_h=0.0, gamma_h=2.0).heuristic_weights()

        assert weights == HeuristicWeights(alpha_h=0.0, beta_h=0.1, gamma_h=2.0)


class TestSettingsSingleton:
    """Tests for get_settings and reset_settings."""

    def test_cached(self) -> None:
        """Test repeated calls return the same object."""
        assert get_settings() is get_settings()

    def test_reset(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test reset picks up a changed environment."""
        first = get_settings()
        monkeypatch.setenv("WACO_ITERATIONS", "9")
        reset_settings()

        second = get_settings()

        assert second is not first
        assert second.iterations == 9
