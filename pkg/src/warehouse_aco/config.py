"""Configuration management using pydantic-settings for type-safe, validated configuration."""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from warehouse_aco.domain.models import HeuristicNetConfig, HeuristicWeights


class Settings(BaseSettings):
    """Application configuration with automatic validation and type conversion."""

    # Application settings
    app_name: str = Field(default="WarehouseACO", description="Application name")
    environment: str = Field(
        default="production",
        pattern="^(development|staging|production)$",
        description="Environment mode",
    )
    log_level: str = Field(
        default="INFO",
        pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$",
        description="Logging level",
    )
    artifacts_dir: Path = Field(
        default=Path("./artifacts"), description="Default directory for checkpoints and results"
    )

    # Ant colony defaults
    ants: int = Field(default=20, ge=1, le=10_000, description="Ants per iteration")
    iterations: int = Field(default=50, ge=1, le=100_000, description="ACO iterations")
    alpha: float = Field(default=1.0, ge=0.0, description="Pheromone exponent")
    beta: float = Field(default=2.0, ge=0.0, description="Heuristic exponent")
    rho: float = Field(default=0.1, gt=0.0, lt=1.0, description="Evaporation rate")
    q: float = Field(default=1.0, gt=0.0, description="Deposit constant")
    delta: float = Field(default=0.5, ge=0.0, description="Congestion adjustment")

    # Expert heuristic weights
    alpha_h: float = Field(default=0.1, ge=0.0, description="Size weight")
    beta_h: float = Field(default=0.1, ge=0.0, description="Weight-attribute weight")
    gamma_h: float = Field(default=1.0, gt=0.0, description="Special-handling weight")

    # Instance generation
    k_neighbors: int = Field(default=10, ge=1, description="Nearest neighbours per node")
    capacity: float = Field(default=20.0, gt=0.0, description="Edge capacity")

    # Heuristic network
    hidden_dim: int = Field(default=32, ge=1, le=1024, description="Encoder width")
    fusion_dim: int = Field(default=16, ge=1, le=1024, description="Fusion subspace width")
    gnn_layers: int = Field(default=12, ge=0, le=64, description="Message passing layers")
    decoder_depth: int = Field(default=3, ge=1, le=16, description="Decoder layers")
    bn_eps: float = Field(default=1e-5, gt=0.0, description="Batch norm epsilon")
    bn_momentum: float = Field(default=0.1, gt=0.0, le=1.0, description="Running-stat momentum")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        env_prefix="WACO_",
    )

    @field_validator("artifacts_dir")
    @classmethod
    def create_artifacts_dir(cls, v: Path) -> Path:
        """Create artifacts directory if it doesn't exist."""
        v.mkdir(parents=True, exist_ok=True)
        return v

    def heuristic_weights(self) -> HeuristicWeights:
        return HeuristicWeights(alpha_h=self.alpha_h, beta_h=self.beta_h, gamma_h=self.gamma_h)

    def network_config(self) -> HeuristicNetConfig:
        """Network architecture from the configured defaults."""
        return HeuristicNetConfig(
            hidden_dim=self.hidden_dim,
            fusion_dim=self.fusion_dim,
            gnn_layers=self.gnn_layers,
            decoder_depth=self.decoder_depth,
            bn_eps=self.bn_eps,
            bn_momentum=self.bn_momentum,
        )


# Singleton instance
_settings: Settings | None = None


def get_settings() -> Settings:
    """Get or create settings singleton instance."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Reset settings singleton (useful for testing)."""
    global _settings
    _settings = None
