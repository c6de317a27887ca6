"""
Configuration settings for the melmine pipeline
Handles environment variables and run defaults for mining, matching and evaluation
"""

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with validation"""

    model_config = SettingsConfigDict(
        env_prefix="MELMINE_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Configuration
    app_name: str = Field(default="melmine", description="Service name stamped on log records")
    app_version: str = Field(default="1.0.0")
    environment: str = Field(default="production", description="development switches to console logs")
    log_level: str = Field(default="INFO")

    # Execution
    threads: int = Field(default=1, ge=1, description="Worker count for table and scoring passes")
    seed: int = Field(default=5, ge=0, description="Default seed for every randomized stage")

    # Features
    feature_dim: int = Field(default=96, gt=0, description="Width of every embedding in a run")

    # Negative mining
    negatives_k: int = Field(default=4, ge=1)
    minhash_signature_length: int = Field(default=256, ge=1)
    minhash_bands: int = Field(default=32, ge=1)
    minhash_rows: int = Field(default=8, ge=1)
    exact_block_size: int = Field(default=512, ge=1, description="KB rows per exact-mining block")
    lowercase_attributes: bool = Field(default=False)

    # Matching and evaluation
    temperature: float = Field(default=1.0, gt=0)
    cvacpt_blend: float = Field(default=0.5, ge=0.0, le=1.0)
    tie_policy: str = Field(default="pessimistic")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("tie_policy")
    @classmethod
    def validate_tie_policy(cls, v: str) -> str:
        valid_policies = ["pessimistic", "optimistic", "average", "random"]
        if v.lower() not in valid_policies:
            raise ValueError(f"tie_policy must be one of {valid_policies}")
        return v.lower()

    @property
    def is_development(self) -> bool:
        return self.environment.lower() == "development"


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings"""
    return settings


# Configuration validation
def validate_configuration() -> bool:
    """Validate cross-field constraints the field validators cannot see"""
    from ..mining.minhash import check_band_config

    check_band_config(
        settings.minhash_signature_length,
        settings.minhash_bands,
        settings.minhash_rows,
    )
    return True
