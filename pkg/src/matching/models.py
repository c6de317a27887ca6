"""
Data models for matching and the contrastive objective
"""

import math
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..kb.models import FeatureBundle


class MatcherVariant(str, Enum):
    """Default matcher implementations"""
    COSINE_TEXT = "cosine-text"
    COSINE_FUSED = "cosine-fused"


class MissingFeaturePolicy(str, Enum):
    """How absent modalities enter the matcher"""
    ZERO_VECTOR = "zero-vector"


class MatcherConfig(BaseModel):
    """Matcher contract configuration"""
    model_config = ConfigDict(frozen=True)

    variant: MatcherVariant = Field(default=MatcherVariant.COSINE_TEXT)
    temperature: float = Field(default=1.0, gt=0, description="Scores are divided by this")
    missing_feature_policy: MissingFeaturePolicy = Field(default=MissingFeaturePolicy.ZERO_VECTOR)

    @field_validator("temperature")
    @classmethod
    def validate_temperature(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("temperature must be finite")
        return v


class ItemFeatures(BaseModel):
    """Text and visual bundles of one mention or entity"""
    model_config = ConfigDict(frozen=True)

    text: FeatureBundle
    visual: FeatureBundle

    @property
    def dim(self) -> int:
        return self.text.dim


class LossResult(BaseModel):
    """Contrastive loss with gradients"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    loss: float = Field(..., ge=0.0)
    score_gradient: np.ndarray = Field(..., description="d loss / d scores, positive first")
    embedding_gradient: Optional[np.ndarray] = Field(None, description="d loss / d embedding matrix")


# Error Models

class MatchingError(Exception):
    """Base matching error class"""

    def __init__(self, message: str, code: str = "MATCHING_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class NonFiniteScoreError(MatchingError):
    """NaN or infinity in a score vector"""

    def __init__(self, position: int):
        super().__init__(f"Non-finite score at position {position}", "NON_FINITE_SCORE", 1,
                         {"position": position})


class MissingFeatureRowError(MatchingError):
    """Row reference outside the embedding store"""

    def __init__(self, row: int, rows: int, owner: str):
        super().__init__(f"{owner} references row {row}, store has {rows} rows", "MISSING_FEATURE_ROW", 1,
                         {"row": row, "rows": rows, "owner": owner})


class TooFewCandidatesError(MatchingError):
    """Score vector without any negative"""

    def __init__(self, length: int):
        super().__init__(f"Need a positive and at least one negative, got {length} scores",
                         "TOO_FEW_CANDIDATES", 1, {"length": length})
