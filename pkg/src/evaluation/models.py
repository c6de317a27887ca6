"""
Data models for ranking evaluation
"""

from enum import Enum
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TiePolicy(str, Enum):
    """How equal-scoring rivals affect the gold rank"""
    PESSIMISTIC = "pessimistic"
    OPTIMISTIC = "optimistic"
    AVERAGE = "average"
    RANDOM = "random"


class MentionRank(BaseModel):
    """Gold rank of one mention"""
    model_config = ConfigDict(frozen=True)

    mention_id: str
    rank: float = Field(..., ge=1.0, description="1-based, may be fractional under the average policy")


class RankReport(BaseModel):
    """Per-mention ranks and the H@k / MRR aggregates"""
    model_config = ConfigDict(frozen=True)

    per_mention: Tuple[MentionRank, ...] = Field(...)
    hits_at_1: float = Field(..., ge=0.0, le=100.0)
    hits_at_3: float = Field(..., ge=0.0, le=100.0)
    hits_at_5: float = Field(..., ge=0.0, le=100.0)
    mrr: float = Field(..., gt=0.0, le=1.0)
    tie_policy: TiePolicy = Field(default=TiePolicy.PESSIMISTIC)
    mention_count: int = Field(..., gt=0)

    @model_validator(mode="after")
    def check_order(self) -> "RankReport":
        if not self.hits_at_1 <= self.hits_at_3 <= self.hits_at_5:
            raise ValueError("hits must be non-decreasing in k")
        return self

    def aggregates(self) -> Dict[str, Any]:
        return {
            "hits_at_1": self.hits_at_1,
            "hits_at_3": self.hits_at_3,
            "hits_at_5": self.hits_at_5,
            "mrr": self.mrr,
            "mention_count": self.mention_count,
            "tie_policy": self.tie_policy.value,
        }


class PooledSimilarity(BaseModel):
    """Mean view-to-reference cosine, individually and after max pooling"""
    model_config = ConfigDict(frozen=True)

    individual_mean: float
    pooled_mean: float
    mention_count: int = Field(..., gt=0)

    @property
    def gain(self) -> float:
        return self.pooled_mean - self.individual_mean


# Error Models

class EvaluationError(Exception):
    """Base evaluation error class"""

    def __init__(self, message: str, code: str = "EVALUATION_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}
