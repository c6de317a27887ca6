"""
Data models for the synthetic toy lab
Fixture spec, projection model, training results and ablation reports
"""

from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..kb.models import KnowledgeBase, Mention
from ..matching.models import MatcherConfig


DEFAULT_K_VALUES = (2, 4, 6)
DEFAULT_SEEDS = (5, 6, 7, 8, 9)
DEFAULT_VIEW_COUNTS = (1, 2, 3, 5)


class NegativeStrategy(str, Enum):
    """Where the trainer draws negatives from"""
    CONDITIONAL = "conditional"
    RANDOM = "random"


class SyntheticSpec(BaseModel):
    """Grouped entities whose members share coarse attributes and differ in fine ones"""
    model_config = ConfigDict(frozen=True)

    groups: int = Field(default=20, ge=1)
    entities_per_group: int = Field(default=5, ge=1)
    coarse_attributes: int = Field(default=3, ge=0)
    fine_attributes: int = Field(default=2, ge=0)
    input_dim: int = Field(default=32, gt=0)
    group_dims: Optional[int] = Field(
        default=None, gt=0, description="Leading coordinates holding the group centroid; input_dim // 2 when unset"
    )
    group_scale: float = Field(default=1.0, gt=0)
    fine_scale: float = Field(default=0.3, ge=0)
    entity_noise: float = Field(default=0.5, ge=0, description="KB-side group-block perturbation mentions do not share")
    mention_noise: float = Field(default=0.2, ge=0)
    train_mentions: int = Field(default=4, ge=1, description="Training mentions per entity")
    test_mentions: int = Field(default=2, ge=1, description="Held-out mentions per entity")
    synthetic_views: int = Field(default=0, ge=0, description="When > 0, rows for images and n_s views are added")
    seed: int = Field(default=5)

    @model_validator(mode="after")
    def check_size(self) -> "SyntheticSpec":
        if self.groups * self.entities_per_group < 2:
            raise ValueError("need at least two entities")
        if self.input_dim < 2:
            raise ValueError("input_dim must hold a group and a fine block")
        if self.group_dims is not None and self.group_dims >= self.input_dim:
            raise ValueError("group_dims must leave room for the fine block")
        return self

    @property
    def n_entities(self) -> int:
        return self.groups * self.entities_per_group

    @property
    def coarse_dims(self) -> int:
        return self.group_dims if self.group_dims is not None else self.input_dim // 2


class ToyDataset(BaseModel):
    """Generated KB, embedding matrix and mention splits"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: SyntheticSpec
    kb: KnowledgeBase
    matrix: np.ndarray = Field(..., description="Entity rows, then train mentions, then test mentions")
    train_mentions: Tuple[Mention, ...]
    test_mentions: Tuple[Mention, ...]

    def positives(self, mentions) -> np.ndarray:
        return np.array([self.kb.ordinal(m.gold_entity) for m in mentions], dtype=np.int64)

    def text_rows(self, mentions) -> np.ndarray:
        return np.array([m.text_row for m in mentions], dtype=np.int64)

    @property
    def entity_matrix(self) -> np.ndarray:
        return self.matrix[:self.kb.size]


class ToyModel(BaseModel):
    """Trainable projection with a cosine matcher in projected space"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    projection: np.ndarray = Field(..., description="projection_dim x input_dim")
    matcher: MatcherConfig = Field(default_factory=MatcherConfig)
    learning_rate: float = Field(default=0.1, ge=0)
    epochs: int = Field(default=200, ge=0)
    k: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def check_projection(self) -> "ToyModel":
        if self.projection.ndim != 2:
            raise ValueError("projection must be a matrix")
        return self

    @property
    def input_dim(self) -> int:
        return int(self.projection.shape[1])

    @property
    def projection_dim(self) -> int:
        return int(self.projection.shape[0])

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.projection.T


class TrainResult(BaseModel):
    """Trained model and its per-epoch mean loss"""
    model_config = ConfigDict(frozen=True)

    model: ToyModel
    loss_curve: Tuple[float, ...]
    strategy: NegativeStrategy
    seed: int


class AblationRow(BaseModel):
    """Conditional vs random negatives for one k"""
    model_config = ConfigDict(frozen=True)

    k: int
    seeds: Tuple[int, ...]
    conditional_hits_at_1: float
    random_hits_at_1: float
    conditional_mrr: float
    random_mrr: float
    per_seed: Tuple[Dict[str, Any], ...] = Field(default=())

    @property
    def margin(self) -> float:
        return self.conditional_hits_at_1 - self.random_hits_at_1

    def to_document(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "seeds": list(self.seeds),
            "conditional": {"hits_at_1": self.conditional_hits_at_1, "mrr": self.conditional_mrr},
            "random": {"hits_at_1": self.random_hits_at_1, "mrr": self.random_mrr},
            "margin_hits_at_1": self.margin,
            "per_seed": list(self.per_seed),
        }


class AblationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: SyntheticSpec
    rows: Tuple[AblationRow, ...]

    def to_document(self) -> Dict[str, Any]:
        return {"spec": self.spec.model_dump(), "rows": [row.to_document() for row in self.rows]}


class ViewSweepRow(BaseModel):
    """Pooled vs individual view similarity for one view count"""
    model_config = ConfigDict(frozen=True)

    n_views: int = Field(..., ge=1)
    individual_mean: float
    pooled_mean: float
    pooled_wins: float = Field(..., ge=0.0, le=1.0, description="Fraction of trials with pooled > individual")
    trials: int = Field(..., gt=0)


# Error Models

class ToyLabError(Exception):
    """Base toy lab error class"""

    def __init__(self, message: str, code: str = "TOY_LAB_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class DivergedLossError(ToyLabError):
    """Loss or weights became non-finite during training"""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch} (loss {loss})", "DIVERGED_LOSS", 1,
                         {"epoch": epoch, "loss": loss})
        self.epoch = epoch
