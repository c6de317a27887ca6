"""
Data models for the controllable patch transform
Network weights, synthetic view sets and transform errors
"""

from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


# name -> (rows, cols) as a function of d
PARAM_SHAPES = {
    "ce_w1": lambda d: (d, 2 * d),
    "ce_b1": lambda d: (1, d),
    "ce_w2": lambda d: (d, d),
    "ce_b2": lambda d: (1, d),
    "ag_w1": lambda d: (d, 2 * d),
    "ag_b1": lambda d: (1, d),
    "ag_w2": lambda d: (2 * d, d),
    "ag_b2": lambda d: (1, 2 * d),
    "al_w1": lambda d: (d, 2 * d),
    "al_b1": lambda d: (1, d),
    "al_w2": lambda d: (2 * d, d),
    "al_b2": lambda d: (1, 2 * d),
}


class TwoLayerNet(BaseModel):
    """y = W2 relu(W1 x + b1) + b2, weights stored (out, in)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @model_validator(mode="after")
    def check_layers(self) -> "TwoLayerNet":
        for name in ("w1", "b1", "w2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("weights must be matrices")
        if self.b1.shape != (self.w1.shape[0],) or self.b2.shape != (self.w2.shape[0],):
            raise ValueError("bias widths must match layer outputs")
        if self.w2.shape[1] != self.w1.shape[0]:
            raise ValueError("layer widths do not chain")
        return self

    @property
    def in_features(self) -> int:
        return int(self.w1.shape[1])

    @property
    def out_features(self) -> int:
        return int(self.w2.shape[0])

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector or to each row of a matrix, in float64"""
        w1 = self.w1.astype(np.float64)
        w2 = self.w2.astype(np.float64)
        hidden = np.maximum(np.asarray(x, dtype=np.float64) @ w1.T + self.b1.astype(np.float64), 0.0)
        return hidden @ w2.T + self.b2.astype(np.float64)


class CvacptParams(BaseModel):
    """Contextual encoder, global and local affine predictors, and the blend w"""
    model_config = ConfigDict(frozen=True)

    dim: int = Field(..., gt=0)
    blend: float = Field(default=0.5, ge=0.0, le=1.0, description="w in [0, 1]")
    contextual: TwoLayerNet = Field(..., description="CE: 2d -> d -> d")
    global_affine: TwoLayerNet = Field(..., description="A^G: 2d -> d -> 2d, yields alpha and beta")
    local_affine: TwoLayerNet = Field(..., description="A^L: per-patch, same shapes as A^G")

    @model_validator(mode="after")
    def check_shapes(self) -> "CvacptParams":
        d = self.dim
        if (self.contextual.in_features, self.contextual.out_features) != (2 * d, d):
            raise ValueError("contextual encoder must map 2d -> d")
        for net in (self.global_affine, self.local_affine):
            if (net.in_features, net.out_features) != (2 * d, 2 * d):
                raise ValueError("affine predictors must map 2d -> 2d")
        return self

    def matrices(self) -> Dict[str, np.ndarray]:
        """Named weights as 2-D matrices, biases as 1 x n"""
        out = {}
        for prefix, net in (("ce", self.contextual), ("ag", self.global_affine), ("al", self.local_affine)):
            out[f"{prefix}_w1"] = net.w1
            out[f"{prefix}_b1"] = net.b1.reshape(1, -1)
            out[f"{prefix}_w2"] = net.w2
            out[f"{prefix}_b2"] = net.b2.reshape(1, -1)
        return out


class ViewSet(BaseModel):
    """Global embeddings of the n_s synthetic views of one mention"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    views: np.ndarray = Field(..., description="n_s x d")

    @model_validator(mode="before")
    @classmethod
    def coerce_views(cls, data: Any) -> Any:
        if isinstance(data, dict):
            views = np.asarray(data.get("views"), dtype=np.float64)
            if views.size == 0:
                raise EmptyViewSetError()
            if views.ndim == 1:
                views = views.reshape(1, -1)
            if views.ndim != 2:
                raise ValueError("views must be an n_s x d matrix")
            data = {**data, "views": views}
        return data

    @property
    def n_views(self) -> int:
        return int(self.views.shape[0])

    @property
    def dim(self) -> int:
        return int(self.views.shape[1])


# Error Models

class CvacptError(Exception):
    """Base transform error class"""

    def __init__(self, message: str, code: str = "CVACPT_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class EmptyViewSetError(CvacptError):
    """No synthetic views to pool"""

    def __init__(self, owner: str = ""):
        super().__init__(f"Empty view set{f' for {owner}' if owner else ''}", "EMPTY_VIEW_SET", 1,
                         {"owner": owner})


class ShapeMismatchError(CvacptError):
    """Stored weight shape disagrees with the manifest"""

    def __init__(self, name: str, expected, found):
        super().__init__(f"{name}: expected shape {tuple(expected)}, found {tuple(found)}",
                         "SHAPE_MISMATCH", 1, {"name": name})
