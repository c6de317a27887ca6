"""
Data models for file storage
Embedding container, dataset statistics and ingestion errors
"""

from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


# EMB1 container layout
EMB_MAGIC = b"EMB1"
EMB_HEADER_FORMAT = "<4sIII"
EMB_HEADER_SIZE = 16
DTYPE_FLOAT32 = 0


class EmbeddingStore(BaseModel):
    """Row-major float32 matrix holding every encoder output of a run"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray = Field(..., description="rows x dim float32 matrix")
    source_path: str = Field(default="", description="File the store was loaded from")

    @model_validator(mode="after")
    def check_matrix(self) -> "EmbeddingStore":
        if self.data.ndim != 2:
            raise ValueError("embedding data must be a 2-D matrix")
        if self.data.dtype != np.float32:
            raise ValueError("embedding data must be float32")
        if self.data.shape[1] <= 0:
            raise ValueError("embedding dim must be positive")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("embedding data must be finite")
        return self

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])


class DatasetStats(BaseModel):
    """Mention / gold-entity image availability counts"""
    both_have_image: int = Field(default=0, ge=0)
    mention_only: int = Field(default=0, ge=0)
    entity_only: int = Field(default=0, ge=0)
    neither: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.both_have_image + self.mention_only + self.entity_only + self.neither

    def as_tuple(self):
        return (self.both_have_image, self.mention_only, self.entity_only, self.neither)


# Error Models

class StorageError(Exception):
    """Base storage error class"""

    def __init__(self, message: str, code: str = "STORAGE_ERROR",
                 exit_code: int = 2, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class ParseError(StorageError):
    """Malformed JSONL record"""

    def __init__(self, line: int, reason: str, path: str = ""):
        super().__init__(f"Parse error at line {line}: {reason}", "PARSE_ERROR", 1,
                         {"line": line, "reason": reason, "path": path})
        self.line = line
        self.reason = reason


class DanglingReferenceError(StorageError):
    """Mention whose gold entity is missing from the knowledge base"""

    def __init__(self, mention_id: str, entity_id: str, line: int):
        super().__init__(f"Mention {mention_id} references unknown entity {entity_id} (line {line})",
                         "DANGLING_REFERENCE", 1,
                         {"mention_id": mention_id, "entity_id": entity_id, "line": line})
        self.mention_id = mention_id
        self.entity_id = entity_id
        self.line = line


class BadMagicError(StorageError):
    """File does not start with the EMB1 magic"""

    def __init__(self, path: str, found: bytes):
        super().__init__(f"Bad magic in {path}: {found!r}", "BAD_MAGIC", 2, {"path": path})


class TruncatedFileError(StorageError):
    """Payload length disagrees with the declared sizes"""

    def __init__(self, path: str, expected: int, actual: int):
        super().__init__(f"{path}: expected {expected} bytes, found {actual}", "TRUNCATED_FILE", 2,
                         {"path": path, "expected": expected, "actual": actual})


class UnsupportedDtypeError(StorageError):
    """Dtype code other than binary32"""

    def __init__(self, path: str, dtype_code: int):
        super().__init__(f"{path}: unsupported dtype code {dtype_code}", "UNSUPPORTED_DTYPE", 2,
                         {"path": path, "dtype_code": dtype_code})


class NonFiniteValueError(StorageError):
    """NaN or infinity inside an embedding matrix"""

    def __init__(self, row: int, col: int, path: str = ""):
        super().__init__(f"Non-finite value at ({row}, {col})", "NON_FINITE_VALUE", 1,
                         {"row": row, "col": col, "path": path})
        self.row = row
        self.col = col
