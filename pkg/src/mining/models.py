"""
Data models for hard-negative mining
Negative tables, MinHash index, training batches and mining errors
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


MERSENNE_PRIME_61 = (1 << 61) - 1


class MiningMethod(str, Enum):
    """How the candidate lists were selected"""
    EXACT = "exact"
    MINHASH = "minhash"


class NegativeSource(str, Enum):
    """Provenance of one negative in a training batch"""
    MINED = "mined"
    RANDOM_FILL = "random-fill"
    RANDOM = "random"


class SamplingMode(str, Enum):
    """How conditional negatives are taken from a full-length table list"""
    TOP_K = "top_k"
    UNIFORM = "uniform"


class NegativeTable(BaseModel):
    """Per-entity top-k hard negatives with their Jaccard scores"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1, description="Requested list length")
    lists: Tuple[Tuple[Tuple[int, float], ...], ...] = Field(..., description="Ordinal -> ((ordinal, score), ...)")
    method: MiningMethod = Field(default=MiningMethod.EXACT)
    seed: Optional[int] = Field(None, description="Seed of the approximate path")
    kb_fingerprint: str = Field(..., description="Fingerprint of the KB the table was mined on")

    @model_validator(mode="after")
    def check_lists(self) -> "NegativeTable":
        for owner, negatives in enumerate(self.lists):
            if len(negatives) > self.k:
                raise ValueError(f"list {owner} longer than k")
            previous = None
            for ordinal, score in negatives:
                if ordinal == owner:
                    raise ValueError(f"list {owner} contains its own entity")
                if not 0.0 <= score <= 1.0:
                    raise ValueError(f"score {score} outside [0, 1]")
                if previous is not None and score > previous:
                    raise ValueError(f"list {owner} is not sorted by score")
                previous = score
        return self

    @property
    def size(self) -> int:
        return len(self.lists)

    def negatives_of(self, ordinal: int) -> List[int]:
        return [candidate for candidate, _ in self.lists[ordinal]]


class MinHashIndex(BaseModel):
    """MinHash signatures with LSH band buckets"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    signature_length: int = Field(..., ge=1)
    bands: int = Field(..., ge=1)
    rows_per_band: int = Field(..., ge=1)
    signatures: np.ndarray = Field(..., description="N x L uint64 hash minima")
    coefficients_a: Tuple[int, ...] = Field(..., description="Multipliers a_i in [1, p)")
    coefficients_b: Tuple[int, ...] = Field(..., description="Offsets b_i in [0, p)")
    prime: int = Field(default=MERSENNE_PRIME_61)
    seed: int = Field(...)
    kb_fingerprint: str = Field(...)
    buckets: Tuple[Dict[int, Tuple[int, ...]], ...] = Field(..., description="Per band: band hash -> ordinals")

    @model_validator(mode="after")
    def check_shapes(self) -> "MinHashIndex":
        if self.bands * self.rows_per_band != self.signature_length:
            raise ValueError("bands * rows_per_band must equal signature_length")
        if self.signatures.ndim != 2 or self.signatures.shape[1] != self.signature_length:
            raise ValueError("signatures must be N x signature_length")
        if len(self.buckets) != self.bands:
            raise ValueError("one bucket map per band is required")
        return self

    @property
    def size(self) -> int:
        return int(self.signatures.shape[0])


class TrainingBatch(BaseModel):
    """One positive mention-entity pair with its k negatives"""
    model_config = ConfigDict(frozen=True)

    mention_ordinal: int = Field(..., ge=0)
    positive: int = Field(..., ge=0)
    negatives: Tuple[int, ...] = Field(...)
    provenance: Tuple[NegativeSource, ...] = Field(...)

    @model_validator(mode="after")
    def check_negatives(self) -> "TrainingBatch":
        if self.positive in self.negatives:
            raise ValueError("positive entity drawn as its own negative")
        if len(set(self.negatives)) != len(self.negatives):
            raise ValueError("negatives must be pairwise distinct")
        if len(self.provenance) != len(self.negatives):
            raise ValueError("one provenance flag per negative")
        return self

    @property
    def candidates(self) -> List[int]:
        """Positive first, then negatives"""
        return [self.positive, *self.negatives]

    @property
    def mined_count(self) -> int:
        return sum(1 for flag in self.provenance if flag == NegativeSource.MINED)


# Error Models

class MiningError(Exception):
    """Base mining error class"""

    def __init__(self, message: str, code: str = "MINING_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class BadBandConfigError(MiningError):
    """bands * rows does not equal the signature length"""

    def __init__(self, signature_length: int, bands: int, rows: int):
        super().__init__(
            f"Bad band config: {bands} bands x {rows} rows != signature length {signature_length}",
            "BAD_BAND_CONFIG", 1,
            {"signature_length": signature_length, "bands": bands, "rows": rows}
        )


class IndexMismatchError(MiningError):
    """Index or table built on a different knowledge base"""

    def __init__(self, expected: str, found: str):
        super().__init__(f"Built on KB {found}, expected {expected}", "INDEX_MISMATCH", 1,
                         {"expected": expected, "found": found})


class PositiveNotInTableError(MiningError):
    """Positive ordinal outside the table"""

    def __init__(self, positive: int, size: int):
        super().__init__(f"Positive {positive} not covered by a table of {size} entities",
                         "POSITIVE_NOT_IN_TABLE", 1, {"positive": positive, "size": size})


class InvalidSampleSizeError(MiningError):
    """k below one"""

    def __init__(self, k: int):
        super().__init__(f"k must be >= 1, got {k}", "INVALID_SAMPLE_SIZE", 1, {"k": k})
