"""
Data models for the multimodal knowledge base
Pydantic models for entities, mentions and per-item feature bundles
"""

import hashlib
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Entity(BaseModel):
    """Knowledge-base entity: name, image refs, description and attribute set"""
    model_config = ConfigDict(frozen=True, extra="ignore")

    id: str = Field(..., description="Unique entity identifier")
    name: str = Field(default="", description="Entity name")
    attributes: Tuple[str, ...] = Field(default=(), description="Attribute tokens, first-seen order, unique")
    description: str = Field(default="", description="Free-text description, may be empty")
    image_rows: Tuple[int, ...] = Field(default=(), description="Embedding-store rows of entity images")
    text_row: Optional[int] = Field(None, ge=0, description="Embedding-store row of the global text feature")

    @field_validator("id")
    @classmethod
    def strip_id(cls, v: str) -> str:
        return v.strip()

    @field_validator("attributes", mode="before")
    @classmethod
    def normalize_attributes(cls, v):
        if v is None:
            return ()
        tokens: List[str] = []
        seen = set()
        for raw in v:
            token = str(raw).strip()
            if not token:
                raise ValueError("attribute tokens must be non-empty after trimming")
            if token not in seen:
                seen.add(token)
                tokens.append(token)
        return tuple(tokens)

    @field_validator("image_rows")
    @classmethod
    def validate_rows(cls, v):
        if any(row < 0 for row in v):
            raise ValueError("image rows must be non-negative")
        return v

    @property
    def attribute_set(self) -> FrozenSet[str]:
        return frozenset(self.attributes)

    @property
    def has_image(self) -> bool:
        return len(self.image_rows) > 0


class Mention(BaseModel):
    """Mention words in their sentence, with image, synthetic views and gold entity"""
    model_config = ConfigDict(frozen=True, extra="ignore")

    id: str = Field(..., min_length=1, description="Unique mention identifier")
    mention_words: str = Field(..., description="Surface form of the mention")
    sentence: str = Field(..., description="Sentence the mention occurs in")
    gold_entity: str = Field(..., min_length=1, description="Id of the gold entity")
    image_row: Optional[int] = Field(None, ge=0, description="Row of the mention image global feature")
    synthetic_rows: Tuple[int, ...] = Field(default=(), description="Rows of the synthetic-view globals")
    text_row: int = Field(..., ge=0, description="Row of the mention text global feature")
    patch_rows: Tuple[int, ...] = Field(default=(), description="Rows of the mention image patch features")

    @field_validator("synthetic_rows", "patch_rows")
    @classmethod
    def validate_rows(cls, v):
        if any(row < 0 for row in v):
            raise ValueError("rows must be non-negative")
        return v

    @property
    def has_image(self) -> bool:
        return self.image_row is not None

    @property
    def words_in_sentence(self) -> bool:
        return self.mention_words in self.sentence


class FeatureBundle(BaseModel):
    """Global vector plus per-patch local matrix for one modality of one item"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    global_features: np.ndarray = Field(..., description="Global vector of length d")
    local_features: np.ndarray = Field(..., description="Local matrix n_p x d")

    @model_validator(mode="before")
    @classmethod
    def coerce_arrays(cls, data: Any) -> Any:
        if isinstance(data, dict):
            vector = np.asarray(data.get("global_features"), dtype=np.float64)
            if vector.ndim != 1 or vector.size == 0:
                raise ValueError("global features must be a non-empty vector")
            local = data.get("local_features")
            if local is None or np.size(local) == 0:
                local = np.zeros((0, vector.size), dtype=np.float64)
            else:
                local = np.asarray(local, dtype=np.float64)
                if local.ndim != 2 or local.shape[1] != vector.size:
                    raise ValueError("local features must be n_p x d with the global width")
            data = {**data, "global_features": vector, "local_features": local}
        return data

    @model_validator(mode="after")
    def check_finite(self) -> "FeatureBundle":
        if not np.all(np.isfinite(self.global_features)) or not np.all(np.isfinite(self.local_features)):
            raise ValueError("feature bundles must be finite")
        return self

    @property
    def dim(self) -> int:
        return int(self.global_features.shape[0])

    @property
    def n_patches(self) -> int:
        return int(self.local_features.shape[0])

    @classmethod
    def zeros(cls, dim: int) -> "FeatureBundle":
        """Stand-in for a missing image: zero global, no patches"""
        return cls(global_features=np.zeros(dim), local_features=np.zeros((0, dim)))


class KnowledgeBase(BaseModel):
    """Ordered entity collection with id index and dense attribute vocabulary"""
    model_config = ConfigDict(frozen=True)

    entities: Tuple[Entity, ...] = Field(default=(), description="Entities in ordinal order")
    index: Dict[str, int] = Field(default_factory=dict, description="Entity id to ordinal")
    attribute_vocab: Dict[str, int] = Field(default_factory=dict, description="Attribute token to dense id")

    @property
    def size(self) -> int:
        return len(self.entities)

    @property
    def vocab_size(self) -> int:
        return len(self.attribute_vocab)

    @property
    def entity_ids(self) -> List[str]:
        return [entity.id for entity in self.entities]

    @property
    def fingerprint(self) -> str:
        """64-bit stable hash of the entity-id list, hex encoded"""
        digest = hashlib.blake2b(digest_size=8)
        for entity_id in self.entity_ids:
            digest.update(entity_id.encode("utf-8"))
            digest.update(b"\x1f")
        return digest.hexdigest()

    def ordinal(self, entity_id: str) -> int:
        try:
            return self.index[entity_id]
        except KeyError:
            raise UnknownEntityError(entity_id) from None

    def get(self, entity_id: str) -> Entity:
        return self.entities[self.ordinal(entity_id)]


# Error Models

class KBError(Exception):
    """Base knowledge-base error class"""

    def __init__(self, message: str, code: str = "KB_ERROR",
                 exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class DuplicateIdError(KBError):
    """Two entities share one id"""

    def __init__(self, entity_id: str):
        super().__init__(f"Duplicate entity id: {entity_id}", "DUPLICATE_ID", 1, {"id": entity_id})
        self.entity_id = entity_id


class EmptyIdError(KBError):
    """Entity id is empty after trimming"""

    def __init__(self, position: int):
        super().__init__(f"Empty entity id at position {position}", "EMPTY_ID", 1, {"position": position})
        self.position = position


class UnknownAttributeError(KBError):
    """Attribute token missing from the vocabulary"""

    def __init__(self, token: str):
        super().__init__(f"Unknown attribute: {token}", "UNKNOWN_ATTRIBUTE", 1, {"token": token})
        self.token = token


class UnknownEntityError(KBError):
    """Entity id not present in the knowledge base"""

    def __init__(self, entity_id: str):
        super().__init__(f"Unknown entity: {entity_id}", "UNKNOWN_ENTITY", 1, {"id": entity_id})
        self.entity_id = entity_id


class DimensionMismatchError(KBError):
    """Feature widths disagree within one run"""

    def __init__(self, expected: int, found: int, what: str = "feature"):
        super().__init__(f"{what} dimension {found} does not match {expected}", "DIMENSION_MISMATCH", 1,
                         {"expected": expected, "found": found, "what": what})
        self.expected = expected
        self.found = found
