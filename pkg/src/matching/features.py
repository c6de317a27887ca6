"""
Feature lookup over the embedding store
Resolves mention and entity rows into ItemFeatures and scatters gradients back
"""

from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config.logger import get_logger
from ..cvacpt.models import CvacptParams, ViewSet
from ..cvacpt.transform import transform_with_views
from ..kb.models import FeatureBundle, KnowledgeBase, Mention
from ..storage.models import EmbeddingStore
from .models import ItemFeatures, MissingFeatureRowError

logger = get_logger()


class FeatureStore:
    """KB, mentions and a float64 embedding matrix shared by matcher and evaluator"""

    def __init__(self, kb: KnowledgeBase, mentions: Sequence[Mention], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] == 0:
            raise ValueError("feature matrix must be 2-D with a positive width")
        self.kb = kb
        self.mentions: List[Mention] = list(mentions)
        self.matrix = matrix
        self._entity_cache: Dict[int, ItemFeatures] = {}

    @classmethod
    def from_store(cls, kb: KnowledgeBase, mentions: Sequence[Mention], store: EmbeddingStore) -> "FeatureStore":
        return cls(kb, mentions, store.data.astype(np.float64))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    def row(self, index: int, owner: str) -> np.ndarray:
        if not 0 <= index < self.n_rows:
            raise MissingFeatureRowError(index, self.n_rows, owner)
        return self.matrix[index]

    def rows(self, indices: Sequence[int], owner: str) -> np.ndarray:
        for index in indices:
            if not 0 <= index < self.n_rows:
                raise MissingFeatureRowError(index, self.n_rows, owner)
        if not indices:
            return np.zeros((0, self.dim), dtype=np.float64)
        return self.matrix[list(indices)]

    def entity_features(self, ordinal: int) -> ItemFeatures:
        """Text row (or zeros) and the mean of the image rows (or zeros)"""
        cached = self._entity_cache.get(ordinal)
        if cached is not None:
            return cached
        entity = self.kb.entities[ordinal]
        owner = f"entity {entity.id}"
        if entity.text_row is None:
            text = np.zeros(self.dim)
        else:
            text = self.row(entity.text_row, owner)
        if entity.has_image:
            visual = self.rows(entity.image_rows, owner).mean(axis=0)
        else:
            visual = np.zeros(self.dim)
        features = ItemFeatures(
            text=FeatureBundle(global_features=text, local_features=None),
            visual=FeatureBundle(global_features=visual, local_features=None),
        )
        self._entity_cache[ordinal] = features
        return features

    def all_entity_features(self) -> List[ItemFeatures]:
        return [self.entity_features(ordinal) for ordinal in range(self.kb.size)]

    def view_set(self, ordinal: int) -> Optional[ViewSet]:
        """Synthetic-view globals of a mention, or None when it has none"""
        mention = self.mentions[ordinal]
        if not mention.synthetic_rows:
            return None
        return ViewSet(views=self.rows(mention.synthetic_rows, f"mention {mention.id}"))

    def mention_features(self, ordinal: int, cvacpt_params: Optional[CvacptParams] = None) -> ItemFeatures:
        """
        Mention text and visual bundles

        Args:
            ordinal: Mention position in the loaded file
            cvacpt_params: When given, the visual bundle is transformed with the
                pooled synthetic views; mentions lacking an image or views are
                returned unchanged
        """
        mention = self.mentions[ordinal]
        owner = f"mention {mention.id}"
        text = FeatureBundle(global_features=self.row(mention.text_row, owner), local_features=None)
        if mention.has_image:
            visual = FeatureBundle(global_features=self.row(mention.image_row, owner),
                                   local_features=self.rows(mention.patch_rows, owner))
        else:
            visual = FeatureBundle.zeros(self.dim)

        if cvacpt_params is not None and mention.has_image:
            views = self.view_set(ordinal)
            if views is not None:
                visual = transform_with_views(visual, text.global_features, views, cvacpt_params)
        return ItemFeatures(text=text, visual=visual)

    def transform_mention(self, ordinal: int, cvacpt_params: CvacptParams) -> ItemFeatures:
        """Visual bundle rewritten by the patch transform; text untouched"""
        return self.mention_features(ordinal, cvacpt_params)

    def gold_ordinal(self, ordinal: int) -> int:
        return self.kb.ordinal(self.mentions[ordinal].gold_entity)

    def scatter_mention(self, grad: np.ndarray, ordinal: int, partials: Dict[str, np.ndarray]) -> None:
        """Add d/d(mention globals) into the rows they were read from"""
        mention = self.mentions[ordinal]
        grad[mention.text_row] += partials["mention_text"]
        if mention.has_image:
            grad[mention.image_row] += partials["mention_visual"]

    def scatter_entity(self, grad: np.ndarray, ordinal: int, partials: Dict[str, np.ndarray]) -> None:
        """Add d/d(entity globals) into the rows; mean image rows share the visual term"""
        entity = self.kb.entities[ordinal]
        if entity.text_row is not None:
            grad[entity.text_row] += partials["entity_text"]
        if entity.has_image:
            share = partials["entity_visual"] / len(entity.image_rows)
            for row in entity.image_rows:
                grad[row] += share
