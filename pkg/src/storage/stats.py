"""
Image-availability statistics over mention / gold-entity pairs
"""

from typing import Sequence

from ..kb.models import KnowledgeBase, Mention
from .models import DatasetStats


def dataset_stats(kb: KnowledgeBase, mentions: Sequence[Mention]) -> DatasetStats:
    """Classify each mention by whether it and its gold entity carry an image"""
    counts = {"both_have_image": 0, "mention_only": 0, "entity_only": 0, "neither": 0}
    for mention in mentions:
        entity_has_image = kb.get(mention.gold_entity).has_image
        if mention.has_image and entity_has_image:
            counts["both_have_image"] += 1
        elif mention.has_image:
            counts["mention_only"] += 1
        elif entity_has_image:
            counts["entity_only"] += 1
        else:
            counts["neither"] += 1
    return DatasetStats(**counts)
