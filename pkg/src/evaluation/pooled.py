"""
Pooled-similarity analysis of synthetic views against reference images
"""

from typing import Sequence

import numpy as np

from ..cvacpt.models import EmptyViewSetError, ViewSet
from ..kb.models import DimensionMismatchError
from ..matching.scorer import cosine
from .models import EvaluationError, PooledSimilarity


def pooled_similarity(view_sets: Sequence[ViewSet], references: Sequence[np.ndarray]) -> PooledSimilarity:
    """
    Compare raw views with their reference image embedding

    Individual mode averages, over mentions, the mean cosine of each view to the
    reference. Pooled mode takes the cosine of the elementwise max of the views.

    Args:
        view_sets: One ViewSet per mention
        references: Ground-truth image embedding per mention

    Returns:
        PooledSimilarity with both means
    """
    if len(view_sets) == 0:
        raise EvaluationError("no mentions to analyze", "EMPTY_EVALUATION")
    if len(view_sets) != len(references):
        raise EvaluationError("one reference per view set required", "LENGTH_MISMATCH")

    individual = []
    pooled = []
    for views, reference in zip(view_sets, references):
        if views.n_views == 0:
            raise EmptyViewSetError()
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != (views.dim,):
            raise DimensionMismatchError(views.dim, int(reference.shape[-1]), "reference")
        individual.append(np.mean([cosine(view, reference) for view in views.views]))
        pooled.append(cosine(views.views.max(axis=0), reference))

    return PooledSimilarity(
        individual_mean=float(np.mean(individual)),
        pooled_mean=float(np.mean(pooled)),
        mention_count=len(view_sets),
    )
