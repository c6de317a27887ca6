"""
Conditional negative sampling for training pairs, plus the random baseline
"""

from typing import List, Sequence

import numpy as np

from ..config.logger import get_logger
from .models import (
    InvalidSampleSizeError, NegativeSource, NegativeTable, PositiveNotInTableError,
    SamplingMode, TrainingBatch
)

logger = get_logger()


def derive_seed(base_seed: int, mention_ordinal: int) -> int:
    """Per-mention seed for reproducible parallel epochs"""
    return base_seed ^ mention_ordinal


def sample_conditional(table: NegativeTable, positive: int, k: int, rng: np.random.Generator,
                       mode: SamplingMode = SamplingMode.TOP_K,
                       mention_ordinal: int = 0) -> TrainingBatch:
    """
    Draw the k conditional negatives of a positive entity

    Args:
        table: Mined hard-negative table
        positive: Ordinal of the positive entity
        k: Negatives wanted
        rng: Caller-owned generator, used for uniform mode and random fill
        mode: top_k takes the table prefix, uniform draws a k-subset of the list
        mention_ordinal: Mention the batch belongs to

    Returns:
        TrainingBatch with min(k, N - 1) negatives
    """
    if k < 1:
        raise InvalidSampleSizeError(k)
    n = table.size
    if not 0 <= positive < n:
        raise PositiveNotInTableError(positive, n)

    mined = table.negatives_of(positive)
    if len(mined) >= k:
        if mode == SamplingMode.UNIFORM:
            picks = np.sort(rng.choice(len(mined), size=k, replace=False))
            chosen = [mined[int(i)] for i in picks]
        else:
            chosen = mined[:k]
        return TrainingBatch(
            mention_ordinal=mention_ordinal,
            positive=positive,
            negatives=tuple(chosen),
            provenance=tuple([NegativeSource.MINED] * k),
        )

    taken = set(mined)
    taken.add(positive)
    remaining = np.array([e for e in range(n) if e not in taken], dtype=np.int64)
    deficit = min(k - len(mined), remaining.size)
    fill = [int(e) for e in rng.choice(remaining, size=deficit, replace=False)] if deficit > 0 else []

    if len(mined) + len(fill) < k:
        logger.warning("Candidate entities exhausted", positive=positive, k=k,
                       available=len(mined) + len(fill))

    return TrainingBatch(
        mention_ordinal=mention_ordinal,
        positive=positive,
        negatives=tuple(mined + fill),
        provenance=tuple([NegativeSource.MINED] * len(mined) + [NegativeSource.RANDOM_FILL] * len(fill)),
    )


def sample_random_many(n_entities: int, positives: Sequence[int], k: int,
                       rng: np.random.Generator) -> np.ndarray:
    """
    Uniform distinct negatives for many positives at once

    Each row ranks fresh uniform keys with the positive pushed to the end, so
    its first min(k, N - 1) columns are a uniform k-subset of the others.
    """
    if k < 1:
        raise InvalidSampleSizeError(k)
    positives = np.asarray(positives, dtype=np.int64)
    take = min(k, max(n_entities - 1, 0))
    keys = rng.random((positives.size, n_entities))
    keys[np.arange(positives.size), positives] = np.inf
    order = np.argsort(keys, axis=1, kind="stable")
    return order[:, :take]


def sample_random(n_entities: int, positive: int, k: int, rng: np.random.Generator,
                  mention_ordinal: int = 0) -> TrainingBatch:
    """Random-negative baseline: min(k, N - 1) distinct uniform entities other than the positive"""
    if not 0 <= positive < n_entities:
        raise PositiveNotInTableError(positive, n_entities)
    negatives = [int(e) for e in sample_random_many(n_entities, [positive], k, rng)[0]]
    return TrainingBatch(
        mention_ordinal=mention_ordinal,
        positive=positive,
        negatives=tuple(negatives),
        provenance=tuple([NegativeSource.RANDOM] * len(negatives)),
    )


def batches_for_table(table: NegativeTable, positives: Sequence[int], k: int, base_seed: int,
                      mode: SamplingMode = SamplingMode.TOP_K) -> List[TrainingBatch]:
    """Conditional batches for a list of mention positives, one generator per mention"""
    return [
        sample_conditional(table, positive, k, np.random.default_rng(derive_seed(base_seed, ordinal)),
                           mode=mode, mention_ordinal=ordinal)
        for ordinal, positive in enumerate(positives)
    ]
