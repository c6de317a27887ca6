"""
Conditional contrastive objective
Negative log-softmax of the positive against its k negatives, with analytic gradients
"""

from typing import Sequence, Tuple

import numpy as np

from ..mining.models import TrainingBatch
from .features import FeatureStore
from .models import LossResult, MatcherConfig, NonFiniteScoreError, TooFewCandidatesError
from .scorer import score, score_gradients


def contrastive_loss_rows(score_matrix) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row-wise loss over a (batch, k + 1) score matrix, positive in column 0

    Returns:
        (losses of shape (batch,), gradient of the same shape as the input)
    """
    scores = np.asarray(score_matrix, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores.reshape(1, -1)
    if scores.shape[1] < 2:
        raise TooFewCandidatesError(int(scores.shape[1]))
    bad = np.argwhere(~np.isfinite(scores))
    if bad.size:
        raise NonFiniteScoreError(int(bad[0][1]))

    shift = scores.max(axis=1, keepdims=True)
    exp = np.exp(scores - shift)
    total = exp.sum(axis=1, keepdims=True)
    log_sum = shift[:, 0] + np.log(total[:, 0])
    losses = log_sum - scores[:, 0]

    grad = exp / total
    grad[:, 0] -= 1.0
    return losses, grad


def contrastive_loss(scores: Sequence[float]) -> LossResult:
    """
    Loss for one score vector (positive first, then k negatives)

    Examples:
        equal scores with k = 4 give ln 5; (1, 0, 0) gives 0.551445
    """
    losses, grad = contrastive_loss_rows(np.asarray(scores, dtype=np.float64).reshape(1, -1))
    return LossResult(loss=float(max(losses[0], 0.0)), score_gradient=grad[0])


def batch_loss(batches: Sequence[TrainingBatch], features: FeatureStore, cfg: MatcherConfig) -> LossResult:
    """
    Mean loss over training batches, chained through the matcher

    Args:
        batches: Positive and negatives per mention
        features: Store the batches index into
        cfg: Matcher configuration

    Returns:
        LossResult with the averaged score gradient and the gradient w.r.t.
        the store's embedding matrix
    """
    if not batches:
        raise ValueError("batch_loss needs at least one batch")
    embedding_grad = np.zeros_like(features.matrix, dtype=np.float64)
    total_loss = 0.0
    score_grad_sum = None
    width = None

    for batch in batches:
        mention = features.mention_features(batch.mention_ordinal)
        candidates = batch.candidates
        if width is None:
            width = len(candidates)
        elif width != len(candidates):
            raise ValueError("all batches must carry the same number of negatives")

        entity_features = [features.entity_features(e) for e in candidates]
        scores = np.array([score(mention, entity, cfg) for entity in entity_features], dtype=np.float64)
        result = contrastive_loss(scores)
        total_loss += result.loss
        score_grad_sum = result.score_gradient.copy() if score_grad_sum is None \
            else score_grad_sum + result.score_gradient

        for weight, ordinal, entity in zip(result.score_gradient, candidates, entity_features):
            partials = score_gradients(mention, entity, cfg)
            scaled = {name: weight * value for name, value in partials.items()}
            features.scatter_mention(embedding_grad, batch.mention_ordinal, scaled)
            features.scatter_entity(embedding_grad, ordinal, scaled)

    count = float(len(batches))
    return LossResult(
        loss=total_loss / count,
        score_gradient=score_grad_sum / count,
        embedding_gradient=embedding_grad / count,
    )
