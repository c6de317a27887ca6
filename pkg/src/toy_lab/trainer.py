"""
Projection-matcher training with conditional or random negatives
"""

from typing import Optional, Tuple

import numpy as np

from ..config.logger import get_logger
from ..evaluation.models import RankReport, TiePolicy
from ..evaluation.ranking import evaluate
from ..matching.features import FeatureStore
from ..matching.models import MatcherConfig, MatcherVariant
from ..matching.objective import contrastive_loss_rows
from ..mining.jaccard import build_exact_table
from ..mining.models import NegativeTable
from ..mining.sampler import batches_for_table, sample_random_many
from .models import DivergedLossError, NegativeStrategy, ToyDataset, ToyModel, TrainResult

logger = get_logger()


def init_model(input_dim: int = 32, projection_dim: int = 16, seed: int = 5,
               matcher: Optional[MatcherConfig] = None, learning_rate: float = 0.1,
               epochs: int = 200, k: int = 4) -> ToyModel:
    """Projection entries ~ Normal(0, 1 / sqrt(input_dim))"""
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((projection_dim, input_dim)) / np.sqrt(input_dim)
    return ToyModel(projection=projection, matcher=matcher or MatcherConfig(),
                    learning_rate=learning_rate, epochs=epochs, k=k)


def _unit_rows(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.where(norms > 0.0, x / safe, 0.0), safe


def _unit_backward(unit: np.ndarray, norms: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Pull gradients w.r.t. unit rows back to the raw rows; zero rows get zero"""
    radial = np.sum(unit * grad, axis=-1, keepdims=True)
    return np.where(unit.any(axis=-1, keepdims=True), (grad - unit * radial) / norms, 0.0)


def model_gradient(model: ToyModel, mention_inputs: np.ndarray,
                   candidate_inputs: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean contrastive loss and its gradient w.r.t. the projection

    Args:
        model: Current model
        mention_inputs: B x D raw mention embeddings
        candidate_inputs: B x (k + 1) x D raw entity embeddings, positive first

    Returns:
        (mean loss, gradient with the projection's shape)
    """
    w = model.projection
    tau = model.matcher.temperature
    batch = mention_inputs.shape[0]

    unit_m, norm_m = _unit_rows(mention_inputs @ w.T)
    unit_c, norm_c = _unit_rows(candidate_inputs @ w.T)
    scores = np.einsum("bp,bjp->bj", unit_m, unit_c) / tau

    losses, grad_scores = contrastive_loss_rows(scores)
    grad_scores = grad_scores / (batch * tau)

    grad_unit_m = np.einsum("bj,bjp->bp", grad_scores, unit_c)
    grad_unit_c = grad_scores[:, :, None] * unit_m[:, None, :]

    grad_proj_m = _unit_backward(unit_m, norm_m, grad_unit_m)
    grad_proj_c = _unit_backward(unit_c, norm_c, grad_unit_c)

    grad_w = grad_proj_m.T @ mention_inputs + np.einsum("bjp,bjd->pd", grad_proj_c, candidate_inputs)
    return float(np.mean(losses)), grad_w


def conditional_negatives(data: ToyDataset, k: int, seed: int,
                          table: Optional[NegativeTable] = None) -> np.ndarray:
    """B x k negatives taken from the Jaccard table, fixed across epochs"""
    if table is None:
        table = build_exact_table(data.kb, k)
    batches = batches_for_table(table, data.positives(data.train_mentions).tolist(), k, seed)
    return np.array([batch.negatives for batch in batches], dtype=np.int64)


def train(model: ToyModel, data: ToyDataset, strategy: NegativeStrategy, seed: int,
          table: Optional[NegativeTable] = None) -> TrainResult:
    """
    Full-batch gradient descent on the training mentions

    Conditional runs reuse the mined negatives (from `table` when given) every
    epoch; random runs draw fresh uniform negatives per epoch from a generator
    seeded by (seed, epoch).

    Raises:
        DivergedLossError: Loss or projection became non-finite
    """
    strategy = NegativeStrategy(strategy)
    positives = data.positives(data.train_mentions)
    mention_inputs = data.matrix[data.text_rows(data.train_mentions)]
    entity_matrix = data.entity_matrix

    fixed = conditional_negatives(data, model.k, seed, table) if strategy == NegativeStrategy.CONDITIONAL else None
    logger.log_seed("toy_train", seed, strategy=strategy.value, k=model.k, epochs=model.epochs)

    projection = model.projection.copy()
    curve = []
    for epoch in range(model.epochs):
        if fixed is not None:
            negatives = fixed
        else:
            rng = np.random.default_rng([seed, epoch])
            negatives = sample_random_many(data.kb.size, positives, model.k, rng)
        candidates = np.concatenate([positives[:, None], negatives], axis=1)

        current = model.model_copy(update={"projection": projection})
        loss, grad = model_gradient(current, mention_inputs, entity_matrix[candidates])
        projection = projection - model.learning_rate * grad

        if not np.isfinite(loss) or not np.all(np.isfinite(projection)):
            raise DivergedLossError(epoch, loss)
        curve.append(loss)
        logger.log_epoch(epoch, loss, strategy=strategy.value)

    trained = model.model_copy(update={"projection": projection})
    return TrainResult(model=trained, loss_curve=tuple(curve), strategy=strategy, seed=seed)


def evaluate_model(model: ToyModel, data: ToyDataset, policy: TiePolicy = TiePolicy.PESSIMISTIC,
                   seed: int = 5, threads: int = 1) -> RankReport:
    """Project every row, then rank held-out mentions against the full KB"""
    cfg = model.matcher.model_copy(update={"variant": MatcherVariant.COSINE_TEXT})
    features = FeatureStore(data.kb, data.test_mentions, model.project(data.matrix))
    return evaluate(features, cfg, policy, threads=threads, seed=seed)


def format_loss_curve(curve) -> str:
    """Two columns: epoch and mean loss"""
    lines = ["epoch\tloss"]
    lines.extend(f"{epoch}\t{loss:.10g}" for epoch, loss in enumerate(curve))
    return "\n".join(lines) + "\n"
