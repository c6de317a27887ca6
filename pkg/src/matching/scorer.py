"""
Mention-entity matcher contract
CLIP-style global cosine over text, or over the fused text and visual globals
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence

import numpy as np

from ..config.logger import get_logger
from ..kb.models import DimensionMismatchError
from .models import ItemFeatures, MatcherConfig, MatcherVariant

logger = get_logger()


def normalize(x: np.ndarray) -> np.ndarray:
    """Unit vector in the direction of x; the zero vector maps to itself"""
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return np.zeros_like(x, dtype=np.float64)
    return x / norm


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity, defined as 0 when either side is the zero vector"""
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def fused_vector(item: ItemFeatures) -> np.ndarray:
    """u = (n(t) + n(v)) / 2 over the global features"""
    return 0.5 * (normalize(item.text.global_features) + normalize(item.visual.global_features))


def _check_dims(mention: ItemFeatures, entity: ItemFeatures) -> None:
    d = mention.text.dim
    for bundle, what in ((mention.visual, "mention visual"), (entity.text, "entity text"),
                         (entity.visual, "entity visual")):
        if bundle.dim != d:
            raise DimensionMismatchError(d, bundle.dim, what)


def score(mention: ItemFeatures, entity: ItemFeatures, cfg: MatcherConfig) -> float:
    """
    Score one mention against one entity

    Args:
        mention: Mention features (visual possibly transformed)
        entity: Entity features
        cfg: Matcher variant and temperature

    Returns:
        Cosine of the selected globals divided by the temperature
    """
    _check_dims(mention, entity)
    if cfg.variant == MatcherVariant.COSINE_TEXT:
        return cosine(mention.text.global_features, entity.text.global_features) / cfg.temperature

    u_mention = fused_vector(mention)
    u_entity = fused_vector(entity)
    if not np.any(u_mention) and not np.any(u_entity):
        logger.warning("Both fused vectors are zero, scoring 0")
        return 0.0
    return cosine(u_mention, u_entity) / cfg.temperature


def score_all(mention: ItemFeatures, entities: Sequence[ItemFeatures], cfg: MatcherConfig,
              threads: int = 1) -> np.ndarray:
    """Scores against every entity, in input order"""
    if threads > 1 and len(entities) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values: List[float] = list(pool.map(lambda entity: score(mention, entity, cfg), entities))
    else:
        values = [score(mention, entity, cfg) for entity in entities]
    return np.asarray(values, dtype=np.float64)


def _cosine_gradients(x: np.ndarray, y: np.ndarray):
    """(d cos / dx, d cos / dy); zero when either side is zero"""
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return np.zeros_like(x, dtype=np.float64), np.zeros_like(y, dtype=np.float64)
    c = np.dot(x, y) / (nx * ny)
    gx = y / (nx * ny) - c * x / (nx * nx)
    gy = x / (nx * ny) - c * y / (ny * ny)
    return gx, gy


def _normalize_backward(x: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. n(x) back to x"""
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return np.zeros_like(x, dtype=np.float64)
    n = x / norm
    return (grad - n * np.dot(n, grad)) / norm


def score_gradients(mention: ItemFeatures, entity: ItemFeatures, cfg: MatcherConfig) -> Dict[str, np.ndarray]:
    """
    Partial derivatives of score() w.r.t. the four global vectors

    Returns:
        Dict with mention_text, mention_visual, entity_text, entity_visual
    """
    _check_dims(mention, entity)
    d = mention.text.dim
    zero = np.zeros(d, dtype=np.float64)
    inv_tau = 1.0 / cfg.temperature

    if cfg.variant == MatcherVariant.COSINE_TEXT:
        gm, ge = _cosine_gradients(mention.text.global_features, entity.text.global_features)
        return {
            "mention_text": gm * inv_tau,
            "mention_visual": zero.copy(),
            "entity_text": ge * inv_tau,
            "entity_visual": zero.copy(),
        }

    gu_m, gu_e = _cosine_gradients(fused_vector(mention), fused_vector(entity))
    gu_m = gu_m * (0.5 * inv_tau)
    gu_e = gu_e * (0.5 * inv_tau)
    return {
        "mention_text": _normalize_backward(mention.text.global_features, gu_m),
        "mention_visual": _normalize_backward(mention.visual.global_features, gu_m),
        "entity_text": _normalize_backward(entity.text.global_features, gu_e),
        "entity_visual": _normalize_backward(entity.visual.global_features, gu_e),
    }
