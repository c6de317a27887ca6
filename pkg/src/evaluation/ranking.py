"""
Full-KB ranking of gold entities, H@k and MRR
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from rich.table import Table

from ..config.logger import get_logger
from ..cvacpt.models import CvacptParams
from ..matching.features import FeatureStore
from ..matching.models import MatcherConfig
from ..matching.scorer import score_all
from ..mining.sampler import derive_seed
from .models import EvaluationError, MentionRank, RankReport, TiePolicy

logger = get_logger()


def rank_of_gold(scores, gold: int, policy: TiePolicy = TiePolicy.PESSIMISTIC,
                 rng: Optional[np.random.Generator] = None) -> float:
    """
    1-based rank of the gold entity in a descending sort

    Args:
        scores: One score per entity
        gold: Gold ordinal
        policy: Tie handling
        rng: Required for the random policy

    Returns:
        Rank (fractional only under the average policy)
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise EvaluationError("scores must be a non-empty vector", "EMPTY_SCORES")
    if not 0 <= gold < scores.size:
        raise EvaluationError(f"gold {gold} outside 0..{scores.size - 1}", "GOLD_OUT_OF_RANGE")

    target = scores[gold]
    above = int(np.count_nonzero(scores > target))
    tied = int(np.count_nonzero(scores == target)) - 1

    if policy == TiePolicy.OPTIMISTIC:
        return float(1 + above)
    if policy == TiePolicy.AVERAGE:
        return 1 + above + tied / 2.0
    if policy == TiePolicy.RANDOM:
        if rng is None:
            raise EvaluationError("random tie policy needs a generator", "MISSING_RNG")
        return float(1 + above + int(rng.integers(0, tied + 1)))
    return float(1 + above + tied)


def aggregate_ranks(mention_ids: Sequence[str], ranks: Sequence[float],
                    policy: TiePolicy = TiePolicy.PESSIMISTIC) -> RankReport:
    """H@k = 100 * #(rank <= k) / count, MRR = mean of 1 / rank"""
    if len(ranks) == 0:
        raise EvaluationError("no mentions to evaluate", "EMPTY_EVALUATION")
    if len(mention_ids) != len(ranks):
        raise EvaluationError("one rank per mention required", "LENGTH_MISMATCH")
    values = np.asarray(ranks, dtype=np.float64)
    count = values.size

    def hits(k: int) -> float:
        return 100.0 * float(np.count_nonzero(values <= k)) / count

    return RankReport(
        per_mention=tuple(MentionRank(mention_id=mid, rank=float(r)) for mid, r in zip(mention_ids, values)),
        hits_at_1=hits(1),
        hits_at_3=hits(3),
        hits_at_5=hits(5),
        mrr=float(np.mean(1.0 / values)),
        tie_policy=policy,
        mention_count=count,
    )


def evaluate(features: FeatureStore, cfg: MatcherConfig, policy: TiePolicy = TiePolicy.PESSIMISTIC,
             cvacpt_params: Optional[CvacptParams] = None, threads: int = 1, seed: int = 5) -> RankReport:
    """
    Rank every mention's gold entity against the whole knowledge base

    Args:
        features: Mentions, KB and embeddings
        cfg: Matcher configuration
        policy: Tie handling
        cvacpt_params: When given, mention visual bundles are transformed first
        threads: Worker threads over mentions; results do not depend on it
        seed: Base seed for the random tie policy, derived per mention

    Returns:
        RankReport in mention order
    """
    if not features.mentions:
        raise EvaluationError("no mentions to evaluate", "EMPTY_EVALUATION")
    entities = features.all_entity_features()
    if policy == TiePolicy.RANDOM:
        logger.log_seed("evaluate", seed, policy=policy.value)

    def rank_one(ordinal: int) -> float:
        mention = features.mention_features(ordinal, cvacpt_params)
        scores = score_all(mention, entities, cfg)
        rng = np.random.default_rng(derive_seed(seed, ordinal)) if policy == TiePolicy.RANDOM else None
        return rank_of_gold(scores, features.gold_ordinal(ordinal), policy, rng)

    ordinals = range(len(features.mentions))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ranks: List[float] = list(pool.map(rank_one, ordinals))
    else:
        ranks = [rank_one(ordinal) for ordinal in ordinals]

    report = aggregate_ranks([m.id for m in features.mentions], ranks, policy)
    logger.info("Evaluation complete", mentions=report.mention_count, hits_at_1=report.hits_at_1,
                mrr=report.mrr, tie_policy=policy.value)
    return report


def report_to_document(report: RankReport, config: Dict[str, Any]) -> Dict[str, Any]:
    """JSON document {config, per_mention, aggregates} at full precision"""
    return {
        "config": config,
        "per_mention": [{"mention_id": item.mention_id, "rank": item.rank} for item in report.per_mention],
        "aggregates": report.aggregates(),
    }


def render_report_table(report: RankReport, title: str = "Ranking evaluation") -> Table:
    """Aligned human-readable table, two decimals for hits, five for MRR"""
    table = Table(title=title)
    table.add_column("Metric")
    table.add_column("Value", justify="right")
    table.add_row("Mentions", str(report.mention_count))
    table.add_row("Tie policy", report.tie_policy.value)
    table.add_row("H@1", f"{report.hits_at_1:.2f}")
    table.add_row("H@3", f"{report.hits_at_3:.2f}")
    table.add_row("H@5", f"{report.hits_at_5:.2f}")
    table.add_row("MRR", f"{report.mrr:.5f}")
    return table
