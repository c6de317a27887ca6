"""
Negative-source ablation and synthetic view-count sweep
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from rich.table import Table

from ..config.logger import get_logger
from ..cvacpt.models import ViewSet
from ..evaluation.models import TiePolicy
from ..evaluation.pooled import pooled_similarity
from ..matching.models import MatcherConfig
from .generator import generate
from .models import (
    DEFAULT_K_VALUES, DEFAULT_SEEDS, DEFAULT_VIEW_COUNTS,
    AblationReport, AblationRow, NegativeStrategy, SyntheticSpec, ViewSweepRow
)
from .trainer import evaluate_model, init_model, train

logger = get_logger()


def run_cell(spec: SyntheticSpec, k: int, seed: int, epochs: int = 200, projection_dim: int = 16,
             learning_rate: float = 0.1, matcher: Optional[MatcherConfig] = None) -> Dict[str, Any]:
    """Train both strategies from the same data and initial projection, then evaluate"""
    data = generate(spec.model_copy(update={"seed": seed}))
    model = init_model(spec.input_dim, projection_dim, seed=seed, matcher=matcher,
                       learning_rate=learning_rate, epochs=epochs, k=k)
    cell: Dict[str, Any] = {"seed": seed}
    for strategy in (NegativeStrategy.CONDITIONAL, NegativeStrategy.RANDOM):
        result = train(model, data, strategy, seed)
        report = evaluate_model(result.model, data, TiePolicy.PESSIMISTIC)
        cell[strategy.value] = {
            "hits_at_1": report.hits_at_1,
            "mrr": report.mrr,
            "final_loss": result.loss_curve[-1] if result.loss_curve else None,
        }
    return cell


def ablate(spec: Optional[SyntheticSpec] = None, k_values: Sequence[int] = DEFAULT_K_VALUES,
           seeds: Sequence[int] = DEFAULT_SEEDS, epochs: int = 200, threads: int = 1) -> AblationReport:
    """
    Conditional vs random negatives for every k, averaged over seeds

    Args:
        spec: Fixture parameters; each seed regenerates the data with that seed
        k_values: Negative counts to sweep
        seeds: Seeds for data, initialization and sampling
        epochs: Gradient steps per run
        threads: Seeds run in parallel; rows do not depend on it

    Returns:
        AblationReport with one row per k
    """
    spec = spec or SyntheticSpec()
    if not seeds:
        raise ValueError("at least one seed is required")
    rows: List[AblationRow] = []
    for k in k_values:
        def cell_for(seed: int) -> Dict[str, Any]:
            return run_cell(spec, k, seed, epochs=epochs)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                cells = list(pool.map(cell_for, seeds))
        else:
            cells = [cell_for(seed) for seed in seeds]

        row = AblationRow(
            k=k,
            seeds=tuple(seeds),
            conditional_hits_at_1=float(np.mean([c["conditional"]["hits_at_1"] for c in cells])),
            random_hits_at_1=float(np.mean([c["random"]["hits_at_1"] for c in cells])),
            conditional_mrr=float(np.mean([c["conditional"]["mrr"] for c in cells])),
            random_mrr=float(np.mean([c["random"]["mrr"] for c in cells])),
            per_seed=tuple(cells),
        )
        logger.info("Ablation row finished", k=k, margin=row.margin,
                    conditional_hits_at_1=row.conditional_hits_at_1, random_hits_at_1=row.random_hits_at_1)
        rows.append(row)
    return AblationReport(spec=spec, rows=tuple(rows))


def render_ablation_table(report: AblationReport) -> Table:
    table = Table(title="Negative-source ablation (held-out)")
    for column in ("k", "H@1 cond", "H@1 rand", "MRR cond", "MRR rand", "margin"):
        table.add_column(column, justify="right")
    for row in report.rows:
        table.add_row(str(row.k), f"{row.conditional_hits_at_1:.2f}", f"{row.random_hits_at_1:.2f}",
                      f"{row.conditional_mrr:.2f}", f"{row.random_mrr:.2f}", f"{row.margin:+.2f}")
    return table


def noisy_views(rng: np.random.Generator, mentions: int, n_views: int, dim: int, noise: float):
    """Non-negative references and views = reference + Normal(0, noise^2)"""
    references = rng.uniform(0.0, 1.0, size=(mentions, dim))
    views = references[:, None, :] + rng.standard_normal((mentions, n_views, dim)) * noise
    return references, views


def sweep_views(n_s_values: Sequence[int] = DEFAULT_VIEW_COUNTS, seeds: Sequence[int] = DEFAULT_SEEDS,
                mentions: int = 50, dim: int = 96, noise: float = 0.5) -> List[ViewSweepRow]:
    """
    Pooled vs individual similarity as the number of synthetic views grows

    Each seed is one trial over `mentions` references.
    """
    rows = []
    for n_views in n_s_values:
        individual, pooled, wins = [], [], 0
        for seed in seeds:
            rng = np.random.default_rng([seed, n_views])
            references, views = noisy_views(rng, mentions, n_views, dim, noise)
            result = pooled_similarity([ViewSet(views=v) for v in views], list(references))
            individual.append(result.individual_mean)
            pooled.append(result.pooled_mean)
            wins += int(result.pooled_mean > result.individual_mean)
        rows.append(ViewSweepRow(
            n_views=n_views,
            individual_mean=float(np.mean(individual)),
            pooled_mean=float(np.mean(pooled)),
            pooled_wins=wins / len(seeds),
            trials=len(seeds),
        ))
    logger.info("View sweep finished", view_counts=list(n_s_values), trials=len(seeds))
    return rows
