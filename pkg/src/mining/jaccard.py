"""
Jaccard similarity over encoded attribute sets and the exhaustive top-k table
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config.logger import get_logger
from ..config.settings import get_settings
from ..kb.knowledge_base import encode_all
from ..kb.models import KnowledgeBase
from .models import InvalidSampleSizeError, MiningMethod, NegativeTable

settings = get_settings()
logger = get_logger()


def jaccard(a: Sequence[int], b: Sequence[int]) -> float:
    """
    |a & b| / |a | b| over sorted id sets

    Attribute-less entities carry no similarity evidence, so J is 0 whenever
    either side is empty.
    """
    if len(a) == 0 or len(b) == 0:
        return 0.0
    inter = int(np.intersect1d(np.asarray(a), np.asarray(b), assume_unique=True).size)
    union = len(a) + len(b) - inter
    return inter / union


def incidence_matrix(encoded: Sequence[Sequence[int]], vocab_size: int) -> np.ndarray:
    """N x V 0/1 matrix of attribute membership"""
    matrix = np.zeros((len(encoded), max(vocab_size, 1)), dtype=np.int32)
    for ordinal, ids in enumerate(encoded):
        if len(ids):
            matrix[ordinal, ids] = 1
    return matrix


def jaccard_block(incidence: np.ndarray, sizes: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Exact Jaccard of rows start..stop against every entity"""
    inter = incidence[start:stop] @ incidence.T
    union = sizes[start:stop, None] + sizes[None, :] - inter
    scores = np.zeros(inter.shape, dtype=np.float64)
    np.divide(inter, union, out=scores, where=(union > 0) & (inter > 0))
    return scores


def top_k_rows(scores: np.ndarray, owners: np.ndarray, k: int) -> List[Tuple[Tuple[int, float], ...]]:
    """Top-k per row by score descending then ordinal ascending, excluding the row owner"""
    scores = scores.copy()
    scores[np.arange(len(owners)), owners] = -1.0
    limit = min(k, scores.shape[1] - 1)
    order = np.argsort(-scores, axis=1, kind="stable")[:, :limit]
    rows = []
    for r in range(len(owners)):
        rows.append(tuple((int(j), float(scores[r, j])) for j in order[r]))
    return rows


def build_exact_table(kb: KnowledgeBase, k: int, threads: int = 1,
                      block_size: Optional[int] = None) -> NegativeTable:
    """
    Exhaustive top-k hard-negative table

    Args:
        kb: Knowledge base to mine
        k: Negatives per entity
        threads: Workers; blocks are merged by ordinal so output is thread-independent
        block_size: KB rows per block, bounding memory to block_size x N scores

    Returns:
        NegativeTable with method exact
    """
    if k < 1:
        raise InvalidSampleSizeError(k)

    block_size = block_size or settings.exact_block_size
    encoded = encode_all(kb)
    incidence = incidence_matrix(encoded, kb.vocab_size)
    sizes = np.array([len(ids) for ids in encoded], dtype=np.int64)
    n = kb.size

    def run_block(start: int):
        stop = min(start + block_size, n)
        scores = jaccard_block(incidence, sizes, start, stop)
        return top_k_rows(scores, np.arange(start, stop), k)

    starts = list(range(0, n, block_size))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(run_block, starts))
    else:
        blocks = [run_block(start) for start in starts]

    lists = tuple(row for block in blocks for row in block)
    logger.info("Exact negative table built", entities=n, k=k, blocks=len(starts), threads=threads)
    return NegativeTable(k=k, lists=lists, method=MiningMethod.EXACT, seed=None,
                         kb_fingerprint=kb.fingerprint)


def table_recall(approx: NegativeTable, exact: NegativeTable) -> float:
    """Mean per-entity overlap of an approximate table with the exact one"""
    if approx.size != exact.size:
        raise ValueError("tables cover different entity counts")
    total, hits = 0, 0
    for approx_list, exact_list in zip(approx.lists, exact.lists):
        expected = {ordinal for ordinal, _ in exact_list}
        total += len(expected)
        hits += len(expected & {ordinal for ordinal, _ in approx_list})
    return hits / total if total else 1.0
