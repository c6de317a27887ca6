"""
MinHash signatures with LSH banding for approximate Jaccard retrieval
Candidate selection is approximate; every reported score is exact Jaccard
"""

import hashlib
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config.logger import get_logger
from ..kb.knowledge_base import encode_all
from ..kb.models import KnowledgeBase
from .jaccard import jaccard
from .models import (
    MERSENNE_PRIME_61, BadBandConfigError, IndexMismatchError, InvalidSampleSizeError,
    MiningMethod, MinHashIndex, NegativeTable
)

logger = get_logger()


def stable_hash64(value: int) -> int:
    """Platform-independent 64-bit hash of an attribute id"""
    digest = hashlib.blake2b(int(value).to_bytes(8, "little"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def band_hash(values: np.ndarray) -> int:
    """64-bit hash of one band of a signature"""
    digest = hashlib.blake2b(np.ascontiguousarray(values, dtype="<u8").tobytes(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def check_band_config(signature_length: int, bands: int, rows: int) -> None:
    if signature_length < 1 or bands < 1 or rows < 1 or bands * rows != signature_length:
        raise BadBandConfigError(signature_length, bands, rows)


def lsh_threshold(bands: int, rows: int) -> float:
    """Similarity at which the banded S-curve crosses one half"""
    return (1.0 / bands) ** (1.0 / rows)


def draw_coefficients(signature_length: int, seed: int,
                      prime: int = MERSENNE_PRIME_61) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Seeded (a_i, b_i) pairs of the universal hash family"""
    rng = np.random.default_rng(seed)
    a = rng.integers(1, prime, size=signature_length, dtype=np.uint64)
    b = rng.integers(0, prime, size=signature_length, dtype=np.uint64)
    return tuple(int(v) for v in a), tuple(int(v) for v in b)


def attribute_hash_table(vocab_size: int, coefficients_a: Sequence[int], coefficients_b: Sequence[int],
                         prime: int = MERSENNE_PRIME_61) -> np.ndarray:
    """V x L table of h_i(x) = (a_i * x64 + b_i) mod p, computed in exact integer arithmetic"""
    if vocab_size == 0:
        return np.zeros((0, len(coefficients_a)), dtype=np.uint64)
    keys = np.array([stable_hash64(v) for v in range(vocab_size)], dtype=object)
    a = np.array(coefficients_a, dtype=object)
    b = np.array(coefficients_b, dtype=object)
    table = (np.multiply.outer(keys, a) + b) % prime
    return table.astype(np.uint64)


def compute_signatures(encoded: Sequence[Sequence[int]], table: np.ndarray, prime: int) -> np.ndarray:
    """
    Column-wise minima of the hash table over each entity's attribute ids

    An entity without attributes gets the constant row p + 1 + ordinal: real
    hash values are below p, so the row never agrees with any other entity.
    """
    signature_length = table.shape[1]
    signatures = np.empty((len(encoded), signature_length), dtype=np.uint64)
    for ordinal, ids in enumerate(encoded):
        if len(ids):
            signatures[ordinal] = table[list(ids)].min(axis=0)
        else:
            signatures[ordinal] = np.uint64(prime + 1 + ordinal)
    return signatures


def band_keys(signatures: np.ndarray, bands: int, rows: int) -> List[List[int]]:
    """Per entity, the hash of each of its bands"""
    return [
        [band_hash(signature[t * rows:(t + 1) * rows]) for t in range(bands)]
        for signature in signatures
    ]


def build_buckets(keys: List[List[int]], bands: int) -> Tuple[Dict[int, Tuple[int, ...]], ...]:
    buckets = [defaultdict(list) for _ in range(bands)]
    for ordinal, entity_keys in enumerate(keys):
        for t, key in enumerate(entity_keys):
            buckets[t][key].append(ordinal)
    return tuple({key: tuple(members) for key, members in table.items()} for table in buckets)


def assemble_index(signatures: np.ndarray, bands: int, rows: int,
                   coefficients_a: Sequence[int], coefficients_b: Sequence[int],
                   prime: int, seed: int, kb_fingerprint: str) -> MinHashIndex:
    """Band the signatures into buckets and wrap everything in an index"""
    keys = band_keys(signatures, bands, rows)
    return MinHashIndex(
        signature_length=bands * rows,
        bands=bands,
        rows_per_band=rows,
        signatures=signatures,
        coefficients_a=tuple(coefficients_a),
        coefficients_b=tuple(coefficients_b),
        prime=prime,
        seed=seed,
        kb_fingerprint=kb_fingerprint,
        buckets=build_buckets(keys, bands),
    )


def build_minhash_index(kb: KnowledgeBase, signature_length: int = 256, bands: int = 32,
                        rows: int = 8, seed: int = 5) -> MinHashIndex:
    """
    Build MinHash signatures and LSH buckets for every entity

    Args:
        kb: Knowledge base to index
        signature_length: L, number of hash functions
        bands: b, number of LSH bands
        rows: r, signature positions per band (b * r must equal L)
        seed: Seed of the hash-family coefficients

    Returns:
        MinHashIndex tied to the KB fingerprint
    """
    check_band_config(signature_length, bands, rows)

    coefficients_a, coefficients_b = draw_coefficients(signature_length, seed)
    table = attribute_hash_table(kb.vocab_size, coefficients_a, coefficients_b)
    signatures = compute_signatures(encode_all(kb), table, MERSENNE_PRIME_61)

    index = assemble_index(signatures, bands, rows, coefficients_a, coefficients_b,
                           MERSENNE_PRIME_61, seed, kb.fingerprint)
    logger.info("MinHash index built", entities=kb.size, signature_length=signature_length,
                bands=bands, rows=rows, seed=seed)
    return index


def estimate_jaccard(index: MinHashIndex, i: int, j: int) -> float:
    """Fraction of agreeing signature positions"""
    agree = np.count_nonzero(index.signatures[i] == index.signatures[j])
    return agree / index.signature_length


def lsh_candidates(index: MinHashIndex, keys: List[List[int]], ordinal: int) -> List[int]:
    """Union of the entity's buckets, minus itself, ascending"""
    found = set()
    for t, key in enumerate(keys[ordinal]):
        found.update(index.buckets[t].get(key, ()))
    found.discard(ordinal)
    return sorted(found)


def _rank(encoded: Sequence[Sequence[int]], owner: int, candidates: Sequence[int]) -> List[Tuple[int, float]]:
    scored = [(c, jaccard(encoded[owner], encoded[c])) for c in candidates]
    return sorted(scored, key=lambda item: (-item[1], item[0]))


def build_approx_table(kb: KnowledgeBase, k: int, index: MinHashIndex, threads: int = 1) -> NegativeTable:
    """
    Approximate top-k table from LSH candidates with exact rerank

    Entities with fewer than k candidates are topped up with uniform random
    entities from a generator seeded by (index seed, ordinal), so the result
    does not depend on the worker count.
    """
    if k < 1:
        raise InvalidSampleSizeError(k)
    if index.kb_fingerprint != kb.fingerprint or index.size != kb.size:
        raise IndexMismatchError(kb.fingerprint, index.kb_fingerprint)

    encoded = encode_all(kb)
    keys = band_keys(index.signatures, index.bands, index.rows_per_band)
    n = kb.size

    def mine_one(ordinal: int) -> Tuple[Tuple[int, float], ...]:
        candidates = lsh_candidates(index, keys, ordinal)
        if len(candidates) < k:
            taken = set(candidates)
            taken.add(ordinal)
            pool = np.array([c for c in range(n) if c not in taken], dtype=np.int64)
            deficit = min(k - len(candidates), pool.size)
            if deficit > 0:
                rng = np.random.default_rng([index.seed, ordinal])
                fill = rng.choice(pool, size=deficit, replace=False)
                candidates = candidates + [int(c) for c in fill]
        return tuple(_rank(encoded, ordinal, candidates)[:k])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_executor:
            lists = tuple(pool_executor.map(mine_one, range(n)))
    else:
        lists = tuple(mine_one(ordinal) for ordinal in range(n))

    logger.info("Approximate negative table built", entities=n, k=k, seed=index.seed, threads=threads)
    return NegativeTable(k=k, lists=lists, method=MiningMethod.MINHASH, seed=index.seed,
                         kb_fingerprint=kb.fingerprint)
