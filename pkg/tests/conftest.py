"""
Shared fixtures: small knowledge bases, the three-mention ranking fixture and file writers
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pytest

from src.kb.knowledge_base import build_kb
from src.kb.models import Entity, KnowledgeBase
from src.storage.embeddings import encode_matrix


def write_jsonl(path: Path, records: List[Dict[str, Any]]) -> Path:
    path.write_text("".join(json.dumps(record) + "\n" for record in records), encoding="utf-8")
    return path


def write_emb(path: Path, matrix) -> Path:
    path.write_bytes(encode_matrix(np.asarray(matrix, dtype=np.float32)))
    return path


def random_kb(seed: int, n: int = 200, vocab: int = 50, max_size: int = 10) -> KnowledgeBase:
    """Entities with 0..max_size attributes drawn from a fixed vocabulary"""
    rng = np.random.default_rng(seed)
    entities = []
    for i in range(n):
        size = int(rng.integers(0, max_size + 1))
        tokens = rng.choice(vocab, size=size, replace=False)
        entities.append(Entity(id=f"e{i}", attributes=[f"t{t}" for t in tokens]))
    return build_kb(entities)


@pytest.fixture
def small_kb() -> KnowledgeBase:
    return build_kb([
        Entity(id="A", name="Alpha", attributes=["red", "round", "fruit"]),
        Entity(id="B", name="Beta", attributes=["red", "round", "ball"]),
        Entity(id="C", name="Gamma", attributes=["green", "fruit"]),
        Entity(id="D", name="Delta", attributes=[]),
    ])


def _unit(degrees: float) -> List[float]:
    radians = math.radians(degrees)
    return [math.cos(radians), math.sin(radians)]


@pytest.fixture
def ranking_fixture(tmp_path) -> Dict[str, Path]:
    """
    Five entities on the unit circle (0, 20, 40, 60, 80 degrees) and three
    mentions whose gold ranks under text cosine are 1, 2 and 4
    """
    entity_angles = [0, 20, 40, 60, 80]
    mention_specs = [("m1", 0, "E0"), ("m2", 15, "E0"), ("m3", 72, "E1")]

    entities = [
        {"id": f"E{i}", "name": f"entity {i}", "attributes": [f"a{i}"], "text_row": i}
        for i in range(len(entity_angles))
    ]
    mentions = [
        {"id": mid, "mention_words": "it", "sentence": "it is here", "gold_entity": gold,
         "text_row": len(entity_angles) + offset}
        for offset, (mid, _, gold) in enumerate(mention_specs)
    ]
    matrix = [_unit(angle) for angle in entity_angles] + [_unit(angle) for _, angle, _ in mention_specs]

    return {
        "kb": write_jsonl(tmp_path / "kb.jsonl", entities),
        "mentions": write_jsonl(tmp_path / "mentions.jsonl", mentions),
        "emb": write_emb(tmp_path / "emb.emb", matrix),
    }
