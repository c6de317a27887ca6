"""
Synthetic grouped-entity fixtures
"""

from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from ..config.logger import get_logger
from ..kb.knowledge_base import build_kb
from ..kb.models import Entity, Mention
from ..storage.embeddings import save_embeddings, store_from_array
from ..storage.records import save_kb, save_mentions
from .models import SyntheticSpec, ToyDataset

logger = get_logger()

PathLike = Union[str, Path]


def entity_attributes(spec: SyntheticSpec, group: int, entity: int) -> List[str]:
    """Coarse tokens shared by the group plus fine tokens unique to the entity"""
    coarse = [f"g{group}_c{c}" for c in range(spec.coarse_attributes)]
    fine = [f"e{entity}_f{f}" for f in range(spec.fine_attributes)]
    return coarse + fine


def generate(spec: SyntheticSpec) -> ToyDataset:
    """
    Draw a grouped fixture

    The first `coarse_dims` coordinates carry the group centroid, the rest the
    entity's fine vector. A KB entity row also carries `entity_noise` in the
    group block, which its mentions do not share; mentions are the clean
    signal plus isotropic noise. Up-weighting the group block therefore helps
    across groups and hurts within them. With the default attribute counts
    same-group entities have Jaccard 3/7 and cross-group entities 0.

    Args:
        spec: Fixture parameters

    Returns:
        ToyDataset with entity rows first, then train mentions, then test mentions
    """
    rng = np.random.default_rng(spec.seed)
    n, d, dg = spec.n_entities, spec.input_dim, spec.coarse_dims

    group_of = np.repeat(np.arange(spec.groups), spec.entities_per_group)
    signal = np.zeros((n, d))
    signal[:, :dg] = (rng.standard_normal((spec.groups, dg)) * spec.group_scale)[group_of]
    signal[:, dg:] = rng.standard_normal((n, d - dg)) * spec.fine_scale
    entity_matrix = signal.copy()
    entity_matrix[:, :dg] += rng.standard_normal((n, dg)) * spec.entity_noise

    rows = [entity_matrix]
    owners = {}
    for split, per_entity in (("train", spec.train_mentions), ("test", spec.test_mentions)):
        owners[split] = np.repeat(np.arange(n), per_entity)
        noise = rng.standard_normal((owners[split].size, d)) * spec.mention_noise
        rows.append(signal[owners[split]] + noise)
    next_row = sum(block.shape[0] for block in rows)

    # optional visual block: entity images, then per held-out mention an image and its views
    n_s = spec.synthetic_views
    entity_image_row: Dict[int, int] = {}
    mention_visual_rows: Dict[int, tuple] = {}
    if n_s > 0:
        rows.append(entity_matrix + rng.standard_normal((n, d)) * spec.mention_noise)
        entity_image_row = {i: next_row + i for i in range(n)}
        next_row += n
        for offset, owner in enumerate(owners["test"]):
            image = signal[owner] + rng.standard_normal(d) * spec.mention_noise
            views = image + rng.standard_normal((n_s, d)) * spec.mention_noise
            rows.append(np.vstack([image, views]))
            mention_visual_rows[offset] = (next_row, tuple(range(next_row + 1, next_row + 1 + n_s)))
            next_row += 1 + n_s

    entities = []
    for i in range(n):
        g = int(group_of[i])
        entities.append(Entity(
            id=f"E{i:04d}",
            name=f"entity {i} of group {g}",
            attributes=entity_attributes(spec, g, i),
            image_rows=(entity_image_row[i],) if i in entity_image_row else (),
            text_row=i,
        ))
    kb = build_kb(entities)

    splits: Dict[str, List[Mention]] = {"train": [], "test": []}
    first_text_row = n
    for split in ("train", "test"):
        for offset, owner in enumerate(owners[split]):
            entity = entities[int(owner)]
            image_row, synthetic_rows = None, ()
            if split == "test" and offset in mention_visual_rows:
                image_row, synthetic_rows = mention_visual_rows[offset]
            splits[split].append(Mention(
                id=f"{split}-{offset:05d}",
                mention_words=entity.name,
                sentence=f"A sentence about {entity.name}.",
                gold_entity=entity.id,
                image_row=image_row,
                synthetic_rows=synthetic_rows,
                text_row=first_text_row + offset,
            ))
        first_text_row += owners[split].size

    logger.log_seed("toy_generate", spec.seed, entities=n, dim=d)
    return ToyDataset(
        spec=spec,
        kb=kb,
        matrix=np.vstack(rows),
        train_mentions=tuple(splits["train"]),
        test_mentions=tuple(splits["test"]),
    )


def write_fixtures(data: ToyDataset, directory: PathLike) -> Dict[str, str]:
    """
    Write kb.jsonl, mentions.jsonl (held-out split) and embeddings.emb

    Returns:
        Mapping of artifact name to written path
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "kb": str(root / "kb.jsonl"),
        "mentions": str(root / "mentions.jsonl"),
        "train_mentions": str(root / "train_mentions.jsonl"),
        "embeddings": str(root / "embeddings.emb"),
    }
    save_kb(data.kb, paths["kb"])
    save_mentions(data.test_mentions, paths["mentions"])
    save_mentions(data.train_mentions, paths["train_mentions"])
    save_embeddings(store_from_array(data.matrix), paths["embeddings"])
    logger.info("Toy fixtures written", path=str(root), entities=data.kb.size,
                mentions=len(data.test_mentions))
    return paths
