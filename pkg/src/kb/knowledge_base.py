"""
Knowledge base construction and attribute encoding
"""

from typing import Dict, FrozenSet, Iterable, List, Sequence

from ..config.logger import get_logger
from .models import (
    DuplicateIdError, EmptyIdError, Entity, KnowledgeBase, Mention,
    UnknownAttributeError, UnknownEntityError
)

logger = get_logger()


def build_kb(entities: Sequence[Entity], lowercase_attributes: bool = False) -> KnowledgeBase:
    """
    Build an immutable knowledge base

    Args:
        entities: Entities in ordinal order
        lowercase_attributes: Fold attribute tokens to lower case first

    Returns:
        KnowledgeBase with id index and first-seen attribute vocabulary
    """
    index: Dict[str, int] = {}
    vocab: Dict[str, int] = {}
    ordered: List[Entity] = []

    for position, entity in enumerate(entities):
        if not entity.id:
            raise EmptyIdError(position)
        if entity.id in index:
            raise DuplicateIdError(entity.id)

        if lowercase_attributes:
            entity = Entity(**{
                **entity.model_dump(),
                "attributes": [token.lower() for token in entity.attributes],
            })

        index[entity.id] = position
        ordered.append(entity)
        for token in entity.attributes:
            if token not in vocab:
                vocab[token] = len(vocab)

    logger.debug("Knowledge base built", entities=len(ordered), vocab_size=len(vocab))
    return KnowledgeBase(entities=tuple(ordered), index=index, attribute_vocab=vocab)


def encode_attributes(kb: KnowledgeBase, entity: Entity) -> List[int]:
    """Map an entity's attribute tokens to a strictly increasing id list"""
    ids = []
    for token in entity.attributes:
        try:
            ids.append(kb.attribute_vocab[token])
        except KeyError:
            raise UnknownAttributeError(token) from None
    return sorted(ids)


def encode_all(kb: KnowledgeBase) -> List[List[int]]:
    """Encoded attribute ids for every entity, by ordinal"""
    return [encode_attributes(kb, entity) for entity in kb.entities]


def decode_attributes(kb: KnowledgeBase, ids: Iterable[int]) -> FrozenSet[str]:
    """Inverse of encode_attributes"""
    inverse = {value: token for token, value in kb.attribute_vocab.items()}
    return frozenset(inverse[i] for i in ids)


def validate_mention(kb: KnowledgeBase, mention: Mention, line: int = 0) -> None:
    """
    Check a mention against the knowledge base

    Raises UnknownEntityError for a dangling gold entity; a sentence that does
    not contain the mention words is only logged.
    """
    if mention.gold_entity not in kb.index:
        raise UnknownEntityError(mention.gold_entity)
    if not mention.words_in_sentence:
        logger.log_validation_warning(
            mention.id, "sentence does not contain mention words", line=line or None
        )
