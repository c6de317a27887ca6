"""
JSONL ingestion for knowledge-base entities and mentions
One JSON object per line; unknown fields are ignored
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple, Union

from pydantic import ValidationError

from ..config.logger import get_logger
from ..kb.knowledge_base import build_kb, validate_mention
from ..kb.models import Entity, KnowledgeBase, Mention, UnknownEntityError
from .models import DanglingReferenceError, ParseError

logger = get_logger()

PathLike = Union[str, Path]


def iter_json_lines(path: PathLike) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, object) for every non-blank line"""
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                record = json.loads(text)
            except json.JSONDecodeError as e:
                raise ParseError(line_number, f"invalid JSON: {e.msg}", str(path)) from None
            if not isinstance(record, dict):
                raise ParseError(line_number, "record must be a JSON object", str(path))
            yield line_number, record


def _validation_reason(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    return f"{location}: {first.get('msg', 'invalid value')}" if location else first.get("msg", "invalid value")


def load_entities(path: PathLike) -> List[Entity]:
    """Parse an entities file without building the index"""
    entities = []
    for line_number, record in iter_json_lines(path):
        try:
            entities.append(Entity(**record))
        except ValidationError as e:
            raise ParseError(line_number, _validation_reason(e), str(path)) from None
        except TypeError as e:
            raise ParseError(line_number, str(e), str(path)) from None
    return entities


def load_kb(path: PathLike, lowercase_attributes: bool = False) -> KnowledgeBase:
    """
    Load and index a knowledge base

    Args:
        path: Entities JSONL file
        lowercase_attributes: Fold attribute tokens to lower case

    Returns:
        KnowledgeBase in file order
    """
    entities = load_entities(path)
    kb = build_kb(entities, lowercase_attributes=lowercase_attributes)
    logger.info("Knowledge base loaded", path=str(path), entities=kb.size, vocab_size=kb.vocab_size)
    return kb


def load_mentions(path: PathLike, kb: KnowledgeBase) -> List[Mention]:
    """
    Load mentions and validate them against the knowledge base

    Args:
        path: Mentions JSONL file
        kb: Knowledge base the gold entities must resolve in

    Returns:
        Mentions in file order
    """
    mentions = []
    seen = set()
    for line_number, record in iter_json_lines(path):
        try:
            mention = Mention(**record)
        except ValidationError as e:
            raise ParseError(line_number, _validation_reason(e), str(path)) from None
        except TypeError as e:
            raise ParseError(line_number, str(e), str(path)) from None

        if mention.id in seen:
            raise ParseError(line_number, f"duplicate mention id {mention.id}", str(path))
        seen.add(mention.id)

        try:
            validate_mention(kb, mention, line=line_number)
        except UnknownEntityError:
            raise DanglingReferenceError(mention.id, mention.gold_entity, line_number) from None
        mentions.append(mention)

    logger.info("Mentions loaded", path=str(path), mentions=len(mentions))
    return mentions


def _write_lines(records: Sequence[Dict[str, Any]], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
            handle.write("\n")


def save_kb(kb: KnowledgeBase, path: PathLike) -> None:
    """Write the entities of a knowledge base as JSONL"""
    _write_lines([entity.model_dump(mode="json") for entity in kb.entities], path)


def save_mentions(mentions: Sequence[Mention], path: PathLike) -> None:
    """Write mentions as JSONL"""
    _write_lines([mention.model_dump(mode="json") for mention in mentions], path)

