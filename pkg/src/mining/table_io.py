"""
Serialization for negative tables and MinHash indexes
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from ..kb.models import KnowledgeBase
from ..storage.models import ParseError
from ..storage.records import iter_json_lines
from .minhash import assemble_index, check_band_config
from .models import IndexMismatchError, MiningMethod, MinHashIndex, NegativeTable

PathLike = Union[str, Path]


def table_header(table: NegativeTable, kb: KnowledgeBase) -> Dict[str, Any]:
    return {
        "k": table.k,
        "method": table.method.value,
        "seed": table.seed,
        "kb_fingerprint": table.kb_fingerprint,
        "entities": kb.size,
    }


def table_records(table: NegativeTable, kb: KnowledgeBase) -> List[Dict[str, Any]]:
    """One record per entity with negatives as [entity id, score] pairs"""
    ids = kb.entity_ids
    return [
        {"entity_id": ids[owner], "negatives": [[ids[ordinal], score] for ordinal, score in negatives]}
        for owner, negatives in enumerate(table.lists)
    ]


def table_to_document(table: NegativeTable, kb: KnowledgeBase) -> Dict[str, Any]:
    """Single JSON document form used for standard output"""
    return {"header": table_header(table, kb), "negatives": table_records(table, kb)}


def save_table(table: NegativeTable, kb: KnowledgeBase, path: PathLike) -> None:
    """Write the table as JSONL: header line, then one line per entity"""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(table_header(table, kb), sort_keys=True))
        handle.write("\n")
        for record in table_records(table, kb):
            handle.write(json.dumps(record, sort_keys=True))
            handle.write("\n")


def load_table(path: PathLike, kb: KnowledgeBase) -> NegativeTable:
    """
    Read a JSONL table back against the KB it was mined on

    Raises IndexMismatchError when the header fingerprint names another KB.
    """
    lines = iter_json_lines(path)
    try:
        _, header = next(lines)
    except StopIteration:
        raise ParseError(1, "missing table header", str(path)) from None

    for field in ("k", "method", "kb_fingerprint"):
        if field not in header:
            raise ParseError(1, f"table header lacks {field}", str(path))
    if header["kb_fingerprint"] != kb.fingerprint:
        raise IndexMismatchError(kb.fingerprint, header["kb_fingerprint"])

    lists: List[tuple] = [()] * kb.size
    seen = set()
    last_line = 1
    for line_number, record in lines:
        last_line = line_number
        try:
            owner = kb.index[record["entity_id"]]
            negatives = tuple((kb.index[entity_id], float(score)) for entity_id, score in record["negatives"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(line_number, f"bad table record: {e}", str(path)) from None
        lists[owner] = negatives
        seen.add(owner)

    missing = [entity_id for ordinal, entity_id in enumerate(kb.entity_ids) if ordinal not in seen]
    if missing:
        raise ParseError(last_line, f"no record for entity {missing[0]!r} ({len(missing)} missing)", str(path))

    return NegativeTable(
        k=int(header["k"]),
        lists=tuple(lists),
        method=MiningMethod(header["method"]),
        seed=header.get("seed"),
        kb_fingerprint=header["kb_fingerprint"],
    )


def index_to_document(index: MinHashIndex) -> Dict[str, Any]:
    """Parameters, coefficients and signatures; buckets are rebuilt on load"""
    return {
        "signature_length": index.signature_length,
        "bands": index.bands,
        "rows_per_band": index.rows_per_band,
        "prime": index.prime,
        "seed": index.seed,
        "kb_fingerprint": index.kb_fingerprint,
        "coefficients_a": list(index.coefficients_a),
        "coefficients_b": list(index.coefficients_b),
        "signatures": [[int(v) for v in row] for row in index.signatures],
    }


def save_index(index: MinHashIndex, path: PathLike) -> None:
    Path(path).write_text(json.dumps(index_to_document(index), sort_keys=True), encoding="utf-8")


def load_index(path: PathLike, kb: KnowledgeBase) -> MinHashIndex:
    """Read an index and check it belongs to kb"""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, f"invalid JSON: {e.msg}", str(path)) from None

    if not isinstance(document, dict):
        raise ParseError(1, "index must be a JSON object", str(path))
    if document.get("kb_fingerprint") != kb.fingerprint:
        raise IndexMismatchError(kb.fingerprint, str(document.get("kb_fingerprint")))

    try:
        bands, rows = int(document["bands"]), int(document["rows_per_band"])
        signature_length = int(document["signature_length"])
        coefficients_a, coefficients_b = document["coefficients_a"], document["coefficients_b"]
        prime, seed = int(document["prime"]), int(document["seed"])
        raw_signatures = document["signatures"]
    except KeyError as e:
        raise ParseError(1, f"index lacks {e.args[0]}", str(path)) from None
    except (TypeError, ValueError) as e:
        raise ParseError(1, f"bad index field: {e}", str(path)) from None

    check_band_config(signature_length, bands, rows)
    try:
        signatures = np.array(raw_signatures, dtype=np.uint64).reshape(-1, signature_length)
    except (TypeError, ValueError, OverflowError) as e:
        raise ParseError(1, f"bad signatures: {e}", str(path)) from None
    if signatures.shape[0] != kb.size:
        raise ParseError(1, f"{signatures.shape[0]} signatures for {kb.size} entities", str(path))
    return assemble_index(
        signatures, bands, rows, coefficients_a, coefficients_b, prime, seed, document["kb_fingerprint"],
    )
