"""
Tests for JSONL ingestion, the EMB1 container and dataset statistics
"""

import struct

import numpy as np
import pytest

from src.kb.models import Mention
from src.storage.embeddings import decode_matrix, encode_matrix, load_embeddings, save_embeddings, store_from_array
from src.storage.models import (
    BadMagicError, DanglingReferenceError, NonFiniteValueError, ParseError, StorageError,
    TruncatedFileError, UnsupportedDtypeError
)
from src.storage.records import load_kb, load_mentions, save_kb, save_mentions
from src.storage.stats import dataset_stats
from tests.conftest import write_jsonl


def mention_record(mid, gold, **extra):
    return {"id": mid, "mention_words": "w", "sentence": "w here", "gold_entity": gold, "text_row": 0, **extra}


class TestRecords:

    def test_load_kb_ignores_unknown_fields_and_blank_lines(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(
            '{"id": "a", "attributes": ["x"], "wikidata": "Q1"}\n\n{"id": "b", "attributes": ["x", "y"]}\n',
            encoding="utf-8",
        )
        kb = load_kb(path)
        assert kb.entity_ids == ["a", "b"]
        assert kb.vocab_size == 2

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text('{"id": "a"}\n{"id": \n', encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_kb(path)
        assert info.value.details["line"] == 2
        assert info.value.exit_code == 1

    def test_missing_required_field(self, tmp_path):
        path = write_jsonl(tmp_path / "m.jsonl", [{"id": "m1", "gold_entity": "a"}])
        kb = load_kb(write_jsonl(tmp_path / "kb.jsonl", [{"id": "a"}]))
        with pytest.raises(ParseError):
            load_mentions(path, kb)

    def test_dangling_reference_line(self, tmp_path):
        kb = load_kb(write_jsonl(tmp_path / "kb.jsonl", [{"id": "a"}]))
        path = write_jsonl(tmp_path / "m.jsonl", [mention_record("m1", "a"), mention_record("m2", "zzz")])
        with pytest.raises(DanglingReferenceError) as info:
            load_mentions(path, kb)
        assert info.value.details["line"] == 2
        assert info.value.details["entity_id"] == "zzz"

    def test_duplicate_mention_id(self, tmp_path):
        kb = load_kb(write_jsonl(tmp_path / "kb.jsonl", [{"id": "a"}]))
        path = write_jsonl(tmp_path / "m.jsonl", [mention_record("m1", "a"), mention_record("m1", "a")])
        with pytest.raises(ParseError):
            load_mentions(path, kb)

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            load_kb(tmp_path / "absent.jsonl")

    def test_save_and_reload(self, tmp_path, small_kb):
        save_kb(small_kb, tmp_path / "kb.jsonl")
        reloaded = load_kb(tmp_path / "kb.jsonl")
        assert reloaded.entities == small_kb.entities
        assert reloaded.fingerprint == small_kb.fingerprint

        mentions = [Mention(id="m", mention_words="Alpha", sentence="Alpha here", gold_entity="A",
                            text_row=3, image_row=1, synthetic_rows=[4, 5])]
        save_mentions(mentions, tmp_path / "m.jsonl")
        assert load_mentions(tmp_path / "m.jsonl", reloaded) == mentions


class TestEmbeddings:

    def test_header_layout(self):
        payload = encode_matrix(np.ones((3, 2), dtype=np.float32))
        assert payload[:4] == b"EMB1"
        assert struct.unpack("<III", payload[4:16]) == (3, 2, 0)
        assert len(payload) == 16 + 3 * 2 * 4

    def test_save_load_bit_identical(self, tmp_path):
        matrix = np.random.default_rng(0).standard_normal((7, 5)).astype(np.float32)
        save_embeddings(store_from_array(matrix), tmp_path / "e.emb")
        loaded = load_embeddings(tmp_path / "e.emb")
        assert loaded.data.dtype == np.float32
        assert loaded.data.tobytes() == matrix.tobytes()

    def test_zero_rows(self):
        matrix = decode_matrix(encode_matrix(np.zeros((0, 4), dtype=np.float32)))
        assert matrix.shape == (0, 4)

    def test_bad_magic(self):
        payload = b"EMB2" + encode_matrix(np.ones((1, 1), dtype=np.float32))[4:]
        with pytest.raises(BadMagicError) as info:
            decode_matrix(payload)
        assert info.value.exit_code == 2

    def test_truncated_payload(self):
        payload = encode_matrix(np.ones((2, 3), dtype=np.float32))[:-1]
        with pytest.raises(TruncatedFileError) as info:
            decode_matrix(payload)
        assert info.value.exit_code == 2

    def test_truncated_header(self):
        with pytest.raises(TruncatedFileError):
            decode_matrix(b"EMB1\x01\x00")

    def test_unsupported_dtype(self):
        payload = struct.pack("<4sIII", b"EMB1", 1, 1, 7) + b"\x00" * 4
        with pytest.raises(UnsupportedDtypeError):
            decode_matrix(payload)

    def test_non_finite_position(self):
        matrix = np.zeros((2, 3), dtype=np.float32)
        matrix[1, 2] = np.inf
        with pytest.raises(NonFiniteValueError) as info:
            decode_matrix(encode_matrix(matrix))
        assert (info.value.details["row"], info.value.details["col"]) == (1, 2)

    def test_zero_dimension_rejected(self, tmp_path):
        path = tmp_path / "e.emb"
        path.write_bytes(struct.pack("<4sIII", b"EMB1", 2, 0, 0))
        with pytest.raises(StorageError):
            load_embeddings(path)


class TestStats:

    def test_image_availability(self, tmp_path):
        kb = load_kb(write_jsonl(tmp_path / "kb.jsonl", [
            {"id": "a", "image_rows": [0]},
            {"id": "b"},
        ]))
        mentions = [
            Mention(id="1", mention_words="w", sentence="w", gold_entity="a", text_row=0, image_row=1),
            Mention(id="2", mention_words="w", sentence="w", gold_entity="b", text_row=0, image_row=1),
            Mention(id="3", mention_words="w", sentence="w", gold_entity="a", text_row=0),
            Mention(id="4", mention_words="w", sentence="w", gold_entity="b", text_row=0),
            Mention(id="5", mention_words="w", sentence="w", gold_entity="b", text_row=0),
        ]
        stats = dataset_stats(kb, mentions)
        assert stats.as_tuple() == (1, 1, 1, 2)
        assert stats.total == 5
