"""
Tests for gold ranking, aggregate metrics and pooled-similarity analysis
"""

import numpy as np
import pytest
from rich.console import Console

from src.cvacpt.models import EmptyViewSetError, ViewSet
from src.evaluation.models import EvaluationError, TiePolicy
from src.evaluation.pooled import pooled_similarity
from src.evaluation.ranking import aggregate_ranks, evaluate, rank_of_gold, render_report_table, report_to_document
from src.kb.models import DimensionMismatchError
from src.matching.features import FeatureStore
from src.matching.models import MatcherConfig
from src.storage.embeddings import load_embeddings
from src.storage.records import load_kb, load_mentions
from tests.conftest import write_emb, write_jsonl


def fixture_store(paths) -> FeatureStore:
    kb = load_kb(paths["kb"])
    return FeatureStore.from_store(kb, load_mentions(paths["mentions"], kb), load_embeddings(paths["emb"]))


class TestRankOfGold:

    def test_strict_order(self):
        assert rank_of_gold([0.1, 0.9, 0.5], 2) == 2.0

    @pytest.mark.parametrize("policy, expected", [
        (TiePolicy.PESSIMISTIC, 4.0),
        (TiePolicy.OPTIMISTIC, 2.0),
        (TiePolicy.AVERAGE, 3.0),
    ])
    def test_tie_policies(self, policy, expected):
        # one rival above, two tied with the gold
        assert rank_of_gold([0.9, 0.5, 0.5, 0.5, 0.1], 1, policy) == expected

    def test_two_way_tie_at_the_top(self):
        scores = [0.9, 0.9, 0.1]
        assert rank_of_gold(scores, 0, TiePolicy.OPTIMISTIC) == 1.0
        assert rank_of_gold(scores, 0, TiePolicy.PESSIMISTIC) == 2.0
        assert rank_of_gold(scores, 0, TiePolicy.AVERAGE) == 1.5

    def test_random_policy_stays_in_tie_range(self):
        rng = np.random.default_rng(0)
        ranks = {rank_of_gold([0.9, 0.5, 0.5, 0.5], 2, TiePolicy.RANDOM, rng) for _ in range(200)}
        assert ranks == {2.0, 3.0, 4.0}

    def test_random_policy_needs_generator(self):
        with pytest.raises(EvaluationError):
            rank_of_gold([0.5, 0.5], 0, TiePolicy.RANDOM)

    def test_all_equal_pessimistic_is_last(self):
        assert rank_of_gold(np.zeros(6), 3) == 6.0

    def test_empty_scores(self):
        with pytest.raises(EvaluationError):
            rank_of_gold([], 0)

    def test_gold_out_of_range(self):
        with pytest.raises(EvaluationError):
            rank_of_gold([0.1, 0.2], 2)


class TestAggregates:

    def test_known_ranks(self):
        report = aggregate_ranks(["a", "b", "c"], [1.0, 2.0, 4.0])
        assert report.hits_at_1 == pytest.approx(33.33, abs=0.01)
        assert report.hits_at_3 == pytest.approx(66.67, abs=0.01)
        assert report.hits_at_5 == pytest.approx(100.0)
        assert report.mrr == pytest.approx(0.58333, abs=1e-5)

    def test_invariants_on_random_ranks(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            ranks = rng.integers(1, 20, size=int(rng.integers(1, 30))).astype(float)
            report = aggregate_ranks([str(i) for i in range(ranks.size)], ranks)
            assert report.hits_at_1 <= report.hits_at_3 <= report.hits_at_5 <= 100.0
            assert 0.0 < report.mrr <= 1.0
            assert report.hits_at_1 <= 100.0 * report.mrr + 1e-9

    def test_empty(self):
        with pytest.raises(EvaluationError):
            aggregate_ranks([], [])


class TestEvaluate:

    def test_fixture_metrics(self, ranking_fixture):
        report = evaluate(fixture_store(ranking_fixture), MatcherConfig())
        assert [item.rank for item in report.per_mention] == [1.0, 2.0, 4.0]
        assert [item.mention_id for item in report.per_mention] == ["m1", "m2", "m3"]
        assert report.hits_at_1 == pytest.approx(33.33, abs=0.01)
        assert report.mrr == pytest.approx(0.58333, abs=1e-5)

    def test_kb_order_does_not_change_report(self, ranking_fixture):
        baseline = evaluate(fixture_store(ranking_fixture), MatcherConfig())
        rows = ranking_fixture["kb"].read_text(encoding="utf-8").splitlines()
        ranking_fixture["kb"].write_text("\n".join([rows[3], rows[0], rows[4], rows[2], rows[1]]) + "\n", encoding="utf-8")
        reordered = evaluate(fixture_store(ranking_fixture), MatcherConfig())
        assert reordered.per_mention == baseline.per_mention
        assert reordered.hits_at_1 == baseline.hits_at_1
        assert reordered.mrr == baseline.mrr

    def test_threads_do_not_change_report(self, ranking_fixture):
        store = fixture_store(ranking_fixture)
        assert evaluate(store, MatcherConfig(), threads=3) == evaluate(store, MatcherConfig())

    def test_random_policy_reproducible(self, tmp_path):
        # every entity scores the same, so the random policy decides each rank
        kb_rows = [{"id": f"E{i}", "text_row": 0} for i in range(6)]
        kb = load_kb(write_jsonl(tmp_path / "kb.jsonl", kb_rows))
        mentions = load_mentions(write_jsonl(tmp_path / "m.jsonl", [
            {"id": f"m{i}", "mention_words": "w", "sentence": "w", "gold_entity": "E0", "text_row": 1}
            for i in range(8)
        ]), kb)
        emb = write_emb(tmp_path / "e.emb", [[1, 0], [1, 1]])
        store = FeatureStore.from_store(kb, mentions, load_embeddings(emb))
        first = evaluate(store, MatcherConfig(), TiePolicy.RANDOM, seed=3, threads=2)
        second = evaluate(store, MatcherConfig(), TiePolicy.RANDOM, seed=3)
        assert first == second
        assert all(1.0 <= item.rank <= 6.0 for item in first.per_mention)

    def test_document_and_table(self, ranking_fixture):
        report = evaluate(fixture_store(ranking_fixture), MatcherConfig())
        document = report_to_document(report, {"seed": 5})
        assert document["config"] == {"seed": 5}
        assert document["per_mention"][2] == {"mention_id": "m3", "rank": 4.0}
        assert document["aggregates"]["tie_policy"] == "pessimistic"

        console = Console(record=True, width=80)
        console.print(render_report_table(report))
        text = console.export_text()
        assert "33.33" in text
        assert "0.58333" in text


class TestPooledSimilarity:

    def test_pooling_beats_individual_views(self):
        rng = np.random.default_rng(5)
        references = [rng.uniform(0, 1, 96) for _ in range(40)]
        view_sets = [ViewSet(views=r + 0.5 * rng.standard_normal((3, 96))) for r in references]
        result = pooled_similarity(view_sets, references)
        assert result.mention_count == 40
        assert result.pooled_mean > result.individual_mean
        assert result.gain == pytest.approx(result.pooled_mean - result.individual_mean)

    def test_single_view_has_no_gain(self):
        rng = np.random.default_rng(6)
        references = [rng.standard_normal(8) for _ in range(5)]
        view_sets = [ViewSet(views=rng.standard_normal(8)) for _ in range(5)]
        result = pooled_similarity(view_sets, references)
        assert result.pooled_mean == pytest.approx(result.individual_mean)

    def test_errors(self):
        with pytest.raises(EvaluationError):
            pooled_similarity([], [])
        with pytest.raises(DimensionMismatchError):
            pooled_similarity([ViewSet(views=np.ones((2, 4)))], [np.ones(3)])
        with pytest.raises(EmptyViewSetError):
            pooled_similarity([ViewSet(views=[])], [np.ones(3)])
