"""
End-to-end tests of the melmine command line
"""

import json

import numpy as np
import pytest
from typer.testing import CliRunner

from src.cli.app import app, main
from src.storage.embeddings import load_embeddings
from src.storage.records import save_kb
from tests.conftest import random_kb

runner = CliRunner()


def invoke(*args: str):
    return runner.invoke(app, [str(arg) for arg in args])


def stdout_json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


@pytest.fixture
def kb_file(tmp_path, small_kb):
    path = tmp_path / "kb.jsonl"
    save_kb(small_kb, path)
    return path


@pytest.fixture
def random_kb_file(tmp_path):
    path = tmp_path / "random_kb.jsonl"
    save_kb(random_kb(3, n=120), path)
    return path


@pytest.fixture
def toy_dir(tmp_path):
    out = tmp_path / "toy"
    result = invoke("toy", "generate", "--out", out, "--groups", 4, "--per-group", 3, "--ns", 3, "--seed", 7)
    document = stdout_json(result)
    assert document["entities"] == 12
    return out


class TestStatsAndMining:

    def test_stats(self, ranking_fixture):
        document = stdout_json(invoke("stats", "--kb", ranking_fixture["kb"],
                                      "--mentions", ranking_fixture["mentions"]))
        assert document["entities"] == 5
        assert document["mentions"] == 3
        assert document["image_availability"]["neither"] == 3

    def test_stats_table(self, kb_file):
        result = invoke("stats", "--kb", kb_file, "--format", "table")
        assert result.exit_code == 0
        assert "attribute_vocabulary" in result.stdout

    def test_mine_exact(self, kb_file):
        document = stdout_json(invoke("mine", "--kb", kb_file, "--k", 2))
        assert document["header"]["k"] == 2
        assert document["header"]["method"] == "exact"
        assert document["negatives"][0] == {"entity_id": "A", "negatives": [["B", 0.5], ["C", 0.25]]}

    def test_mine_default_k(self, kb_file, tmp_path):
        out = tmp_path / "table.jsonl"
        stdout_json(invoke("mine", "--kb", kb_file, "--out", out))
        header = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
        assert header["k"] == 4
        assert header["method"] == "exact"

    @pytest.mark.parametrize("method", ["--exact", "--minhash"])
    def test_output_independent_of_threads(self, random_kb_file, method):
        single = invoke("mine", "--kb", random_kb_file, method, "--k", 5, "--threads", 1)
        parallel = invoke("mine", "--kb", random_kb_file, method, "--k", 5, "--threads", 4)
        assert single.exit_code == parallel.exit_code == 0
        assert single.stdout == parallel.stdout

    def test_prebuilt_index(self, random_kb_file, tmp_path):
        index_path = tmp_path / "index.json"
        stdout_json(invoke("build-index", "--kb", random_kb_file, "--seed", 9, "--out", index_path))
        from_index = invoke("mine", "--kb", random_kb_file, "--minhash", "--index", index_path)
        direct = invoke("mine", "--kb", random_kb_file, "--minhash", "--seed", 9)
        assert from_index.stdout == direct.stdout
        assert json.loads(direct.stdout)["header"]["seed"] == 9

    def test_bad_band_config(self, kb_file):
        args = ["mine", "--kb", str(kb_file), "--minhash", "--bands", "31", "--rows", "8", "--sig", "256"]
        assert runner.invoke(app, args).exit_code == 1
        assert main(args) == 1

    def test_index_for_other_kb(self, kb_file, random_kb_file, tmp_path):
        index_path = tmp_path / "index.json"
        stdout_json(invoke("build-index", "--kb", random_kb_file, "--out", index_path))
        assert invoke("mine", "--kb", kb_file, "--minhash", "--index", index_path).exit_code == 1

    def test_index_missing_field(self, random_kb_file, tmp_path):
        index_path = tmp_path / "index.json"
        stdout_json(invoke("build-index", "--kb", random_kb_file, "--out", index_path))
        document = json.loads(index_path.read_text(encoding="utf-8"))
        del document["coefficients_b"]
        index_path.write_text(json.dumps(document), encoding="utf-8")
        result = invoke("mine", "--kb", random_kb_file, "--minhash", "--index", index_path)
        assert result.exit_code == 1


class TestEvaluation:

    def test_eval_fixture(self, ranking_fixture):
        document = stdout_json(invoke("eval", "--kb", ranking_fixture["kb"], "--mentions",
                                      ranking_fixture["mentions"], "--emb", ranking_fixture["emb"]))
        aggregates = document["aggregates"]
        assert aggregates["hits_at_1"] == pytest.approx(33.33, abs=0.01)
        assert aggregates["hits_at_3"] == pytest.approx(66.67, abs=0.01)
        assert aggregates["hits_at_5"] == pytest.approx(100.0)
        assert aggregates["mrr"] == pytest.approx(0.58333, abs=1e-5)
        assert [item["rank"] for item in document["per_mention"]] == [1.0, 2.0, 4.0]
        assert document["config"]["tie_policy"] == "pessimistic"

    def test_eval_table(self, ranking_fixture):
        result = invoke("eval", "--kb", ranking_fixture["kb"], "--mentions", ranking_fixture["mentions"],
                        "--emb", ranking_fixture["emb"], "--format", "table")
        assert result.exit_code == 0
        assert "33.33" in result.stdout

    def test_eval_to_file(self, ranking_fixture, tmp_path):
        out = tmp_path / "report.json"
        stdout_json(invoke("eval", "--kb", ranking_fixture["kb"], "--mentions", ranking_fixture["mentions"],
                           "--emb", ranking_fixture["emb"], "--out", out))
        assert json.loads(out.read_text(encoding="utf-8"))["aggregates"]["mention_count"] == 3

    def test_score_single_mention(self, ranking_fixture):
        document = stdout_json(invoke("score", "--kb", ranking_fixture["kb"], "--mentions",
                                      ranking_fixture["mentions"], "--emb", ranking_fixture["emb"],
                                      "--mention", "m3"))
        assert document["entity_ids"] == ["E0", "E1", "E2", "E3", "E4"]
        [entry] = document["mentions"]
        assert entry["gold_entity"] == "E1"
        assert int(np.argmax(entry["scores"])) == 4

    def test_missing_file_exits_2(self, ranking_fixture, tmp_path):
        result = invoke("eval", "--kb", tmp_path / "absent.jsonl", "--mentions", ranking_fixture["mentions"],
                        "--emb", ranking_fixture["emb"])
        assert result.exit_code == 2

    def test_missing_required_option(self, ranking_fixture):
        assert main(["eval", "--mentions", str(ranking_fixture["mentions"]),
                     "--emb", str(ranking_fixture["emb"])]) == 1

    def test_unknown_option_exits_1(self, kb_file):
        assert main(["mine", "--kb", str(kb_file), "--bogus"]) == 1

    @pytest.mark.parametrize("args", [[], ["toy"]])
    def test_missing_subcommand_exits_1(self, args):
        assert main(args) == 1

    def test_dangling_gold_exits_1(self, ranking_fixture, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps({"id": "x", "mention_words": "w", "sentence": "w",
                                   "gold_entity": "nope", "text_row": 0}) + "\n", encoding="utf-8")
        result = invoke("eval", "--kb", ranking_fixture["kb"], "--mentions", bad, "--emb", ranking_fixture["emb"])
        assert result.exit_code == 1


class TestToyPipeline:

    def test_stats_on_generated_fixture(self, toy_dir):
        document = stdout_json(invoke("stats", "--kb", toy_dir / "kb.jsonl",
                                      "--mentions", toy_dir / "mentions.jsonl"))
        assert document["entities"] == 12
        assert document["entities_with_image"] == 12
        assert document["image_availability"]["both_have_image"] == 24

    def test_transform_with_zero_blend_keeps_images(self, toy_dir):
        args = ["transform", "--kb", toy_dir / "kb.jsonl", "--mentions", toy_dir / "mentions.jsonl",
                "--emb", toy_dir / "embeddings.emb", "--w", 0]
        document = stdout_json(invoke(*args))
        assert document["transformed"] == 24
        assert document["skipped"] == 0
        matrix = load_embeddings(toy_dir / "embeddings.emb").data
        mentions = [json.loads(line) for line in (toy_dir / "mentions.jsonl").read_text().splitlines()]
        first = mentions[0]
        np.testing.assert_array_equal(document["global_features"][first["id"]],
                                      matrix[first["image_row"]].astype(np.float64))

    def test_transform_writes_store_and_params(self, toy_dir, tmp_path):
        out, params_dir = tmp_path / "transformed.emb", tmp_path / "params"
        document = stdout_json(invoke("transform", "--kb", toy_dir / "kb.jsonl", "--mentions",
                                      toy_dir / "mentions.jsonl", "--emb", toy_dir / "embeddings.emb",
                                      "--init-params", params_dir, "--seed", 3, "--out", out))
        assert document["seed"] == 3
        assert load_embeddings(out).data.shape == load_embeddings(toy_dir / "embeddings.emb").data.shape
        assert (params_dir / "manifest.json").exists()

        evaluated = stdout_json(invoke("eval", "--kb", toy_dir / "kb.jsonl", "--mentions",
                                       toy_dir / "mentions.jsonl", "--emb", toy_dir / "embeddings.emb",
                                       "--variant", "cosine-fused", "--params", params_dir))
        assert evaluated["config"]["cvacpt"] is True
        assert evaluated["aggregates"]["mention_count"] == 24

    def test_pooled_sim(self, toy_dir):
        document = stdout_json(invoke("pooled-sim", "--kb", toy_dir / "kb.jsonl", "--mentions",
                                      toy_dir / "mentions.jsonl", "--emb", toy_dir / "embeddings.emb", "--ns", 1))
        assert document["mention_count"] == 24
        assert document["n_views"] == 1
        assert document["pooled_mean"] == pytest.approx(document["individual_mean"])

    def test_train_curve(self):
        result = invoke("toy", "train", "--epochs", 3, "--k", 2, "--format", "curve")
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "epoch\tloss"
        assert len(lines) == 4

    def test_view_sweep(self):
        document = stdout_json(invoke("toy", "views", "--ns", 1, "--ns", 3, "--seed", 5, "--mentions", 10))
        assert [row["n_views"] for row in document["rows"]] == [1, 3]
        assert document["seeds"] == [5]

    def test_train_with_mined_table(self, tmp_path, kb_file):
        fixture, table = tmp_path / "default_toy", tmp_path / "toy_table.jsonl"
        stdout_json(invoke("toy", "generate", "--out", fixture, "--seed", 5))
        stdout_json(invoke("mine", "--kb", fixture / "kb.jsonl", "--k", 2, "--out", table))
        mined = invoke("toy", "train", "--epochs", 3, "--k", 2, "--seed", 5, "--table", table)
        direct = invoke("toy", "train", "--epochs", 3, "--k", 2, "--seed", 5)
        assert mined.exit_code == direct.exit_code == 0
        assert mined.stdout == direct.stdout

        other = tmp_path / "other_table.jsonl"
        stdout_json(invoke("mine", "--kb", kb_file, "--out", other))
        assert invoke("toy", "train", "--epochs", 1, "--table", other).exit_code == 1
