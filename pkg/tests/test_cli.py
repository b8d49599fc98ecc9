import json
import os

import pytest

from cellvec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


class TestBasics:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "cellvec" in capsys.readouterr().out

    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_input_file_names_path(self, tmp_path, capsys):
        code, out = run(capsys, "stops", "--waypoints", "no-such-file.csv",
                        "--out", str(tmp_path / "o"))
        assert code == 1
        assert "no-such-file.csv" in out.err


SYNTH_ARGS = ["--categories", "4", "--places-per-category", "4", "--extent-m", "4000",
              "--agents", "10", "--days", "8", "--radius-m", "2500",
              "--visits-mean", "5", "--seed", "7"]


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    """synth -> stops -> corpus -> train, shared across CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(root / "synth")] + SYNTH_ARGS) == 0
    assert main(["stops", "--waypoints", str(root / "synth" / "waypoints.csv"),
                 "--out", str(root / "stops")]) == 0
    assert main(["corpus", "--cells", str(root / "stops" / "cells.txt"),
                 "--out", str(root / "corpus")]) == 0
    assert main(["train", "--cells", str(root / "stops" / "cells.txt"),
                 "--vocab", str(root / "corpus" / "vocab.txt"),
                 "--out", str(root / "train"), "--seed", "1"]) == 0
    return root


class TestStages:
    def test_synth_artifacts(self, staged):
        for name in ("waypoints.csv", "places.csv", "pois.csv", "manifest.json"):
            assert (staged / "synth" / name).is_file()

    def test_stops_artifacts(self, staged):
        assert (staged / "stops" / "stops.csv").is_file()
        cells = (staged / "stops" / "cells.txt").read_text().splitlines()
        assert cells and all(line.split() for line in cells)
        summary = json.loads((staged / "stops" / "summary.json").read_text())
        assert summary["n_stops"] > 0

    def test_corpus_artifacts(self, staged):
        vocab_lines = (staged / "corpus" / "vocab.txt").read_text().splitlines()
        assert all(len(line.split()) == 2 for line in vocab_lines)
        stats = json.loads((staged / "corpus" / "corpus_stats.json").read_text())
        assert stats["vocab_size"] == len(vocab_lines)
        assert stats["mean_len"] > 0

    def test_train_artifacts(self, staged):
        emb = (staged / "train" / "embeddings.txt").read_text().splitlines()
        n, dim = map(int, emb[0].split())
        assert dim == 20 and len(emb) == n + 1
        assert (staged / "train" / "embeddings.txt.ctx").is_file()

    def test_every_stage_has_exactly_one_manifest(self, staged):
        for stage in ("synth", "stops", "corpus", "train"):
            manifest = json.loads((staged / stage / "manifest.json").read_text())
            assert manifest["tool"] == "cellvec"
            assert manifest["subcommand"] == stage
            assert all(len(digest) == 64 for digest in manifest["inputs"].values())

    def test_query_reports(self, staged, capsys):
        vocab_first = (staged / "corpus" / "vocab.txt").read_text().split()[0]
        code, _ = run(capsys, "query",
                      "--embeddings", str(staged / "train" / "embeddings.txt"),
                      "--pois", str(staged / "synth" / "pois.csv"),
                      "--target", vocab_first, "--k", "5",
                      "--out", str(staged / "query"))
        assert code == 0
        report = json.loads((staged / "query" / "neighbor_report.json").read_text())
        assert len(report["neighbors"]) == 5
        assert report["target"]["cell"] == vocab_first
        geojson = json.loads((staged / "query" / "neighbors.geojson").read_text())
        assert geojson["type"] == "FeatureCollection"
        assert len(geojson["features"]) == 6

    def test_query_unknown_target_fails(self, staged, capsys):
        code, out = run(capsys, "query",
                        "--embeddings", str(staged / "train" / "embeddings.txt"),
                        "--target", "12345", "--out", str(staged / "query-bad"))
        assert code == 1

    def test_analyze_category_sim(self, staged, capsys):
        code, _ = run(capsys, "analyze", "category-sim",
                      "--embeddings", str(staged / "train" / "embeddings.txt"),
                      "--pois", str(staged / "synth" / "pois.csv"),
                      "--out", str(staged / "cat"))
        assert code == 0
        rows = json.loads((staged / "cat" / "category_sim.json").read_text())
        assert rows
        for row in rows:
            for key in ("category", "sample_size", "intra_mean", "inter_mean",
                        "t_stat", "df", "p_two_sided"):
                assert key in row

    def test_analyze_decay_with_dumps(self, staged, capsys):
        code, _ = run(capsys, "analyze", "decay",
                      "--embeddings", str(staged / "train" / "embeddings.txt"),
                      "--sample", "500", "--seed", "3", "--dump-pairs", "--svg",
                      "--out", str(staged / "decay"))
        assert code == 0
        decay = json.loads((staged / "decay" / "decay.json").read_text())
        assert decay["n_pairs"] >= 1
        assert decay["range_filter"]["max_m"] is None
        pairs = (staged / "decay" / "pairs.csv").read_text().splitlines()
        assert pairs[0] == "D,CS"
        assert len(pairs) == decay["n_pairs"] + 1
        assert (staged / "decay" / "decay.svg").read_text().startswith("<svg")

    def test_analyze_variogram(self, staged, capsys):
        code, _ = run(capsys, "analyze", "variogram",
                      "--embeddings", str(staged / "train" / "embeddings.txt"),
                      "--sample", "500", "--seed", "3",
                      "--bin-width", "500", "--max-dist", "20000",
                      "--out", str(staged / "vario"))
        assert code == 0
        vario = json.loads((staged / "vario" / "variogram.json").read_text())
        assert len(vario["bins"]) == 40
        csv_lines = (staged / "vario" / "variogram.csv").read_text().splitlines()
        assert csv_lines[0] == "h_mid,n_pairs,gamma"
        assert len(csv_lines) == 41


class TestPipeline:
    def test_pipeline_produces_all_report_types(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            "# desk-scale smoke configuration\n"
            "seed=5\n"
            "synth.n_categories=4\n"
            "synth.places_per_category=4\n"
            "synth.world_extent_m=4000\n"
            "synth.n_agents=10\n"
            "synth.days=8\n"
            "synth.agent_activity_radius_m=2500\n"
            "synth.visits_per_day_mean=5\n"
            "train.epochs=5\n"
        )
        out = tmp_path / "run"
        assert main(["pipeline", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "query" / "neighbor_report.json").is_file()
        assert (out / "analyze-category" / "category_sim.json").is_file()
        assert (out / "analyze-decay" / "decay.json").is_file()
        assert (out / "analyze-variogram" / "variogram.json").is_file()
        for stage in ("synth", "stops", "corpus", "train", "query",
                      "analyze-category", "analyze-decay", "analyze-variogram"):
            names = os.listdir(out / stage)
            assert names.count("manifest.json") == 1
