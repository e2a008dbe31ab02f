import json

import pytest
from click.testing import CliRunner

from askg.service.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory, runner):
    """gen-fixture -> ingest -> resolve --apply -> build, shared by tests."""
    root = tmp_path_factory.mktemp("cli-pipeline")
    steps = [
        ["gen-fixture", "-n", "300", "--seed", "11", "--alias-rate", "0.25",
         "--out", str(root / "fx")],
        ["ingest", "--input", str(root / "fx" / "fixture.csv"),
         "--out", str(root / "staging")],
        ["resolve", "--staging", str(root / "staging"), "--threshold", "0.8",
         "--apply", "--report", str(root / "merges.csv")],
        ["build", "--staging", str(root / "staging"),
         "--snapshot", str(root / "graph.askg")],
    ]
    for step in steps:
        result = runner.invoke(main, step)
        assert result.exit_code == 0, (step, result.output)
    return root


class TestPipelineVerbs:
    def test_fixture_files_written(self, pipeline_dir):
        assert (pipeline_dir / "fx" / "fixture.csv").is_file()
        assert (pipeline_dir / "fx" / "fixture.truth.tsv").is_file()
        assert (pipeline_dir / "fx" / "fixture.counts.json").is_file()

    def test_staging_dir_contents(self, pipeline_dir):
        meta = json.loads((pipeline_dir / "staging" / "meta.json").read_text())
        assert meta["records"] == 300
        assert (pipeline_dir / "staging" / "staging.csv").is_file()
        assert (pipeline_dir / "staging" / "rejects.csv").is_file()

    def test_merge_report_columns(self, pipeline_dir):
        header = (pipeline_dir / "merges.csv").read_text().splitlines()[0]
        assert header == "left_id,right_id,left_canonical,right_canonical,similarity,tier"

    def test_resolution_figures_rendered(self, pipeline_dir):
        assert (pipeline_dir / "merges_similarity.png").stat().st_size > 1000
        assert (pipeline_dir / "merges_tiers.png").stat().st_size > 1000

    def test_entity_registry_written_on_apply(self, pipeline_dir):
        registry = json.loads((pipeline_dir / "staging" / "entities.json").read_text())
        assert "model" in registry

    def test_build_counts_match_generator(self, pipeline_dir, runner):
        counts = json.loads((pipeline_dir / "fx" / "fixture.counts.json").read_text())
        result = runner.invoke(
            main,
            ["build", "--staging", str(pipeline_dir / "staging"),
             "--snapshot", str(pipeline_dir / "graph2.askg"), "--json"],
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["nodes"] == counts["nodes"]
        assert payload["relationships"] == counts["relationships"]


class TestQueryVerb:
    def test_query_prints_verified_answer(self, pipeline_dir, runner):
        result = runner.invoke(
            main,
            ["query", "Find Boeing 737 accidents",
             "--snapshot", str(pipeline_dir / "graph.askg")],
        )
        assert result.exit_code == 0, result.output
        assert "verified: True" in result.output

    def test_cypher_only_skips_execution(self, pipeline_dir, runner):
        result = runner.invoke(
            main,
            ["query", "Find Boeing 737 accidents", "--cypher-only",
             "--snapshot", str(pipeline_dir / "graph.askg")],
        )
        assert result.exit_code == 0
        assert result.output.strip().startswith("MATCH")
        assert "verified" not in result.output

    def test_json_mode_is_machine_readable(self, pipeline_dir, runner):
        result = runner.invoke(
            main,
            ["query", "How many Cessna accidents are there?", "--json",
             "--snapshot", str(pipeline_dir / "graph.askg")],
        )
        payload = json.loads(result.output)
        assert payload["answer"]["verified"] is True

    def test_session_context_persists_across_invocations(self, pipeline_dir, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("ASKG_SESSIONS_DIR", str(tmp_path / "sessions"))
        snapshot = str(pipeline_dir / "graph.askg")
        first = runner.invoke(
            main,
            ["query", "Find Boeing 737 accidents", "--session", "s9",
             "--snapshot", snapshot, "--json"],
        )
        assert first.exit_code == 0, first.output
        follow = runner.invoke(
            main,
            ["query", "what about Airbus?", "--session", "s9",
             "--snapshot", snapshot, "--json"],
        )
        assert follow.exit_code == 0, follow.output
        assert "Airbus" in json.loads(follow.output)["cypher"]

    def test_untranslatable_exits_nonzero_with_reason(self, pipeline_dir, runner):
        result = runner.invoke(
            main,
            ["query", "sing a sea shanty", "--snapshot", str(pipeline_dir / "graph.askg")],
        )
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_resolve_threshold_monotonicity(self, pipeline_dir, runner, tmp_path):
        rows = {}
        for threshold, name in [("0.8", "a.csv"), ("0.99", "b.csv")]:
            path = tmp_path / name
            result = runner.invoke(
                main,
                ["resolve", "--staging", str(pipeline_dir / "staging"),
                 "--threshold", threshold, "--report", str(path), "--no-figures"],
            )
            assert result.exit_code == 0
            lines = path.read_text().splitlines()[1:]
            rows[threshold] = {tuple(line.split(",")[:2]) for line in lines}
        assert rows["0.99"] <= rows["0.8"]


class TestAnnotateVerbs:
    def test_train_then_predict(self, runner, tmp_path):
        corpus = tmp_path / "corpus.tsv"
        corpus.write_text(
            "\n".join(
                [
                    "Vehicle\tcessna 172 single engine airplane",
                    "Vehicle\tboeing 737 commercial jet",
                    "Vehicle\tpiper cherokee light airplane",
                    "Location\tdaytona beach florida city",
                    "Location\tdenver colorado airport city",
                    "Location\tchicago illinois lakefront",
                ]
            )
        )
        model_path = tmp_path / "model.json"
        train = runner.invoke(
            main,
            ["annotate", "train", "--corpus", str(corpus), "--model-out", str(model_path)],
        )
        assert train.exit_code == 0, train.output
        predict = runner.invoke(
            main,
            ["annotate", "predict", "--model", str(model_path),
             "--text", "Cessna 172", "--json"],
        )
        assert predict.exit_code == 0, predict.output
        payload = json.loads(predict.output)
        assert payload["predictions"][0]["label"] == "Vehicle"

    def test_bad_corpus_exits_nonzero(self, runner, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("no tab separator here")
        result = runner.invoke(
            main,
            ["annotate", "train", "--corpus", str(bad), "--model-out", str(tmp_path / "m.json")],
        )
        assert result.exit_code == 1
        assert "error:" in result.output


class TestReportVerb:
    def test_graph_report_files(self, pipeline_dir, runner, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(
            main,
            ["report", "--snapshot", str(pipeline_dir / "graph.askg"), "--out", str(out)],
        )
        assert result.exit_code == 0
        node_csv = (out / "node_counts.csv").read_text().splitlines()
        assert node_csv[0] == "label,count"
        assert any(line.startswith("Accident,300") for line in node_csv)
        assert (out / "node_counts.png").stat().st_size > 1000
        assert (out / "rel_counts.png").stat().st_size > 1000

    def test_missing_snapshot_exits_nonzero(self, runner, tmp_path):
        result = runner.invoke(
            main, ["report", "--snapshot", str(tmp_path / "ghost.askg"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 1
