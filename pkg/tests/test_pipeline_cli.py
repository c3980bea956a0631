import csv
import json
import math
from pathlib import Path

import pytest

from cultnovelty.cli import main
from cultnovelty.pipeline import (
    SCORE_COLUMNS,
    RunConfig,
    cmd_analyze,
    cmd_build,
    cmd_distances,
    cmd_report,
    cmd_score,
    derive_split_seed,
    fmt_float,
)

from conftest import FIXTURES

CORPUS = str(FIXTURES / "recipes_50.jsonl")
DISHES = str(FIXTURES / "dishes_sample.json")
LINGUISTIC = str(FIXTURES / "linguistic.csv")
RELIGIOUS = str(FIXTURES / "religious.csv")


def config_for(tmp_path, **overrides):
    values = dict(
        corpus_path=CORPUS,
        dish_specs_path=DISHES,
        linguistic_path=LINGUISTIC,
        religious_path=RELIGIOUS,
        output_dir=str(tmp_path / "out"),
        seed=17,
        n_boot=50,
    )
    values.update(overrides)
    return RunConfig(**values)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def run_pipeline(config):
    cmd_build(config)
    cmd_score(config)
    return cmd_analyze(config)


def snapshot(directory):
    return {
        str(p.relative_to(directory)): p.read_bytes()
        for p in sorted(Path(directory).rglob("*"))
        if p.is_file()
    }


class TestRunConfig:
    def test_defaults_match_published_values(self):
        config = RunConfig()
        assert config.lambda1 == 0.8
        assert config.lambda2 == 0.2
        assert config.pmi_window == 3
        assert config.holdout_fraction == 0.3
        assert config.rbo_p == 0.9

    def test_flag_overrides_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 5, "pmi_window": 4}))
        config = RunConfig.load(path, {"seed": 9, "pmi_window": None})
        assert config.seed == 9
        assert config.pmi_window == 4

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"nope": 1}))
        with pytest.raises(Exception):
            RunConfig.load(path)

    def test_manifest_view_hides_workers(self):
        view = RunConfig(workers=8).manifest_view()
        assert "workers" not in view
        assert view["lambda1"] == 0.8

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(lambda1=0.9, lambda2=0.2)
        with pytest.raises(ValueError):
            RunConfig(pmi_window=1)
        with pytest.raises(ValueError):
            RunConfig(holdout_fraction=1.0)


class TestBuild:
    def test_manifests_and_eligibility(self, tmp_path):
        config = config_for(tmp_path)
        result = cmd_build(config)
        assert len(result["manifests"]) == 7

        rows = read_csv(Path(config.output_dir) / "eligibility.csv")
        assert rows[0] == ["dish", "origin", "kb_size", "variation_count", "status"]
        by_key = {(r[0], r[1]): r for r in rows[1:]}
        # ten origin documents: floor(0.3 * 10) = 3 held out, 7 kept
        assert by_key[("Couscous", "MA")][2:] == ["7", "10", "eligible"]
        assert by_key[("Pierogi", "JP")][4] == "ineligible"
        assert by_key[("Biryani", "")][4] == "no_matches"

    def test_manifest_contents(self, tmp_path):
        config = config_for(tmp_path)
        cmd_build(config)
        manifest = json.loads(
            (Path(config.output_dir) / "manifests" / "couscous__MA.json").read_text()
        )
        assert manifest["product"] == "Couscous"
        assert manifest["origin"] == "MA"
        assert len(manifest["knowledge_ids"]) == 7
        assert len(manifest["variations"]) == 10
        assert manifest["holdout_seed"] == derive_split_seed(17, "Couscous", "MA")
        held_out = [v for v in manifest["variations"] if v["country"] == "MA"]
        assert len(held_out) == 3

    def test_rerun_byte_identical(self, tmp_path):
        config = config_for(tmp_path)
        cmd_build(config)
        first = snapshot(config.output_dir)
        cmd_build(config)
        assert snapshot(config.output_dir) == first

    def test_missing_dish_specs_leaves_no_outputs(self, tmp_path):
        config = config_for(tmp_path, dish_specs_path=str(tmp_path / "nope.json"))
        with pytest.raises(FileNotFoundError):
            cmd_build(config)
        assert not (tmp_path / "out").exists()


class TestScore:
    def test_columns_and_row_order(self, tmp_path):
        config = config_for(tmp_path)
        cmd_build(config)
        scores_path = cmd_score(config)
        rows = read_csv(scores_path)
        assert tuple(rows[0]) == SCORE_COLUMNS
        keys = [(r[0], r[1], r[2]) for r in rows[1:]]
        assert keys == sorted(keys)
        assert len(rows) - 1 == 103  # sum of variation counts over the 7 manifests

    def test_scores_match_config_lambda(self, tmp_path):
        config = config_for(tmp_path)
        cmd_build(config)
        rows = read_csv(cmd_score(config))
        header = rows[0]
        idx = {name: header.index(name) for name in header}
        for row in rows[1:]:
            appearance = float(row[idx["appearance"]])
            disappearance = float(row[idx["disappearance"]])
            combined = float(row[idx["newness"]])
            assert combined == pytest.approx(0.8 * appearance + 0.2 * disappearance, abs=1e-8)

    def test_workers_do_not_change_output(self, tmp_path):
        config = config_for(tmp_path)
        cmd_build(config)
        serial = cmd_score(config).read_bytes()
        parallel = cmd_score(config_for(tmp_path, workers=6)).read_bytes()
        assert serial == parallel

    def test_empty_manifest_set(self, tmp_path):
        config = config_for(tmp_path)
        (tmp_path / "out" / "manifests").mkdir(parents=True)
        scores_path = cmd_score(config)
        rows = read_csv(scores_path)
        assert rows == [list(SCORE_COLUMNS)]


class TestAnalyze:
    @pytest.fixture(scope="class")
    def analyzed(self, tmp_path_factory):
        tmp_path = tmp_path_factory.mktemp("analyzed")
        config = config_for(tmp_path)
        run_pipeline(config)
        return Path(config.output_dir)

    def test_tables_written(self, analyzed):
        for name in (
            "correlations_metrics.csv",
            "correlations_distances.csv",
            "regressions.csv",
            "marginal.csv",
            "mediation.csv",
            "run_manifest.json",
        ):
            assert (analyzed / name).exists()

    def test_metric_correlation_pairs(self, analyzed):
        rows = read_csv(analyzed / "correlations_metrics.csv")
        assert len(rows) - 1 == 10  # unordered pairs of the five metrics

    def test_distance_correlations_cover_grid(self, analyzed):
        rows = read_csv(analyzed / "correlations_distances.csv")
        assert len(rows) - 1 == 20  # 4 distances x 5 metrics

    def test_regression_terms(self, analyzed):
        rows = read_csv(analyzed / "regressions.csv")
        by_distance = {}
        for row in rows[1:]:
            by_distance.setdefault(row[0], []).append(row[3])
        for kind, terms in by_distance.items():
            assert terms[0] == "const"
            assert len(terms) == 9

    def test_run_manifest_defaults(self, analyzed):
        manifest = json.loads((analyzed / "run_manifest.json").read_text())
        assert manifest["config"]["lambda1"] == 0.8
        assert manifest["config"]["lambda2"] == 0.2
        assert manifest["config"]["pmi_window"] == 3
        assert manifest["config"]["holdout_fraction"] == 0.3
        assert manifest["tool_version"]
        assert manifest["input_digests"]

    def test_mediation_identity_in_table(self, analyzed):
        rows = read_csv(analyzed / "mediation.csv")
        header = rows[0]
        idx = {name: header.index(name) for name in header}
        assert len(rows) > 1
        for row in rows[1:]:
            total = float(row[idx["total_effect"]])
            acme = float(row[idx["acme"]])
            ade = float(row[idx["ade"]])
            assert total == pytest.approx(acme + ade, abs=1e-9)

    def test_zero_country_overlap_gives_empty_regressions(self, tmp_path):
        out = tmp_path / "out"
        out.mkdir(parents=True)
        scores = out / "scores.csv"
        header = ",".join(SCORE_COLUMNS)
        rows = [header]
        for i in range(12):
            rows.append(
                f"Dish,Q{i % 2}A,v{i:02d},Q{(i + 1) % 2}B,"
                + ",".join(fmt_float(0.1 * (i % 7) + 0.05 * j) for j in range(10))
            )
        scores.write_text("\n".join(rows) + "\n")
        config = config_for(tmp_path, linguistic_path=None, religious_path=None)
        cmd_analyze(config)
        table = read_csv(out / "regressions.csv")
        assert len(table) == 1  # header only


class TestDeterminism:
    def test_full_pipeline_byte_identical_across_worker_counts(self, tmp_path):
        config = config_for(tmp_path, workers=1)
        run_pipeline(config)
        first = snapshot(config.output_dir)

        for p in sorted(Path(config.output_dir).rglob("*"), reverse=True):
            p.unlink() if p.is_file() else p.rmdir()

        run_pipeline(config_for(tmp_path, workers=5))
        assert snapshot(config.output_dir) == first


class TestDistancesCommand:
    def test_matrices_written(self, tmp_path):
        config = config_for(tmp_path)
        written = cmd_distances(config)
        assert sorted(Path(p).name for p in written) == ["geo.csv", "iw.csv"]
        geo_rows = read_csv(Path(config.output_dir) / "geo.csv")
        assert geo_rows[0] == ["iso_a", "iso_b", "distance"]
        lookup = {(r[0], r[1]): float(r[2]) for r in geo_rows[1:]}
        assert lookup[("DE", "FR")] == pytest.approx(878, abs=2)


class TestReportCommand:
    def test_bundle(self, tmp_path):
        config = config_for(tmp_path)
        run_pipeline(config)
        bundle = cmd_report(config)
        index = json.loads((bundle / "bundle_index.json").read_text())
        assert set(index["files"]) == {
            "correlations_metrics.csv",
            "correlations_distances.csv",
            "regressions.csv",
            "marginal.csv",
            "mediation.csv",
            "run_manifest.json",
        }
        for name in index["files"]:
            assert (bundle / name).exists()


class TestCli:
    def test_usage_error_exits_one(self, capsys):
        assert main(["not-a-command"]) == 1

    def test_missing_input_exits_two(self, tmp_path, capsys):
        code = main(
            [
                "build",
                "--corpus", CORPUS,
                "--dishes", str(tmp_path / "missing.json"),
                "--output-dir", str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert not (tmp_path / "out").exists()

    def test_bad_config_value_exits_one(self, tmp_path, capsys):
        code = main(
            [
                "build",
                "--corpus", CORPUS,
                "--dishes", DISHES,
                "--holdout", "1.5",
                "--output-dir", str(tmp_path / "out"),
            ]
        )
        assert code == 1

    def test_full_run_via_cli(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        base = ["--corpus", CORPUS, "--output-dir", out, "--seed", "17", "--n-boot", "10"]
        assert main(["build", "--dishes", DISHES] + base) == 0
        assert main(["score"] + base) == 0
        assert (
            main(
                ["analyze", "--linguistic", LINGUISTIC, "--religious", RELIGIOUS] + base
            )
            == 0
        )
        assert main(["report"] + base) == 0
        assert (Path(out) / "bundle" / "run_manifest.json").exists()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "corpus_path": CORPUS,
                    "dish_specs_path": DISHES,
                    "output_dir": str(tmp_path / "from_file"),
                    "seed": 1,
                }
            )
        )
        out = str(tmp_path / "flag_wins")
        assert main(["build", "--config", str(config_path), "--output-dir", out]) == 0
        assert Path(out).exists()
        assert not (tmp_path / "from_file").exists()

    def test_naive_provider_end_to_end(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        base = [
            "--corpus", CORPUS, "--output-dir", out,
            "--seed", "3", "--provider", "naive",
        ]
        assert main(["build", "--dishes", DISHES] + base) == 0
        assert main(["score"] + base) == 0
        rows = read_csv(Path(out) / "scores.csv")
        assert len(rows) > 1
