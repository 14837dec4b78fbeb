import json

import pytest

from textguard.corpus import save_dataset
from textguard.experiment import (
    ExperimentConfig,
    accuracy,
    run_experiment,
    sha256_file,
    write_report,
)
from textguard.synthetic import make_desk_corpus


@pytest.fixture(scope="module")
def data_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    train = make_desk_corpus(160, seed=7, split="train")
    test = make_desk_corpus(80, seed=8, split="test")
    save_dataset(train, root / "train.jsonl")
    save_dataset(test, root / "test.jsonl")
    return root


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0

    def test_fraction(self):
        preds = [1] * 43 + [0] * 7
        golds = [1] * 50
        assert accuracy(preds, golds) == pytest.approx(0.86)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            accuracy([1], [1, 0])


class TestRunExperiment:
    def test_detector_eval_schema(self, data_files):
        config = ExperimentConfig(
            task="detector_eval",
            train_path=str(data_files / "train.jsonl"),
            test_path=str(data_files / "test.jsonl"),
            seeds=[1, 2, 3],
            detector={"stage2_samples": 40},
            attack={"budget": 300},
        )
        report = run_experiment(config)
        assert len(report["runs"]) == 3
        for run in report["runs"]:
            assert {"tpr", "fpr", "f1"} <= set(run["metrics"])
        assert set(report["checksums"]) == {"train", "test", "thesaurus", "morph_rules"}
        assert "mean" in report
        f1s = [r["metrics"]["f1"] for r in report["runs"]]
        assert report["mean"]["f1"] == pytest.approx(sum(f1s) / 3)

    def test_reports_reproducible(self, data_files, tmp_path):
        config = ExperimentConfig(
            task="detector_eval",
            train_path=str(data_files / "train.jsonl"),
            test_path=str(data_files / "test.jsonl"),
            seeds=[5],
            detector={"stage2_samples": 30},
            attack={"budget": 300},
        )
        a_path = tmp_path / "a.json"
        b_path = tmp_path / "b.json"
        write_report(run_experiment(config), a_path)
        write_report(run_experiment(config), b_path)
        assert a_path.read_bytes() == b_path.read_bytes()

    def test_paired_constraint_rates(self, data_files):
        config = ExperimentConfig(
            task="attack_constraint",
            train_path=str(data_files / "train.jsonl"),
            test_path=str(data_files / "test.jsonl"),
            seeds=[1],
            detector={"stage2_samples": 40},
            attack={"samples": 40, "budget": 500},
        )
        report = run_experiment(config)
        metrics = report["runs"][0]["metrics"]
        assert metrics["success_rate_constrained"] <= metrics["success_rate_unconstrained"]

    def test_unknown_task_rejected(self, data_files):
        with pytest.raises(ValueError, match="unknown task"):
            ExperimentConfig(
                task="mystery",
                train_path=str(data_files / "train.jsonl"),
                test_path=str(data_files / "test.jsonl"),
            )

    def test_missing_path_rejected(self, data_files):
        with pytest.raises(ValueError, match="does not exist"):
            ExperimentConfig(
                task="detector_eval",
                train_path=str(data_files / "nope.jsonl"),
                test_path=str(data_files / "test.jsonl"),
            )

    def test_toml_round_trip(self, data_files, tmp_path):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(
            "\n".join([
                'task = "detector_eval"',
                "seeds = [4]",
                "[data]",
                f'train = "{data_files / "train.jsonl"}"',
                f'test = "{data_files / "test.jsonl"}"',
                "[detector]",
                'family = "char_ops"',
                "stage2_samples = 30",
                "[attack]",
                "budget = 300",
            ]),
            encoding="utf-8",
        )
        config = ExperimentConfig.from_toml(config_path)
        assert config.task == "detector_eval"
        assert config.seeds == [4]
        assert config.detector["family"] == "char_ops"

    def test_checksums_match_files(self, data_files):
        train_path = data_files / "train.jsonl"
        config = ExperimentConfig(
            task="detector_eval",
            train_path=str(train_path),
            test_path=str(data_files / "test.jsonl"),
            seeds=[1],
            detector={"stage2_samples": 20},
            attack={"budget": 200},
        )
        report = run_experiment(config)
        assert report["checksums"]["train"] == sha256_file(train_path)

    def test_report_json_stable_key_order(self, data_files, tmp_path):
        config = ExperimentConfig(
            task="detector_eval",
            train_path=str(data_files / "train.jsonl"),
            test_path=str(data_files / "test.jsonl"),
            seeds=[1],
            detector={"stage2_samples": 20},
            attack={"budget": 200},
        )
        path = tmp_path / "r.json"
        write_report(run_experiment(config), path)
        payload = json.loads(path.read_text())
        dumped = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        assert path.read_text() == dumped
