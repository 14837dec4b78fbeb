import math

import numpy as np
import pytest

from textguard.augment import (
    AugmentConfig,
    candidate_space_size,
    detector_guided_augment,
    random_synonym_substitute,
    unguided_augment,
)
from textguard.corpus import Dataset, TextSample, tokenize
from textguard.detector import DetectorModel, anomaly_score
from textguard.features import FeatureSpec
from textguard.lexicon import load_thesaurus


def fixed_detector(bias: float) -> DetectorModel:
    return DetectorModel(spec=FeatureSpec(hash_dim=64), weights=np.zeros(64), bias=bias)


@pytest.fixture(scope="module")
def full_thesaurus(tmp_path_factory):
    path = tmp_path_factory.mktemp("lex") / "t.tsv"
    lines = [f"word{i}\t" + ",".join(f"syn{i}x{j}" for j in range(60)) for i in range(12)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return load_thesaurus(path)


class TestCandidateSpace:
    def test_paper_figures(self):
        assert candidate_space_size(10, 30, 50) == math.comb(10, 3) * 50 ** 3
        assert candidate_space_size(10, 30, 50) == 15_000_000

    def test_single_word(self):
        assert candidate_space_size(1, 30, 5) == 5


class TestRandomSynonymSubstitute:
    def test_exact_count_ten_words(self, full_thesaurus):
        text = " ".join(f"word{i}" for i in range(10))
        result = random_synonym_substitute(text, AugmentConfig(p=30), full_thesaurus, 3)
        assert result.target == 3
        assert result.substituted == 3
        assert not result.shortfall
        orig = tokenize(text).tokens
        new = tokenize(result.text).tokens
        assert sum(1 for a, b in zip(orig, new) if a != b) == 3

    def test_token_count_preserved(self, full_thesaurus):
        text = "word0 , word1 word2 !"
        result = random_synonym_substitute(text, AugmentConfig(p=50), full_thesaurus, 1)
        assert len(tokenize(result.text)) == len(tokenize(text))

    def test_shortfall_flagged(self, full_thesaurus):
        text = "word0 strange unknown tokens everywhere today"
        result = random_synonym_substitute(text, AugmentConfig(p=90), full_thesaurus, 2)
        assert result.shortfall
        assert result.substituted == 1

    def test_single_synonym_always_used(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("word\tonly\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        result = random_synonym_substitute("word", AugmentConfig(p=100, s=50), thesaurus, 0)
        assert result.text == "only"

    def test_rank_cutoff_respected(self, full_thesaurus):
        config = AugmentConfig(p=100, s=5)
        for seed in range(30):
            result = random_synonym_substitute("word3", config, full_thesaurus, seed)
            assert result.text in [f"syn3x{j}" for j in range(5)]

    def test_deterministic(self, full_thesaurus):
        text = " ".join(f"word{i}" for i in range(8))
        config = AugmentConfig(p=40)
        assert (random_synonym_substitute(text, config, full_thesaurus, 9)
                == random_synonym_substitute(text, config, full_thesaurus, 9))

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            AugmentConfig(p=0)
        with pytest.raises(ValueError):
            AugmentConfig(s=0)
        with pytest.raises(ValueError):
            AugmentConfig(max_attempts=0)


class TestDetectorGuidedAugment:
    def _train(self, full_thesaurus) -> Dataset:
        texts = [" ".join(f"word{(i + j) % 12}" for j in range(8)) for i in range(6)]
        return Dataset(
            [TextSample(id=f"t{i}", text=t, label=i % 2) for i, t in enumerate(texts)],
            num_classes=2,
        )

    def test_flag_everything_accepts_first_attempt(self, full_thesaurus):
        train = self._train(full_thesaurus)
        out = detector_guided_augment(train, fixed_detector(3.0),
                                      AugmentConfig(p=30, seed=1), full_thesaurus)
        variants = [s for s in out.samples if s.provenance.value == "augmented"]
        assert len(variants) == len(train.samples)
        assert all(s.meta["attempts"] == 1 for s in variants)
        assert not any(s.meta.get("exhausted") for s in variants)

    def test_flag_nothing_exhausts_and_keeps_best(self, full_thesaurus):
        train = self._train(full_thesaurus)
        config = AugmentConfig(p=30, max_attempts=4, seed=1)
        out = detector_guided_augment(train, fixed_detector(0.0), config, full_thesaurus)
        variants = [s for s in out.samples if s.provenance.value == "augmented"]
        assert all(s.meta["attempts"] == 4 for s in variants)
        assert all(s.meta["exhausted"] for s in variants)

    def test_accepted_variants_rescore_anomalous(self, small_train, small_victim,
                                                 thesaurus):
        from textguard.detector import default_detector_config, train_two_stage
        from textguard.perturb import PerturbFamily

        detector = train_two_stage(small_train, PerturbFamily("thesaurus_sub"), None,
                                   default_detector_config(seed=2), thesaurus=thesaurus)
        subset = Dataset(small_train.samples[:40], num_classes=2)
        out = detector_guided_augment(subset, detector, AugmentConfig(seed=3), thesaurus)
        for sample in out.samples:
            if sample.provenance.value == "augmented" and not sample.meta.get("exhausted"):
                assert anomaly_score(detector, sample.text) > 0.5

    def test_output_doubles_input(self, full_thesaurus):
        train = self._train(full_thesaurus)
        out = detector_guided_augment(train, fixed_detector(3.0),
                                      AugmentConfig(seed=2), full_thesaurus)
        assert len(out.samples) == 2 * len(train.samples)

    def test_deterministic_attempt_sequences(self, full_thesaurus):
        train = self._train(full_thesaurus)
        config = AugmentConfig(p=30, max_attempts=6, seed=9)
        a = detector_guided_augment(train, fixed_detector(0.0), config, full_thesaurus)
        b = detector_guided_augment(train, fixed_detector(0.0), config, full_thesaurus)
        assert [s.text for s in a.samples] == [s.text for s in b.samples]

    def test_unguided_baseline_single_attempt(self, full_thesaurus):
        train = self._train(full_thesaurus)
        guided = detector_guided_augment(train, fixed_detector(3.0),
                                         AugmentConfig(seed=5), full_thesaurus)
        baseline = unguided_augment(train, AugmentConfig(seed=5), full_thesaurus)
        guided_variants = [s.text for s in guided.samples if s.provenance.value == "augmented"]
        baseline_variants = [s.text for s in baseline.samples if s.provenance.value == "augmented"]
        assert guided_variants == baseline_variants
