import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textguard.backend import BackendEndpoint, BackendError
from textguard.corpus import tokenize
from textguard.synthetic import make_sentence
from textguard.transform import (
    TRANSFORM_IDS,
    TransformContext,
    apply_transform,
    sample_transforms,
    transform_variants,
)


@pytest.fixture
def dead_endpoint():
    return BackendEndpoint(base_url="http://127.0.0.1:1", timeout=0.2, fallback="rule_based")


@pytest.fixture
def strict_dead_endpoint():
    return BackendEndpoint(base_url="http://127.0.0.1:1", timeout=0.2, fallback="error")


class TestSampleTransforms:
    def test_k6_exhausts_the_set(self):
        assert sorted(sample_transforms(0, 6)) == sorted(TRANSFORM_IDS)

    def test_k3_distinct(self):
        ids = sample_transforms(7, 3)
        assert len(ids) == 3
        assert len(set(ids)) == 3

    def test_deterministic(self):
        assert sample_transforms(42, 4) == sample_transforms(42, 4)

    def test_k_too_large_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            sample_transforms(0, 7)

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            sample_transforms(0, 0)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=100, deadline=None)
    def test_never_repeats_within_draw(self, seed):
        ids = sample_transforms(seed, 5)
        assert len(set(ids)) == 5


class TestContraction:
    def test_contracts_standard_pair(self, transform_context):
        report = apply_transform("contraction", "do not stop now", transform_context)
        assert report.output_text == "don't stop now"

    def test_expands_when_nothing_to_contract(self, transform_context):
        report = apply_transform("contraction", "don't stop now", transform_context)
        assert report.output_text == "do not stop now"

    def test_case_preserved(self, transform_context):
        report = apply_transform("contraction", "It is a fine day", transform_context)
        assert report.output_text == "It's a fine day"

    def test_expand_contract_identity_on_pairs(self, transform_context, morph_rules):
        for expanded, contracted in list(morph_rules.contractions.items())[:10]:
            once = apply_transform("contraction", expanded, transform_context).output_text
            assert once == contracted
            back = apply_transform("contraction", once, transform_context).output_text
            assert back == expanded


class TestTenseChange:
    def test_past_to_present(self, transform_context):
        report = apply_transform("tense_change", "she walked home", transform_context)
        assert report.output_text == "she walks home"

    def test_present_to_past_irregular(self, transform_context):
        report = apply_transform("tense_change", "the film is good", transform_context)
        assert report.output_text == "the film was good"

    def test_positions_recorded(self, transform_context):
        report = apply_transform("tense_change", "she walked home", transform_context)
        assert report.positions == (1,)


class TestAdverbInsertion:
    def test_token_count_increases_by_one(self, transform_context):
        text = "the film is good"
        report = apply_transform("adverb_insertion", text, transform_context, rng_seed=3)
        assert len(tokenize(report.output_text)) == len(tokenize(text)) + 1

    def test_inserted_before_first_verb(self, transform_context, morph_rules):
        report = apply_transform("adverb_insertion", "the film is good",
                                 transform_context, rng_seed=3)
        tokens = tokenize(report.output_text).tokens
        assert tokens[2] in morph_rules.adverbs
        assert tokens[3] == "is"

    def test_no_verb_prepends(self, transform_context, morph_rules):
        report = apply_transform("adverb_insertion", "good film", transform_context, rng_seed=1)
        tokens = tokenize(report.output_text).tokens
        assert tokens[0] in morph_rules.adverbs


class TestSynonymSwap:
    def test_swaps_rank_one_synonyms(self, transform_context, thesaurus):
        text = "the film is good"
        report = apply_transform("synonym_swap", text, transform_context, rng_seed=5)
        orig = tokenize(text).tokens
        new = tokenize(report.output_text).tokens
        assert len(orig) == len(new)
        changed = [(a, b) for a, b in zip(orig, new) if a != b]
        assert changed
        for before, after in changed:
            assert after == thesaurus.entries[before][0]

    def test_touch_count_is_fifth_of_eligible(self, transform_context):
        # 10 thesaurus-covered words -> ceil(0.2 * 10) = 2 swapped
        text = "good great film story plot script music humor tone style"
        report = apply_transform("synonym_swap", text, transform_context, rng_seed=8)
        orig = tokenize(text).tokens
        new = tokenize(report.output_text).tokens
        assert sum(1 for a, b in zip(orig, new) if a != b) == 2
        assert report.positions == tuple(
            i for i, (a, b) in enumerate(zip(orig, new)) if a != b
        )

    def test_deterministic(self, transform_context):
        text = make_sentence(1, rng_seed=12)
        a = apply_transform("synonym_swap", text, transform_context, rng_seed=9)
        b = apply_transform("synonym_swap", text, transform_context, rng_seed=9)
        assert a.output_text == b.output_text


class TestBackendTransforms:
    def test_mlm_fallback_is_synonym_swap(self, transform_context, thesaurus,
                                           morph_rules, dead_endpoint):
        context = TransformContext(thesaurus=thesaurus, morph_rules=morph_rules,
                                   endpoint=dead_endpoint)
        text = "the film is really good"
        with_fallback = apply_transform("mlm_suggestion", text, context, rng_seed=4)
        plain_swap = apply_transform("synonym_swap", text, transform_context, rng_seed=4)
        assert with_fallback.fallback_used
        assert with_fallback.output_text == plain_swap.output_text

    def test_back_translation_fallback_composition(self, thesaurus, morph_rules,
                                                   dead_endpoint, transform_context):
        context = TransformContext(thesaurus=thesaurus, morph_rules=morph_rules,
                                   endpoint=dead_endpoint)
        text = "you do not get a good film often"
        report = apply_transform("back_translation", text, context, rng_seed=4)
        swapped = apply_transform("synonym_swap", text, transform_context, rng_seed=4)
        expected = apply_transform("contraction", swapped.output_text, transform_context)
        assert report.fallback_used
        assert report.output_text == expected.output_text

    def test_fallback_error_policy_raises(self, thesaurus, morph_rules,
                                          strict_dead_endpoint):
        context = TransformContext(thesaurus=thesaurus, morph_rules=morph_rules,
                                   endpoint=strict_dead_endpoint)
        with pytest.raises(BackendError):
            apply_transform("back_translation", "a good film", context, rng_seed=0)

    def test_no_endpoint_uses_fallback_silently_flagged(self, transform_context):
        report = apply_transform("mlm_suggestion", "the film is good",
                                 transform_context, rng_seed=2)
        assert report.fallback_used


class TestTransformProperties:
    @given(st.integers(min_value=0, max_value=300),
           st.sampled_from(TRANSFORM_IDS))
    @settings(max_examples=120, deadline=None)
    def test_non_empty_output(self, seed, fn_id):
        from textguard.lexicon import load_default_morph_rules, load_default_thesaurus

        context = TransformContext(thesaurus=load_default_thesaurus(),
                                   morph_rules=load_default_morph_rules())
        text = make_sentence(seed % 2, rng_seed=seed)
        report = apply_transform(fn_id, text, context, rng_seed=seed)
        assert report.output_text.strip()
        report.output_text.encode("utf-8")

    def test_unknown_transform_rejected(self, transform_context):
        with pytest.raises(ValueError, match="unknown transform"):
            apply_transform("paraphrase", "text", transform_context)

    def test_variants_use_distinct_seeds(self, transform_context):
        reports = transform_variants("the film is really good and the cast is great",
                                     ["synonym_swap", "synonym_swap"],
                                     transform_context, rng_seed=1)
        assert reports[0].output_text == reports[1].output_text
