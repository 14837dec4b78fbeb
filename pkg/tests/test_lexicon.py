import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textguard.lexicon import (
    ResourceError,
    inflect_verb,
    is_verb_candidate,
    load_default_morph_rules,
    load_default_thesaurus,
    load_morph_rules,
    load_thesaurus,
    synonyms,
)


class TestThesaurusLoader:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("good\tgreat,fine,nice\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        assert synonyms(thesaurus, "good", 10) == ["great", "fine", "nice"]

    def test_headword_removed_from_list(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("good\tgood,great\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        assert synonyms(thesaurus, "good", 10) == ["great"]

    def test_duplicate_headword_replaces_with_warning(self, tmp_path, caplog):
        path = tmp_path / "t.tsv"
        path.write_text("good\tgreat\ngood\tfine\n", encoding="utf-8")
        with caplog.at_level("WARNING"):
            thesaurus = load_thesaurus(path)
        assert synonyms(thesaurus, "good", 10) == ["fine"]
        assert any("duplicate headword" in r.message for r in caplog.records)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("good\tgreat\nnotabs\n", encoding="utf-8")
        with pytest.raises(ResourceError, match=":2"):
            load_thesaurus(path)

    def test_dedup_preserves_rank_order(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("good\tgreat,fine,great,nice,fine\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        assert synonyms(thesaurus, "good", 10) == ["great", "fine", "nice"]


class TestSynonyms:
    def test_absent_word_empty(self, thesaurus):
        assert synonyms(thesaurus, "zzzunknown", 50) == []

    def test_truncates_to_s(self, tmp_path):
        path = tmp_path / "t.tsv"
        ranked = ",".join(f"w{i}" for i in range(120))
        path.write_text(f"head\t{ranked}\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        got = synonyms(thesaurus, "head", 50)
        assert got == [f"w{i}" for i in range(50)]

    def test_short_list_returned_whole(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("head\ta,b,c\n", encoding="utf-8")
        thesaurus = load_thesaurus(path)
        assert synonyms(thesaurus, "head", 50) == ["a", "b", "c"]

    def test_never_contains_query_word(self, thesaurus):
        for word in ("good", "bad", "film", "really"):
            assert word not in synonyms(thesaurus, word, 50)

    def test_invalid_s_rejected(self, thesaurus):
        with pytest.raises(ValueError):
            synonyms(thesaurus, "good", 0)


class TestMorphRules:
    def test_default_resource_loads(self):
        rules = load_default_morph_rules()
        assert rules.contractions["do not"] == "don't"
        assert len(rules.contractions) >= 40
        assert "really" in rules.adverbs
        assert rules.irregular_present["went"] == "goes"

    def test_contraction_bijective(self, morph_rules):
        expansions = morph_rules.expansions
        for expanded, contracted in morph_rules.contractions.items():
            assert expansions[contracted] == expanded

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("[NONSENSE]\nfoo\n", encoding="utf-8")
        with pytest.raises(ResourceError, match="unknown section"):
            load_morph_rules(path)

    def test_duplicate_contraction_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("[CONTRACTIONS]\nit is\tit's\nit has\tit's\n", encoding="utf-8")
        with pytest.raises(ResourceError, match="mapped twice"):
            load_morph_rules(path)


class TestInflectVerb:
    def test_suffix_rule_past_to_present(self, morph_rules):
        assert inflect_verb(morph_rules, "walked", "present") == "walks"

    def test_irregular_lookup(self, morph_rules):
        assert inflect_verb(morph_rules, "went", "present") == "goes"

    def test_already_in_target_tense(self, morph_rules):
        assert inflect_verb(morph_rules, "walks", "present") == "walks"

    def test_present_to_past_suffix(self, morph_rules):
        assert inflect_verb(morph_rules, "walks", "past") == "walked"

    def test_present_to_past_irregular(self, morph_rules):
        assert inflect_verb(morph_rules, "is", "past") == "was"

    def test_non_verb_unchanged(self, morph_rules):
        assert inflect_verb(morph_rules, "film", "present") == "film"

    def test_case_preserved(self, morph_rules):
        assert inflect_verb(morph_rules, "Went", "present") == "Goes"

    def test_invalid_tense_rejected(self, morph_rules):
        with pytest.raises(ValueError):
            inflect_verb(morph_rules, "walked", "future")

    @given(st.sampled_from([
        "walked", "walks", "went", "goes", "seemed", "seems", "stopped",
        "studied", "studies", "liked", "likes", "was", "is", "film", "good",
    ]), st.sampled_from(["past", "present"]))
    @settings(max_examples=60, deadline=None)
    def test_idempotent_for_fixed_target(self, token, target):
        rules = load_default_morph_rules()
        once = inflect_verb(rules, token, target)
        assert inflect_verb(rules, once, target) == once


class TestVerbCandidacy:
    def test_table_verbs_detected(self, morph_rules):
        for verb in ("is", "was", "seems", "went", "felt"):
            assert is_verb_candidate(morph_rules, verb)

    def test_ed_suffix_detected(self, morph_rules):
        assert is_verb_candidate(morph_rules, "wandered")

    def test_plain_nouns_not_detected(self, morph_rules):
        for word in ("film", "story", "good"):
            assert not is_verb_candidate(morph_rules, word)


def test_default_thesaurus_well_formed():
    thesaurus = load_default_thesaurus()
    assert len(thesaurus) >= 100
    for head, ranked in thesaurus.entries.items():
        assert head not in ranked
        assert len(set(ranked)) == len(ranked)
