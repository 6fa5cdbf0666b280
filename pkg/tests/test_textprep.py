from __future__ import annotations

import pytest

from unitloc.locsynth import ParallelSentence, find_unit_mentions
from unitloc.textprep import (
    SPECIAL_TOKENS,
    CorpusTooSmall,
    FactorTag,
    SpanOverlap,
    SubwordModel,
    annotate_factors,
    apply_subwords,
    apply_subwords_aligned,
    detokenize_subwords,
    expand_factors,
    learn_subwords,
    read_factor_file,
    write_factor_file,
)


class TestLearnSubwords:
    def test_single_forced_merge(self):
        # base vocab: 4 specials + 2 variants each of a, b and the 11 protected
        # chars; one extra slot forces exactly one merge: (a, b</w>) -> "ab"
        corpus = ["ab ab ab ab"]
        base = 4 + 2 * (2 + 11)
        model = learn_subwords(corpus, vocab_size=base + 1)
        assert model.merges == [("a", "b▁")]
        assert len(model.vocab) == base + 1
        assert apply_subwords(["ab"], model) == ["ab"]

    def test_digits_never_merge(self):
        corpus = ["5 2 1 miles", "5 2 1 km", "3 . 8 miles"] * 50
        model = learn_subwords(corpus, vocab_size=60)
        for a, b in model.merges:
            joined = (a + b).replace("▁", "")
            assert not any(ch in "0123456789." for ch in joined)
        assert apply_subwords(["5", "2", "1"], model) == ["5", "2", "1"]

    def test_exact_vocab_size(self):
        corpus = ["the cat sat on the mat", "the dog sat on the log"] * 20
        model = learn_subwords(corpus, vocab_size=80)
        assert len(model.vocab) == 80
        assert sorted(model.vocab.values()) == list(range(80))

    def test_reserved_padding_when_pairs_exhaust(self):
        corpus = ["ab ab"]
        model = learn_subwords(corpus, vocab_size=60)
        assert len(model.vocab) == 60
        assert any(tok.startswith("<reserved_") for tok in model.vocab)

    def test_corpus_too_small(self):
        corpus = ["the quick brown fox jumps over the lazy dog"]
        with pytest.raises(CorpusTooSmall):
            learn_subwords(corpus, vocab_size=10)

    def test_specials_reserved(self):
        model = learn_subwords(["a b a b"], vocab_size=40)
        for i, tok in enumerate(SPECIAL_TOKENS):
            assert model.vocab[tok] == i


class TestApplySubwords:
    def corpus_model(self):
        corpus = ["the venue is within 3 . 8 miles from the center"] * 30 + ["miles and miles of road"] * 10
        return learn_subwords(corpus, vocab_size=120)

    def test_in_vocab_token_unchanged(self):
        model = self.corpus_model()
        assert apply_subwords(["miles"], model) == ["miles"]

    def test_digit_protection_in_application(self):
        model = self.corpus_model()
        pieces = apply_subwords("5 2 1 miles".split(), model)
        assert pieces[:3] == ["5", "2", "1"]

    def test_round_trip(self):
        model = self.corpus_model()
        tokens = "the venue is within 3 . 8 miles from the center".split()
        assert detokenize_subwords(apply_subwords(tokens, model)) == tokens

    def test_unknown_char_maps_to_unk(self):
        model = self.corpus_model()
        pieces = apply_subwords(["naïve"], model)
        assert "<unk>" in pieces

    def test_deterministic(self):
        model = self.corpus_model()
        tokens = "within miles of the venue center".split()
        assert apply_subwords(tokens, model) == apply_subwords(tokens, model)

    def test_multidigit_word_splits_per_digit(self):
        model = self.corpus_model()
        pieces = apply_subwords(["1990"], model)
        assert pieces == ["1@@", "9@@", "9@@", "0"]


class TestModelPersistence:
    def test_save_load_round_trip(self, tmp_path):
        corpus = ["the cat sat on the mat"] * 20
        model = learn_subwords(corpus, vocab_size=60)
        path = tmp_path / "subwords.txt"
        model.save(path)
        loaded = SubwordModel.load(path)
        assert loaded.merges == model.merges
        assert loaded.vocab == model.vocab
        tokens = "the cat sat".split()
        assert apply_subwords(tokens, loaded) == apply_subwords(tokens, model)


class TestAnnotateFactors:
    def test_distance_sentence(self, lexicon):
        tokens = "The venue is within 3 . 8 miles from the city".split()
        sentence = ParallelSentence(tuple(tokens), ("x",))
        matches = [m for m in find_unit_mentions(sentence, lexicon)]
        tags = annotate_factors(tokens, matches)
        expected = [FactorTag.OTHER] * 4 + [FactorTag.DIST_DIGIT, FactorTag.OTHER, FactorTag.DIST_DIGIT] + [FactorTag.OTHER] * 4
        assert tags == expected

    def test_temperature_digits(self, lexicon):
        tokens = "5 2 1 °F".split()
        sentence = ParallelSentence(tuple(tokens), ("x",))
        tags = annotate_factors(tokens, find_unit_mentions(sentence, lexicon))
        assert tags == [FactorTag.TEMP_DIGIT] * 3 + [FactorTag.OTHER]

    def test_no_matches_all_other(self):
        tags = annotate_factors("no numbers here".split(), [])
        assert tags == [FactorTag.OTHER] * 3

    def test_length_always_matches(self, lexicon):
        tokens = "we drove 5 2 1 miles and 9 5 °F followed".split()
        sentence = ParallelSentence(tuple(tokens), ("x",))
        tags = annotate_factors(tokens, find_unit_mentions(sentence, lexicon))
        assert len(tags) == len(tokens)
        assert tags[2:5] == [FactorTag.DIST_DIGIT] * 3
        assert tags[7:9] == [FactorTag.TEMP_DIGIT] * 2

    def test_overlap_raises(self, lexicon):
        from unitloc.locsynth import Side, UnitMatch
        from unitloc.quantity import Precision, Quantity, TokenSpan, UnitKind
        from decimal import Decimal

        q = Quantity(Decimal(5), UnitKind.MILE, Precision.INTEGER)
        matches = [
            UnitMatch(Side.SOURCE, TokenSpan(0, 3), q),
            UnitMatch(Side.SOURCE, TokenSpan(2, 4), q),
        ]
        with pytest.raises(SpanOverlap):
            annotate_factors(["5", "2", "1", "miles"], matches)


class TestExpandFactors:
    def test_pieces_inherit_tags(self, lexicon):
        corpus = ["the venue is 5 miles away"] * 30
        model = learn_subwords(corpus, vocab_size=100)
        tokens = "the venue is 5 miles away".split()
        sentence = ParallelSentence(tuple(tokens), ("x",))
        tags = annotate_factors(tokens, find_unit_mentions(sentence, lexicon))
        aligned = apply_subwords_aligned(tokens, model)
        expanded = expand_factors(tags, aligned)
        assert len(expanded) == sum(len(p) for p in aligned)
        flat = apply_subwords(tokens, model)
        assert len(expanded) == len(flat)
        digit_positions = [i for i, p in enumerate(flat) if p == "5"]
        assert all(expanded[i] is FactorTag.DIST_DIGIT for i in digit_positions)

    def test_factor_file_round_trip(self, tmp_path):
        rows = [[FactorTag.OTHER, FactorTag.DIST_DIGIT], [FactorTag.TEMP_DIGIT]]
        path = tmp_path / "factors.txt"
        write_factor_file(rows, path)
        assert read_factor_file(path) == rows
