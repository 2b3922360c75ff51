import random

import pytest

from claimevid.features import (
    COARSE_TAGS,
    FeatureDictionary,
    build_feature_dict,
    extract_features,
    parse_feature,
    pos_tag,
    sequence_features,
)
from claimevid.tagging import tokenize
from helpers import random_text

TABLE_CONTEXT = ". I had lupus erythematosus for 12 years the pain was bad . We".split()


class TestPosTag:
    def test_digit_rule(self):
        assert pos_tag(["12"]) == ["NUM"]
        assert pos_tag(["3.5"]) == ["NUM"]

    def test_punctuation_rule(self):
        assert pos_tag(["."]) == ["PUNCT"]
        assert pos_tag(["!?"]) == ["PUNCT"]

    def test_lexicon_and_suffix_rules(self):
        assert pos_tag(["had", "lupus", "quickly"]) == ["VERB", "NOUN", "ADV"]

    def test_tags_stay_in_closed_set(self):
        rng = random.Random(2)
        for _ in range(50):
            tokens = tokenize(random_text(rng, 1, 20))
            assert all(tag in COARSE_TAGS for tag in pos_tag(tokens))

    def test_provided_tags_pass_through(self):
        assert pos_tag(["a", "b"], ["X1", "X2"]) == ["X1", "X2"]

    def test_provided_length_mismatch(self):
        with pytest.raises(ValueError, match="POS"):
            pos_tag(["a", "b"], ["X1"])


class TestExtractFeatures:
    def test_single_token_all_sentinels(self):
        feats = extract_features(["alone"], ["NOUN"], 0)
        sentinels = [f for f in feats if f.startswith(("BOS@", "EOS@"))]
        assert sorted(sentinels) == sorted(
            ["BOS@-3", "BOS@-2", "BOS@-1", "EOS@+1", "EOS@+2", "EOS@+3"]
        )

    def test_orthographic_predicates(self):
        feats = extract_features(["IBS"], ["NOUN"], 0)
        assert "is_upper=1" in feats
        assert "is_alnum=1" in feats
        assert "is_title=0" in feats
        assert "is_numeric=0" in feats

    def test_table_context_window(self):
        pos = pos_tag(TABLE_CONTEXT)
        i = TABLE_CONTEXT.index("12")
        feats = extract_features(TABLE_CONTEXT, pos, i)
        assert "is_numeric=1" in feats
        assert "word@-1=for" in feats
        assert "word@+1=years" in feats
        assert "word=12" in feats
        assert "pos=NUM" in feats

    def test_interior_position_emits_eighteen_features(self):
        pos = pos_tag(TABLE_CONTEXT)
        feats = extract_features(TABLE_CONTEXT, pos, 5)
        assert len(feats) == 18  # 6 token features + 6 word@d + 6 pos@d

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            extract_features(["a"], ["NOUN"], 1)

    def test_every_feature_parses(self):
        rng = random.Random(4)
        for _ in range(30):
            tokens = tokenize(random_text(rng, 1, 12))
            for feats in sequence_features(tokens):
                for f in feats:
                    name, value = parse_feature(f)
                    assert name and value

    def test_shift_equivariance(self):
        # prepending tokens leaves fully-interior positions untouched
        rng = random.Random(8)
        for _ in range(20):
            base = random_text(rng, 8, 14).split()
            prefix = random_text(rng, 1, 4).split()
            i = rng.randint(3, len(base) - 4)
            before = extract_features(base, pos_tag(base), i)
            shifted = prefix + base
            after = extract_features(
                shifted, pos_tag(shifted), i + len(prefix)
            )
            assert before == after


class TestFeatureDictionary:
    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_feature_dict([])

    def test_empty_sequences_give_empty_dict(self):
        fdict = build_feature_dict([([], None)])
        assert len(fdict) == 0
        assert fdict.frozen

    def test_deterministic_ids(self):
        corpus = [(tokenize("lupus pain"), None), (tokenize("pain was bad"), None)]
        a = build_feature_dict(corpus)
        b = build_feature_dict(corpus)
        assert [a.feature(i) for i in range(len(a))] == [
            b.feature(i) for i in range(len(b))
        ]

    def test_size_matches_set_oracle(self):
        corpus = [(tokenize("lupus pain bad"), None), (tokenize("lupus flare"), None)]
        fdict = build_feature_dict(corpus)
        # independent oracle: distinct feature strings via a set
        everything = set()
        for tokens, pos in corpus:
            for feats in sequence_features(tokens, pos):
                everything.update(feats)
        assert len(fdict) == len(everything)

    def test_frozen_rejects_new_features(self):
        fdict = build_feature_dict([(tokenize("a b"), None)])
        with pytest.raises(ValueError, match="frozen"):
            fdict.add("word=never-seen")

    def test_encode_drops_unknown_silently(self):
        fdict = build_feature_dict([(tokenize("a b"), None)])
        known = fdict.feature(0)
        ids = fdict.encode([known, "word=unknown-token", known])
        assert ids == [0, 0]

    def test_ids_contiguous_first_seen(self):
        fdict = FeatureDictionary()
        assert fdict.add("x") == 0
        assert fdict.add("y") == 1
        assert fdict.add("x") == 0

    def test_save_load_round_trip(self, tmp_path):
        fdict = build_feature_dict([(tokenize("lupus pain was bad"), None)])
        path = tmp_path / "features.jsonl"
        fdict.save(path)
        loaded = FeatureDictionary.load(path)
        assert len(loaded) == len(fdict)
        assert loaded.content_hash() == fdict.content_hash()
        assert loaded.frozen
