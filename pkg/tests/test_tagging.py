import random

import pytest

from claimevid.tagging import (
    CLAIM_SCHEME,
    PIO_SCHEME,
    CharSpan,
    LabelSequence,
    PIOCategory,
    TaggedSequence,
    bio_to_spans,
    read_conll,
    repair_labels,
    spans_to_bio,
    token_prf,
    tokenize,
    write_conll,
)
from helpers import random_text, random_token_spans

CLAIM_EXCERPT = ". I had lupus erythematosus for 12 years the pain was bad . We"
PIO_EXCERPT = ". I had lupus erythematos , 1 year the pain was bad . We"


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_trailing_period_detached(self):
        assert [t.text for t in tokenize("I had lupus.")] == ["I", "had", "lupus", "."]

    def test_leading_period_is_own_token(self):
        assert [t.text for t in tokenize(". I had")] == [".", "I", "had"]

    def test_hyphen_stays_word_internal(self):
        assert [t.text for t in tokenize("on sub-Q meds")] == ["on", "sub-Q", "meds"]

    def test_multiple_punctuation_chars_split_individually(self):
        assert [t.text for t in tokenize("bad!!")] == ["bad", "!", "!"]
        assert [t.text for t in tokenize("(pain)")] == ["(", "pain", ")"]

    def test_offsets_recover_surface(self):
        text = "I had (bad) lupus flares, weekly!"
        for tok in tokenize(text):
            assert text[tok.start : tok.end] == tok.text

    def test_tokens_ordered_and_nonoverlapping(self):
        toks = tokenize(random_text(random.Random(7), 5, 30))
        for a, b in zip(toks, toks[1:]):
            assert a.end <= b.start


class TestSpansToBio:
    def test_claim_excerpt(self):
        tokens = tokenize(CLAIM_EXCERPT)
        start = CLAIM_EXCERPT.index("I had")
        end = CLAIM_EXCERPT.rindex(".") + 1
        seq = spans_to_bio(tokens, [CharSpan(start, end)], CLAIM_SCHEME)
        assert list(seq.labels) == ["O", "B"] + ["I"] * 11 + ["O"]

    def test_pio_excerpt(self):
        tokens = tokenize(PIO_EXCERPT)
        pop = CharSpan(PIO_EXCERPT.index("lupus"), PIO_EXCERPT.index(",") - 1)
        out = CharSpan(PIO_EXCERPT.index("pain"), PIO_EXCERPT.index("pain") + 4)
        seq = spans_to_bio(
            tokens,
            [(pop, PIOCategory.POPULATION), (out, PIOCategory.OUTCOME)],
            PIO_SCHEME,
        )
        expected = ["O", "O", "O", "B-Pop", "I-Pop", "O", "O", "O", "O",
                    "B-Out", "O", "O", "O", "O"]
        assert list(seq.labels) == expected

    def test_no_spans_all_outside(self):
        tokens = tokenize("nothing to see")
        seq = spans_to_bio(tokens, [], CLAIM_SCHEME)
        assert set(seq.labels) == {"O"}

    def test_overlapping_spans_rejected(self):
        tokens = tokenize("a b c d")
        with pytest.raises(ValueError, match="overlap"):
            spans_to_bio(
                tokens, [CharSpan(0, 3), CharSpan(2, 5)], CLAIM_SCHEME
            )

    def test_partial_token_coverage_claims_whole_token(self):
        text = "taking methotrexate weekly"
        tokens = tokenize(text)
        span = CharSpan(text.index("metho"), text.index("metho") + 5)
        seq = spans_to_bio(tokens, [(span, PIOCategory.INTERVENTION)], PIO_SCHEME)
        assert list(seq.labels) == ["O", "B-Int", "O"]


class TestBioToSpans:
    def test_all_outside(self):
        tokens = tokenize("a b c")
        assert bio_to_spans(tokens, LabelSequence(CLAIM_SCHEME, ("O",) * 3)) == []

    def test_pio_excerpt_labels_to_spans(self):
        tokens = tokenize(PIO_EXCERPT)
        labels = LabelSequence(
            PIO_SCHEME,
            ("O", "O", "O", "B-Pop", "I-Pop", "O", "O", "O", "O",
             "B-Out", "O", "O", "O", "O"),
        )
        spans = bio_to_spans(tokens, labels)
        assert len(spans) == 2
        (s1, c1), (s2, c2) = spans
        assert PIO_EXCERPT[s1.start : s1.end] == "lupus erythematos"
        assert c1 is PIOCategory.POPULATION
        assert PIO_EXCERPT[s2.start : s2.end] == "pain"
        assert c2 is PIOCategory.OUTCOME

    def test_invalid_sequence_rejected(self):
        tokens = tokenize("a b")
        with pytest.raises(ValueError, match="repair"):
            bio_to_spans(tokens, LabelSequence(CLAIM_SCHEME, ("O", "I")))

    def test_round_trip_random(self):
        rng = random.Random(11)
        for _ in range(100):
            for scheme in (CLAIM_SCHEME, PIO_SCHEME):
                tokens = tokenize(random_text(rng))
                spans = random_token_spans(rng, tokens, scheme)
                seq = spans_to_bio(tokens, spans, scheme)
                assert sorted(bio_to_spans(tokens, seq)) == sorted(
                    spans, key=lambda p: p[0]
                )


class TestRepairLabels:
    def test_orphan_inside_becomes_begin(self):
        seq = LabelSequence(CLAIM_SCHEME, ("O", "I"))
        assert list(repair_labels(seq).labels) == ["O", "B"]

    def test_category_mismatch_becomes_begin(self):
        seq = LabelSequence(PIO_SCHEME, ("I-Pop", "I-Out"))
        assert list(repair_labels(seq).labels) == ["B-Pop", "B-Out"]

    def test_valid_sequence_unchanged(self):
        seq = LabelSequence(CLAIM_SCHEME, ("O", "B", "I", "O", "B"))
        assert repair_labels(seq).labels == seq.labels

    def test_idempotent_and_valid_on_random_sequences(self):
        rng = random.Random(3)
        for _ in range(200):
            scheme = rng.choice((CLAIM_SCHEME, PIO_SCHEME))
            labels = tuple(
                rng.choice(scheme.labels) for _ in range(rng.randint(1, 12))
            )
            once = repair_labels(LabelSequence(scheme, labels))
            assert once.is_valid()
            assert repair_labels(once).labels == once.labels


class TestTokenPRF:
    def test_perfect_prediction(self):
        gold = [LabelSequence(CLAIM_SCHEME, ("B", "I", "O"))]
        report = token_prf(gold, gold)
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_hand_counted_example(self):
        gold = [LabelSequence(CLAIM_SCHEME, ("B", "I", "O"))]
        pred = [LabelSequence(CLAIM_SCHEME, ("B", "O", "O"))]
        report = token_prf(gold, pred, "micro")
        assert report.precision == 1.0
        assert report.recall == 0.5
        assert report.f1 == pytest.approx(2 / 3)

    def test_all_outside_prediction_scores_zero(self):
        gold = [LabelSequence(CLAIM_SCHEME, ("B", "I", "O"))]
        pred = [LabelSequence(CLAIM_SCHEME, ("O", "O", "O"))]
        report = token_prf(gold, pred)
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    def test_length_mismatch_names_sequence(self):
        gold = [
            LabelSequence(CLAIM_SCHEME, ("O",)),
            LabelSequence(CLAIM_SCHEME, ("O", "B")),
        ]
        pred = [
            LabelSequence(CLAIM_SCHEME, ("O",)),
            LabelSequence(CLAIM_SCHEME, ("O",)),
        ]
        with pytest.raises(ValueError, match="sequence 1"):
            token_prf(gold, pred)

    def test_macro_averages_per_label(self):
        gold = [LabelSequence(PIO_SCHEME, ("B-Pop", "B-Out"))]
        pred = [LabelSequence(PIO_SCHEME, ("B-Pop", "O"))]
        report = token_prf(gold, pred, "macro")
        # B-Pop scores 1/1/1, B-Out scores 0/0/0
        assert report.precision == 0.5
        assert report.recall == 0.5
        assert report.f1 == 0.5
        assert report.per_label["B-Pop"]["f1"] == 1.0

    def test_identity_is_perfect_on_random_gold(self):
        rng = random.Random(5)
        for _ in range(50):
            scheme = rng.choice((CLAIM_SCHEME, PIO_SCHEME))
            labels = tuple(
                rng.choice(scheme.labels) for _ in range(rng.randint(1, 10))
            )
            gold = [repair_labels(LabelSequence(scheme, labels))]
            if all(lab == "O" for lab in gold[0].labels):
                continue
            report = token_prf(gold, gold)
            assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)


class TestConll:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "tags.tsv"
        seqs = [
            TaggedSequence(["I", "had", "lupus", "."], ["O", "B", "I", "I"]),
            TaggedSequence(["pain"], ["B"]),
        ]
        write_conll(path, seqs)
        back = read_conll(path)
        assert [s.tokens for s in back] == [s.tokens for s in seqs]
        assert [s.labels for s in back] == [s.labels for s in seqs]

    def test_three_column_pos_round_trip(self, tmp_path):
        path = tmp_path / "tags.tsv"
        seqs = [TaggedSequence(["a", "b"], ["O", "B"], ["DET", "NOUN"])]
        write_conll(path, seqs)
        back = read_conll(path)
        assert back[0].pos == ["DET", "NOUN"]
        assert back[0].labels == ["O", "B"]
