"""Walkthrough: span annotations -> BIO labels -> a trained CRF tagger.

Builds a small synthetic post corpus in which the word "glyco" always opens
a three-token claim span, converts character spans to token labels, trains
the CRF, and scores the decoded labels on held-out posts.

Run with:  python demos/tagging_and_crf.py
"""

import random

from claimevid.corpus import split_train_val
from claimevid.crf import TrainConfig, encode_example, train, viterbi
from claimevid.features import build_feature_dict, pos_tag
from claimevid.tagging import (
    CLAIM_SCHEME,
    CharSpan,
    LabelSequence,
    bio_to_spans,
    spans_to_bio,
    token_prf,
    tokenize,
)

rng = random.Random(7)
VOCAB = "pain sleep flare dose years daily mild worse rash meds tea gp".split()


def make_post():
    words = [rng.choice(VOCAB) for _ in range(rng.randint(7, 12))]
    start_word = rng.randint(0, len(words) - 3)
    words[start_word] = "glyco"
    text = " ".join(words)
    tokens = tokenize(text)
    span = CharSpan(tokens[start_word].start, tokens[start_word + 2].end)
    return text, span


# 1. spans to BIO and back
text, span = make_post()
tokens = tokenize(text)
labels = spans_to_bio(tokens, [span], CLAIM_SCHEME)
print("post:   ", text)
print("tokens: ", [t.text for t in tokens])
print("pos:    ", pos_tag(tokens))
print("labels: ", list(labels.labels))
recovered = bio_to_spans(tokens, labels)
print("round-trip span:", text[recovered[0][0].start : recovered[0][0].end])

# 2. build a labeled corpus and train
examples = []
for _ in range(300):
    text, span = make_post()
    toks = tokenize(text)
    seq = spans_to_bio(toks, [span], CLAIM_SCHEME)
    examples.append(([t.text for t in toks], list(seq.labels)))

train_ex, val_ex = split_train_val(examples, 0.9, seed=0)
fdict = build_feature_dict([(toks, None) for toks, _ in train_ex])
print(f"\nfeature dictionary holds {len(fdict)} features")

config = TrainConfig(
    batch_size=8, max_epochs=10, patience=10, learning_rate=0.2, seed=0
)
model = train(
    [encode_example(t, l, CLAIM_SCHEME, fdict) for t, l in train_ex],
    [encode_example(t, l, CLAIM_SCHEME, fdict) for t, l in val_ex],
    config,
    scheme=CLAIM_SCHEME,
    feature_dict=fdict,
    l2=1e-3,
)
print("validation NLL per epoch:",
      [round(v, 1) for v in model.history["val_nll"]])

# 3. decode and score the held-out posts
gold, pred = [], []
for toks, labs in val_ex:
    feats, _ = encode_example(toks, labs, CLAIM_SCHEME, fdict)
    gold.append(LabelSequence(CLAIM_SCHEME, tuple(labs)))
    pred.append(viterbi(model, feats))
report = token_prf(gold, pred)
print(f"\nheld-out token-level micro P/R/F1: "
      f"{report.precision:.3f}/{report.recall:.3f}/{report.f1:.3f}")
