"""Shared generators and independent oracles used across the test suite."""

import itertools
import math
import random

import numpy as np

from claimevid.crf import CRFModel, sequence_score
from claimevid.tagging import PIO_SCHEME, CharSpan, PIOCategory

WORDS = (
    "lupus pain years treatment flare dose sleep ibs fatigue rash meds "
    "doctor trial sub-Q q2w relief 12 daily worse better stopped started"
).split()
PUNCT = (".", ",", "!", "?")


def random_text(rng: random.Random, min_words: int = 1, max_words: int = 18) -> str:
    n = rng.randint(min_words, max_words)
    parts = []
    for _ in range(n):
        word = rng.choice(WORDS)
        if rng.random() < 0.2:
            word += rng.choice(PUNCT)
        parts.append(word)
    return " ".join(parts)


def random_token_spans(rng: random.Random, tokens, scheme, max_spans: int = 3):
    """Non-overlapping token-aligned spans with categories under PIO scheme."""
    used = set()
    spans = []
    for _ in range(rng.randint(0, max_spans)):
        for _attempt in range(5):
            length = rng.randint(1, 3)
            if len(tokens) < length:
                continue
            start = rng.randrange(len(tokens) - length + 1)
            indices = set(range(start, start + length))
            if indices & used:
                continue
            used |= indices
            span = CharSpan(tokens[start].start, tokens[start + length - 1].end)
            cat = rng.choice(list(PIOCategory)) if scheme is PIO_SCHEME else None
            spans.append((span, cat))
            break
    return sorted(spans, key=lambda p: p[0])


def random_crf_instance(rng: np.random.Generator, t_len: int, n_labels: int,
                        n_features: int = 6, scale: float = 1.0):
    """A CRF model with random weights plus random active features per token."""
    from claimevid.features import FeatureDictionary
    from claimevid.tagging import LabelScheme

    scheme = LabelScheme("toy", tuple(f"L{i}" for i in range(n_labels)))
    fdict = FeatureDictionary()
    for i in range(n_features):
        fdict.add(f"f{i}")
    fdict.freeze()
    model = CRFModel(scheme, fdict, l2=0.0)
    model.W[...] = rng.normal(0, scale, model.W.shape)
    model.T[...] = rng.normal(0, scale, model.T.shape)
    model.start[...] = rng.normal(0, scale, model.start.shape)
    model.end[...] = rng.normal(0, scale, model.end.shape)
    feats = []
    for _ in range(t_len):
        n_active = rng.integers(0, n_features + 1)
        ids = rng.choice(n_features, size=n_active, replace=False)
        feats.append(np.sort(ids).astype(np.intp))
    return model, feats


def enumerate_labelings(model: CRFModel, feats):
    """All (labeling, score) pairs; the exhaustive oracle."""
    n_labels = model.n_labels
    out = []
    for labels in itertools.product(range(n_labels), repeat=len(feats)):
        out.append((labels, sequence_score(model, feats, list(labels))))
    return out


def brute_logZ(model: CRFModel, feats) -> float:
    scores = np.array([s for _, s in enumerate_labelings(model, feats)])
    m = scores.max()
    return float(m + math.log(np.exp(scores - m).sum()))


def brute_argmax(model: CRFModel, feats):
    best_labels, best_score = None, -math.inf
    for labels, score in enumerate_labelings(model, feats):
        if score > best_score:
            best_labels, best_score = labels, score
    return list(best_labels), best_score


def brute_marginals(model: CRFModel, feats):
    """Node and edge marginals from full enumeration."""
    pairs = enumerate_labelings(model, feats)
    scores = np.array([s for _, s in pairs])
    m = scores.max()
    probs = np.exp(scores - m)
    probs /= probs.sum()
    t_len, n_labels = len(feats), model.n_labels
    node = np.zeros((t_len, n_labels))
    edge = np.zeros((max(t_len - 1, 0), n_labels, n_labels))
    for (labels, _), p in zip(pairs, probs):
        for t, y in enumerate(labels):
            node[t, y] += p
        for t in range(1, t_len):
            edge[t - 1, labels[t - 1], labels[t]] += p
    return node, edge


def fd_gradient(model: CRFModel, batch, h: float = 1e-4) -> dict:
    """Central finite differences of the batch loss, parameter by parameter."""
    from claimevid.crf import nll_gradient

    grads = {}
    for key, param in model.weights().items():
        g = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + h
            loss_plus, _ = nll_gradient(model, batch)
            param[idx] = orig - h
            loss_minus, _ = nll_gradient(model, batch)
            param[idx] = orig
            g[idx] = (loss_plus - loss_minus) / (2 * h)
        grads[key] = g
    return grads


def bm25_oracle(docs_terms: dict, query_terms, k1: float, b: float) -> dict:
    """Hand-arithmetic BM25 over term lists, independent of the index code."""
    n_docs = len(docs_terms)
    avgdl = sum(len(t) for t in docs_terms.values()) / n_docs
    scores = {}
    for doc, terms in docs_terms.items():
        s = 0.0
        for q in query_terms:
            n_q = sum(1 for t in docs_terms.values() if q in t)
            idf = math.log((n_docs - n_q + 0.5) / (n_q + 0.5) + 1.0)
            tf = terms.count(q)
            if tf:
                s += idf * tf * (k1 + 1) / (
                    tf + k1 * (1 - b + b * len(terms) / avgdl)
                )
        scores[doc] = s
    return scores


def full_scan_ranking(ids, matrix, query, metric: str):
    """Second implementation of exact dense scoring, plain Python loops."""
    scored = []
    for vec_id, row in zip(ids, matrix):
        s = sum(a * b for a, b in zip(row, query))
        if metric == "cosine":
            nq = math.sqrt(sum(a * a for a in query))
            nr = math.sqrt(sum(a * a for a in row))
            s = s / (nq * nr) if nq * nr > 0 else 0.0
        scored.append((vec_id, s))
    return [vec_id for vec_id, _ in sorted(scored, key=lambda p: (-p[1], p[0]))]
