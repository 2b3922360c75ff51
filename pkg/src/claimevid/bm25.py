"""Inverted index and Okapi BM25 ranking over evidence abstracts.

Two query-construction modes exist: the claim text alone, or the claim
followed by its population, intervention, and outcome elements in that
fixed order. Documents are indexed over the analyzed concatenation of
title and abstract; zero-score documents never appear in results and
score ties break toward the ascending document id.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import EvidenceAbstract
from .tagging import tokenize

CLAIM_ONLY = "claim"
CLAIM_PLUS_PIO = "claim_pio"
QUERY_MODES = (CLAIM_ONLY, CLAIM_PLUS_PIO)

INDEX_FORMAT_VERSION = 1


@dataclass
class Query:
    query_id: str
    text: str
    mode: str


@dataclass
class RankedList:
    """Descending-score (doc id, score) pairs for one query."""

    query_id: str
    items: list[tuple[str, float]] = field(default_factory=list)
    empty_query: bool = False

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.items]


def analyze(text: str) -> list[str]:
    """Lowercased word terms; pure-punctuation tokens dropped, no stemming."""
    return [
        t.text.lower()
        for t in tokenize(text)
        if any(ch.isalnum() for ch in t.text)
    ]


class BM25Index:
    def __init__(self, k1: float = 1.5, b: float = 0.75) -> None:
        self.k1 = float(k1)
        self.b = float(b)
        self.postings: dict[str, dict[str, int]] = {}
        self.doc_lengths: dict[str, int] = {}

    @property
    def n_docs(self) -> int:
        return len(self.doc_lengths)

    @property
    def avgdl(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def add(self, doc_id: str, text: str) -> None:
        if doc_id in self.doc_lengths:
            raise ValueError(f"duplicate doc_id {doc_id!r}")
        terms = analyze(text)
        self.doc_lengths[doc_id] = len(terms)
        for term, tf in Counter(terms).items():
            self.postings.setdefault(term, {})[doc_id] = tf

    def idf(self, term: str) -> float:
        n_t = len(self.postings.get(term, ()))
        return math.log((self.n_docs - n_t + 0.5) / (n_t + 0.5) + 1.0)


def build_index(
    abstracts: list[EvidenceAbstract], k1: float = 1.5, b: float = 0.75
) -> BM25Index:
    """Index title + abstract of each document."""
    index = BM25Index(k1, b)
    for doc in abstracts:
        text = f"{doc.title} {doc.abstract}" if doc.title else doc.abstract
        index.add(doc.doc_id, text)
    return index


def make_query(
    claim: str,
    populations: list[str],
    interventions: list[str],
    outcomes: list[str],
    mode: str,
    query_id: str = "",
) -> Query:
    """Claim-only text, or claim then P, I, O elements joined by single spaces."""
    if not claim:
        raise ValueError("claim text must be non-empty")
    if mode not in QUERY_MODES:
        raise ValueError(f"unknown query mode {mode!r}; expected one of {QUERY_MODES}")
    if mode == CLAIM_ONLY:
        text = claim
    else:
        parts = [claim] + list(populations) + list(interventions) + list(outcomes)
        text = " ".join(p for p in parts if p)
    return Query(query_id, text, mode)


def search(index: BM25Index, query: Query, k: int) -> RankedList:
    """Top-k documents by the Okapi BM25 score.

    score(D, Q) = sum over query terms q of
        idf(q) * tf(q, D) * (k1 + 1) / (tf(q, D) + k1 * (1 - b + b * |D| / avgdl))
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    terms = analyze(query.text)
    if not terms:
        return RankedList(query.query_id, [], empty_query=True)
    k1, b = index.k1, index.b
    avgdl = index.avgdl
    scores: dict[str, float] = {}
    for term, qtf in Counter(terms).items():
        posting = index.postings.get(term)
        if not posting:
            continue
        idf = index.idf(term)
        for doc_id, tf in posting.items():
            norm = tf + k1 * (1.0 - b + b * index.doc_lengths[doc_id] / avgdl)
            contribution = idf * tf * (k1 + 1.0) / norm
            scores[doc_id] = scores.get(doc_id, 0.0) + qtf * contribution
    ranked = sorted(
        ((doc_id, s) for doc_id, s in scores.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return RankedList(query.query_id, ranked[:k])


def save_index(index: BM25Index, path) -> None:
    payload = {
        "version": INDEX_FORMAT_VERSION,
        "k1": index.k1,
        "b": index.b,
        "doc_lengths": index.doc_lengths,
        "postings": {t: sorted(p.items()) for t, p in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)


def load_index(path) -> BM25Index:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != INDEX_FORMAT_VERSION:
        raise ValueError(f"unsupported index version: {payload.get('version')}")
    index = BM25Index(payload["k1"], payload["b"])
    index.doc_lengths = {d: int(n) for d, n in payload["doc_lengths"].items()}
    index.postings = {
        term: {doc: int(tf) for doc, tf in entries}
        for term, entries in payload["postings"].items()
    }
    return index


def write_run_file(path, runs: list[RankedList]) -> None:
    """query_id TAB doc_id TAB rank TAB score, rank starting at 1."""
    with open(path, "w", encoding="utf-8") as fh:
        for run in runs:
            for rank, (doc_id, score) in enumerate(run.items, 1):
                fh.write(f"{run.query_id}\t{doc_id}\t{rank}\t{score!r}\n")


def read_run_file(path) -> list[RankedList]:
    runs: list[RankedList] = []
    current: RankedList | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns")
            query_id, doc_id, rank, score = cols
            if current is None or current.query_id != query_id:
                current = RankedList(query_id)
                runs.append(current)
            if int(rank) != len(current.items) + 1:
                raise ValueError(f"{path}:{lineno}: ranks must be consecutive")
            current.items.append((doc_id, float(score)))
    return runs
