"""Exact top-k search over precomputed dense vectors and training-pair export.

Embeddings are produced externally; this module scores every stored vector
against a query vector (no approximation) and builds the positive/negative
training pairs a dense retriever needs: the positive is the aligned
abstract, negatives come only from abstracts aligned to claims whose PIO
element sets differ from the query claim's.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .bm25 import CLAIM_PLUS_PIO, RankedList, make_query
from .corpus import ClaimRecord, EvidenceAbstract

METRICS = ("dot", "cosine")

DEFAULT_N_NEGATIVES = 7


@dataclass
class VectorStore:
    ids: list[str]
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.ids)


def load_vectors(path) -> VectorStore:
    """Read JSONL {"id", "vec": [...]} lines; dimension fixed by the first line."""
    ids: list[str] = []
    seen: set[str] = set()
    rows: list[list[float]] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            vec = [float(x) for x in obj["vec"]]
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(
                    f"{path}:{lineno}: vector has dimension {len(vec)}, expected {dim}"
                )
            if not all(math.isfinite(x) for x in vec):
                raise ValueError(f"{path}:{lineno}: non-finite vector component")
            vec_id = str(obj["id"])
            if vec_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate id {vec_id!r}")
            seen.add(vec_id)
            ids.append(vec_id)
            rows.append(vec)
    matrix = np.asarray(rows, dtype=float) if rows else np.zeros((0, 0))
    return VectorStore(ids, matrix)


def dump_vectors(store: VectorStore, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for vec_id, row in zip(store.ids, store.matrix):
            fh.write(json.dumps({"id": vec_id, "vec": list(row)}) + "\n")


def top_k(
    store: VectorStore,
    query_vec,
    k: int,
    metric: str = "dot",
    query_id: str = "",
) -> RankedList:
    """Exact scoring of every stored vector; ties break by ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    q = np.asarray(query_vec, dtype=float)
    if q.shape != (store.dim,):
        raise ValueError(
            f"query has dimension {q.shape}, store has dimension {store.dim}"
        )
    scores = store.matrix @ q
    if metric == "cosine":
        q_norm = float(np.linalg.norm(q))
        doc_norms = np.linalg.norm(store.matrix, axis=1)
        denom = q_norm * doc_norms
        # zero-norm vectors get similarity 0 rather than a division error
        scores = np.divide(scores, denom, out=np.zeros_like(scores), where=denom > 0)
    ranked = sorted(
        zip(store.ids, scores.tolist()), key=lambda pair: (-pair[1], pair[0])
    )
    return RankedList(query_id, ranked[:k])


@dataclass
class TrainingPair:
    query: str
    positive_doc_id: str
    negative_doc_ids: list[str] = field(default_factory=list)
    claim_id: str = ""
    pool_exhausted: bool = False


def _fold_elements(elements: list[str]) -> tuple[str, ...]:
    return tuple(sorted({e.strip().casefold() for e in elements if e.strip()}))


def pio_key(
    populations: list[str], interventions: list[str], outcomes: list[str]
) -> tuple:
    """Canonical PIO-set identity: case-folded, trimmed, order-insensitive."""
    return (
        _fold_elements(populations),
        _fold_elements(interventions),
        _fold_elements(outcomes),
    )


def build_training_pairs(
    claims: list[ClaimRecord],
    abstracts: list[EvidenceAbstract],
    n_negatives: int = DEFAULT_N_NEGATIVES,
    seed: int = 0,
    query_mode: str = CLAIM_PLUS_PIO,
) -> list[TrainingPair]:
    """One pair per claim: aligned abstract as positive, sampled negatives.

    The negative pool for a claim holds every abstract aligned to at least
    one claim yet never to a claim sharing this claim's PIO set. When the
    pool is smaller than n_negatives the whole pool is used and the pair is
    flagged pool_exhausted.
    """
    if n_negatives < 1:
        raise ValueError(f"n_negatives must be >= 1, got {n_negatives}")
    doc_ids = {a.doc_id for a in abstracts}
    aligned_keys: dict[str, set[tuple]] = {}
    for rec in claims:
        if rec.evidence_doc_id not in doc_ids:
            raise ValueError(
                f"claim {rec.claim_id!r}: evidence_doc_id "
                f"{rec.evidence_doc_id!r} not found"
            )
        key = pio_key(rec.populations, rec.interventions, rec.outcomes)
        aligned_keys.setdefault(rec.evidence_doc_id, set()).add(key)
    rng = random.Random(seed)
    pairs: list[TrainingPair] = []
    for rec in claims:
        key = pio_key(rec.populations, rec.interventions, rec.outcomes)
        pool = sorted(
            doc_id for doc_id, keys in aligned_keys.items() if key not in keys
        )
        exhausted = len(pool) < n_negatives
        negatives = sorted(pool) if exhausted else sorted(
            rng.sample(pool, n_negatives)
        )
        query = make_query(
            rec.claim_text,
            rec.populations,
            rec.interventions,
            rec.outcomes,
            query_mode,
            query_id=rec.claim_id,
        )
        pairs.append(
            TrainingPair(
                query=query.text,
                positive_doc_id=rec.evidence_doc_id,
                negative_doc_ids=negatives,
                claim_id=rec.claim_id,
                pool_exhausted=exhausted,
            )
        )
    return pairs


def write_pairs(path, pairs: list[TrainingPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            obj = {
                "query": pair.query,
                "positive_doc_id": pair.positive_doc_id,
                "negative_doc_ids": pair.negative_doc_ids,
                "claim_id": pair.claim_id,
            }
            if pair.pool_exhausted:
                obj["pool_exhausted"] = True
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_pairs(path) -> list[TrainingPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            pairs.append(
                TrainingPair(
                    query=obj["query"],
                    positive_doc_id=obj["positive_doc_id"],
                    negative_doc_ids=list(obj["negative_doc_ids"]),
                    claim_id=obj.get("claim_id", ""),
                    pool_exhausted=bool(obj.get("pool_exhausted", False)),
                )
            )
    return pairs
