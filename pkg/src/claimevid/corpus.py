"""Data model, JSONL ingestion/export, corpus statistics, splitting, masking.

All interchange is JSONL with character-offset annotations. Three record
schemas exist: annotated social-media posts, claim records aligned to one
evidence document, and evidence abstracts. A fourth file format carries
whole-word-masked claim text for language-model adaptation.

Records are immutable after load; every operation here is pure given its
inputs and seed.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field

from .tagging import CharSpan, PIOCategory, check_no_overlap, tokenize

POSTS = "posts"
CLAIMS = "claims"
EVIDENCE = "evidence"
SCHEMAS = (POSTS, CLAIMS, EVIDENCE)

DEFAULT_MASK_TOKEN = "[MASK]"

_SENTENCE_BREAK = re.compile(r"[.!?]+")


@dataclass
class AnnotatedPost:
    """Social-media text with claim spans and categorized PIO spans."""

    post_id: str
    text: str
    claim_spans: list[CharSpan] = field(default_factory=list)
    pio_spans: list[tuple[CharSpan, PIOCategory]] = field(default_factory=list)

    def validate(self) -> None:
        n = len(self.text)
        for span in self.claim_spans:
            if span.end > n:
                raise ValueError(
                    f"post {self.post_id!r}: claim span {span} exceeds text length {n}"
                )
        for span, _cat in self.pio_spans:
            if span.end > n:
                raise ValueError(
                    f"post {self.post_id!r}: pio span {span} exceeds text length {n}"
                )
        check_no_overlap(self.claim_spans, f"post {self.post_id!r} claims")
        check_no_overlap(
            [s for s, _ in self.pio_spans], f"post {self.post_id!r} pio"
        )

    def unaligned_pio_spans(self) -> list[tuple[CharSpan, PIOCategory]]:
        """PIO spans lying outside every claim span; flagged, not fatal."""
        out = []
        for span, cat in self.pio_spans:
            inside = any(
                c.start <= span.start and span.end <= c.end
                for c in self.claim_spans
            )
            if not inside:
                out.append((span, cat))
        return out


@dataclass
class ClaimRecord:
    """One claim aligned to PIO element lists and a single evidence document."""

    claim_id: str
    claim_text: str
    populations: list[str] = field(default_factory=list)
    interventions: list[str] = field(default_factory=list)
    outcomes: list[str] = field(default_factory=list)
    evidence_doc_id: str = ""

    def validate(self) -> None:
        if not (self.populations or self.interventions or self.outcomes):
            raise ValueError(
                f"claim {self.claim_id!r}: all PIO element lists are empty"
            )


@dataclass
class EvidenceAbstract:
    """A trial abstract with extracted PIO element lists."""

    doc_id: str
    title: str
    abstract: str
    populations: list[str] = field(default_factory=list)
    interventions: list[str] = field(default_factory=list)
    outcomes: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not self.abstract:
            raise ValueError(f"evidence {self.doc_id!r}: empty abstract")


@dataclass
class CorpusStats:
    n_claims: int = 0
    n_sentences: int = 0
    n_tokens: int = 0
    n_unique_tokens: int = 0
    n_unique_pios: int = 0
    n_populations: int = 0
    n_interventions: int = 0
    n_outcomes: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass
class MaskedClaim:
    claim_id: str
    original: str
    masked: str
    masked_word_indices: list[int] = field(default_factory=list)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValueError(f"{where}: missing field {key!r}")
    return obj[key]


def _parse_post(obj: dict, where: str) -> AnnotatedPost:
    post_id = str(_require(obj, "post_id", where))
    text = _require(obj, "text", where)
    claim_spans = [
        CharSpan(int(s["start"]), int(s["end"])) for s in obj.get("claims", [])
    ]
    pio_spans = [
        (CharSpan(int(s["start"]), int(s["end"])), PIOCategory(s["category"]))
        for s in obj.get("pio", [])
    ]
    post = AnnotatedPost(post_id, text, claim_spans, pio_spans)
    post.validate()
    return post


def _parse_claim(obj: dict, where: str) -> ClaimRecord:
    rec = ClaimRecord(
        claim_id=str(_require(obj, "claim_id", where)),
        claim_text=_require(obj, "claim_text", where),
        populations=list(obj.get("populations", [])),
        interventions=list(obj.get("interventions", [])),
        outcomes=list(obj.get("outcomes", [])),
        evidence_doc_id=str(obj.get("evidence_doc_id", "")),
    )
    rec.validate()
    return rec


def _parse_evidence(obj: dict, where: str) -> EvidenceAbstract:
    rec = EvidenceAbstract(
        doc_id=str(_require(obj, "doc_id", where)),
        title=obj.get("title", ""),
        abstract=_require(obj, "abstract", where),
        populations=list(obj.get("populations", [])),
        interventions=list(obj.get("interventions", [])),
        outcomes=list(obj.get("outcomes", [])),
    )
    rec.validate()
    return rec


_PARSERS = {POSTS: _parse_post, CLAIMS: _parse_claim, EVIDENCE: _parse_evidence}


def read_records(path, schema: str) -> list:
    """Read one JSON object per line into validated records of the given schema."""
    if schema not in _PARSERS:
        raise ValueError(f"unknown schema {schema!r}; expected one of {SCHEMAS}")
    parser = _PARSERS[schema]
    records = []
    seen_doc_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: malformed JSON: {exc.msg}") from exc
            try:
                rec = parser(obj, where)
            except ValueError as exc:
                msg = str(exc)
                raise ValueError(
                    msg if where in msg else f"{where}: {msg}"
                ) from exc
            if schema == EVIDENCE:
                if rec.doc_id in seen_doc_ids:
                    raise ValueError(f"{where}: duplicate doc_id {rec.doc_id!r}")
                seen_doc_ids.add(rec.doc_id)
            records.append(rec)
    return records


def _post_to_obj(post: AnnotatedPost) -> dict:
    return {
        "post_id": post.post_id,
        "text": post.text,
        "claims": [{"start": s.start, "end": s.end} for s in post.claim_spans],
        "pio": [
            {"start": s.start, "end": s.end, "category": c.value}
            for s, c in post.pio_spans
        ],
    }


def _claim_to_obj(rec: ClaimRecord) -> dict:
    return {
        "claim_id": rec.claim_id,
        "claim_text": rec.claim_text,
        "populations": rec.populations,
        "interventions": rec.interventions,
        "outcomes": rec.outcomes,
        "evidence_doc_id": rec.evidence_doc_id,
    }


def _evidence_to_obj(rec: EvidenceAbstract) -> dict:
    return {
        "doc_id": rec.doc_id,
        "title": rec.title,
        "abstract": rec.abstract,
        "populations": rec.populations,
        "interventions": rec.interventions,
        "outcomes": rec.outcomes,
    }


_WRITERS = {
    AnnotatedPost: _post_to_obj,
    ClaimRecord: _claim_to_obj,
    EvidenceAbstract: _evidence_to_obj,
}


def write_records(path, records: list) -> None:
    """Write records back to JSONL; inverse of read_records up to field order."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            writer = _WRITERS[type(rec)]
            fh.write(json.dumps(writer(rec), ensure_ascii=False) + "\n")


def check_alignment(
    claims: list[ClaimRecord], evidence: list[EvidenceAbstract]
) -> None:
    """Require every claim's evidence_doc_id to resolve in the evidence set."""
    doc_ids = {e.doc_id for e in evidence}
    for rec in claims:
        if rec.evidence_doc_id not in doc_ids:
            raise ValueError(
                f"claim {rec.claim_id!r}: evidence_doc_id "
                f"{rec.evidence_doc_id!r} not found"
            )


def count_sentences(text: str) -> int:
    """Number of non-empty segments after splitting on terminal punctuation."""
    segments = [s for s in _SENTENCE_BREAK.split(text) if s.strip()]
    if segments:
        return len(segments)
    return 1 if text.strip() else 0


def corpus_stats(claims: list[ClaimRecord]) -> CorpusStats:
    """Aggregate counts over a claims corpus.

    Token uniqueness is case-folded; PIO uniqueness is exact-string after
    trimming whitespace, pooled across the three categories. The per-category
    fields count every listed element occurrence.
    """
    stats = CorpusStats(n_claims=len(claims))
    unique_tokens: set[str] = set()
    unique_pios: set[str] = set()
    for rec in claims:
        toks = tokenize(rec.claim_text)
        stats.n_tokens += len(toks)
        unique_tokens.update(t.text.casefold() for t in toks)
        stats.n_sentences += count_sentences(rec.claim_text)
        stats.n_populations += len(rec.populations)
        stats.n_interventions += len(rec.interventions)
        stats.n_outcomes += len(rec.outcomes)
        for element in rec.populations + rec.interventions + rec.outcomes:
            unique_pios.add(element.strip())
    stats.n_unique_tokens = len(unique_tokens)
    stats.n_unique_pios = len(unique_pios)
    return stats


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_val(
    records: list, ratio: float, seed: int
) -> tuple[list, list]:
    """Deterministic shuffled split with |train| = round(ratio * N).

    The train size is clamped to [1, N-1] so both sides stay non-empty.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(records)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = min(max(_round_half_up(ratio * n), 1), n - 1)
    train = [records[i] for i in order[:n_train]]
    val = [records[i] for i in order[n_train:]]
    return train, val


def mask_corpus(
    claims: list[ClaimRecord],
    rate: float,
    seed: int,
    mask_token: str = DEFAULT_MASK_TOKEN,
) -> list[MaskedClaim]:
    """Whole-word masking: replace round(rate * W) full words per claim text.

    Words are tokens containing at least one alphanumeric character, taken
    from the same tokenizer the tagging task uses, so a mask can never split
    a word. Indices in the output count word tokens only (punctuation tokens
    are skipped). Each selected word is replaced by one mask token.
    """
    if not 0 <= rate <= 1:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    rng = random.Random(seed)
    out: list[MaskedClaim] = []
    for rec in claims:
        words = [
            t for t in tokenize(rec.claim_text)
            if any(ch.isalnum() for ch in t.text)
        ]
        n_mask = _round_half_up(rate * len(words))
        indices = sorted(rng.sample(range(len(words)), n_mask)) if n_mask else []
        masked = rec.claim_text
        for i in reversed(indices):
            w = words[i]
            masked = masked[: w.start] + mask_token + masked[w.end :]
        out.append(MaskedClaim(rec.claim_id, rec.claim_text, masked, indices))
    return out


def write_masked(path, masked: list[MaskedClaim]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in masked:
            obj = {
                "claim_id": m.claim_id,
                "original": m.original,
                "masked": m.masked,
                "masked_word_indices": m.masked_word_indices,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_masked(path) -> list[MaskedClaim]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{path}:{lineno}: malformed JSON: {exc.msg}"
                ) from exc
            out.append(
                MaskedClaim(
                    str(obj["claim_id"]),
                    obj["original"],
                    obj["masked"],
                    list(obj.get("masked_word_indices", [])),
                )
            )
    return out
