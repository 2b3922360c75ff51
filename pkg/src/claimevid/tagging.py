"""Tokenization, span/BIO label conversion, label repair, and token-level scoring.

Two labeling schemes are supported: a claim scheme (O, B, I) marking medical
claim spans, and a PIO scheme (O plus B/I for Pop, Int, Out) marking
population, intervention, and outcome mentions inside claims.

Boundary convention for punctuation: a punctuation token is labeled inside a
span whenever its character range falls inside the span, so a claim may end
on a trailing period while a leading period before the claim stays O.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class PIOCategory(enum.Enum):
    """The three span categories; there is deliberately no comparator."""

    POPULATION = "POP"
    INTERVENTION = "INT"
    OUTCOME = "OUT"

    @property
    def tag(self) -> str:
        """Short form used in label strings (B-Pop, I-Int, ...)."""
        return _CATEGORY_TAGS[self]

    @classmethod
    def from_tag(cls, tag: str) -> "PIOCategory":
        for cat, t in _CATEGORY_TAGS.items():
            if t == tag:
                return cat
        raise ValueError(f"unknown PIO category tag: {tag!r}")


_CATEGORY_TAGS = {
    PIOCategory.POPULATION: "Pop",
    PIOCategory.INTERVENTION: "Int",
    PIOCategory.OUTCOME: "Out",
}


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open character interval [start, end) into a source text."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span: start={self.start}, end={self.end}")

    def overlaps(self, other: "CharSpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Token:
    """A token with its character offsets into the source text."""

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class LabelScheme:
    name: str
    labels: tuple[str, ...]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} not in scheme {self.name!r}") from None

    def __len__(self) -> int:
        return len(self.labels)


CLAIM_SCHEME = LabelScheme("claim", ("O", "B", "I"))
PIO_SCHEME = LabelScheme(
    "pio", ("O", "B-Pop", "I-Pop", "B-Int", "I-Int", "B-Out", "I-Out")
)
SCHEMES = {s.name: s for s in (CLAIM_SCHEME, PIO_SCHEME)}


def split_label(label: str) -> tuple[str, str | None]:
    """Split a label into (prefix, category tag); O and bare B/I have no tag."""
    if "-" in label:
        prefix, tag = label.split("-", 1)
        return prefix, tag
    return label, None


def make_label(prefix: str, tag: str | None) -> str:
    return prefix if tag is None else f"{prefix}-{tag}"


@dataclass
class LabelSequence:
    """Per-token labels under one scheme, aligned 1:1 with a token list."""

    scheme: LabelScheme
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        valid = set(self.scheme.labels)
        for lab in self.labels:
            if lab not in valid:
                raise ValueError(
                    f"label {lab!r} not in scheme {self.scheme.name!r}"
                )
        self.labels = tuple(self.labels)

    def ids(self) -> list[int]:
        return [self.scheme.index(lab) for lab in self.labels]

    @classmethod
    def from_ids(cls, scheme: LabelScheme, ids: list[int]) -> "LabelSequence":
        return cls(scheme, tuple(scheme.labels[i] for i in ids))

    def __len__(self) -> int:
        return len(self.labels)

    def is_valid(self) -> bool:
        """True when every I-x follows a B-x or I-x of the same category."""
        prev = "O"
        for lab in self.labels:
            prefix, tag = split_label(lab)
            if prefix == "I":
                p_prefix, p_tag = split_label(prev)
                if p_prefix not in ("B", "I") or p_tag != tag:
                    return False
            prev = lab
        return True


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, then detach leading/trailing punctuation characters.

    Each detached punctuation character becomes its own token. Word-internal
    punctuation (hyphens, apostrophes) is kept so terms like "sub-Q" survive.
    """
    tokens: list[Token] = []
    pos = 0
    for chunk in text.split():
        start = text.index(chunk, pos)
        pos = start + len(chunk)
        i, j = 0, len(chunk)
        while i < j and not chunk[i].isalnum():
            tokens.append(Token(chunk[i], start + i, start + i + 1))
            i += 1
        k = j
        while k > i and not chunk[k - 1].isalnum():
            k -= 1
        if i < k:
            tokens.append(Token(chunk[i:k], start + i, start + k))
        for p in range(k, j):
            tokens.append(Token(chunk[p], start + p, start + p + 1))
    return tokens


SpanLike = CharSpan | tuple[CharSpan, PIOCategory | None]


def _normalize_spans(
    spans: list[SpanLike], scheme: LabelScheme
) -> list[tuple[CharSpan, PIOCategory | None]]:
    out: list[tuple[CharSpan, PIOCategory | None]] = []
    for item in spans:
        span, cat = item if isinstance(item, tuple) else (item, None)
        if scheme is CLAIM_SCHEME and cat is not None:
            raise ValueError("claim scheme spans carry no category")
        if scheme is PIO_SCHEME and cat is None:
            raise ValueError("pio scheme spans require a category")
        out.append((span, cat))
    return out


def check_no_overlap(spans: list[CharSpan], context: str = "") -> None:
    ordered = sorted(spans)
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            where = f" in {context}" if context else ""
            raise ValueError(f"overlapping spans{where}: {a} and {b}")


def spans_to_bio(
    tokens: list[Token], spans: list[SpanLike], scheme: LabelScheme
) -> LabelSequence:
    """Label each token intersecting a span with B(-cat) / I(-cat), others O.

    A token partially covered by a span claims the whole token. Spans must
    not overlap each other; a token already claimed by an earlier span is
    never relabeled.
    """
    pairs = _normalize_spans(spans, scheme)
    check_no_overlap([s for s, _ in pairs])
    labels = ["O"] * len(tokens)
    for span, cat in sorted(pairs, key=lambda p: p[0]):
        tag = cat.tag if cat is not None else None
        first = True
        for i, tok in enumerate(tokens):
            if tok.start < span.end and tok.end > span.start and labels[i] == "O":
                labels[i] = make_label("B" if first else "I", tag)
                first = False
    return LabelSequence(scheme, tuple(labels))


def bio_to_spans(
    tokens: list[Token], labels: LabelSequence
) -> list[tuple[CharSpan, PIOCategory | None]]:
    """Turn each maximal B(-x) I(-x)* run into one token-snapped span."""
    if len(tokens) != len(labels):
        raise ValueError(
            f"token/label length mismatch: {len(tokens)} vs {len(labels)}"
        )
    if not labels.is_valid():
        raise ValueError("invalid label sequence; run repair_labels first")
    spans: list[tuple[CharSpan, PIOCategory | None]] = []
    run_start: int | None = None
    run_tag: str | None = None
    for i, lab in enumerate(labels.labels):
        prefix, tag = split_label(lab)
        if prefix == "B":
            if run_start is not None:
                spans.append(_close_run(tokens, run_start, i, run_tag))
            run_start, run_tag = i, tag
        elif prefix == "O" and run_start is not None:
            spans.append(_close_run(tokens, run_start, i, run_tag))
            run_start = None
    if run_start is not None:
        spans.append(_close_run(tokens, run_start, len(tokens), run_tag))
    return spans


def _close_run(
    tokens: list[Token], first: int, stop: int, tag: str | None
) -> tuple[CharSpan, PIOCategory | None]:
    span = CharSpan(tokens[first].start, tokens[stop - 1].end)
    cat = PIOCategory.from_tag(tag) if tag is not None else None
    return span, cat


def repair_labels(labels: LabelSequence) -> LabelSequence:
    """Rewrite any orphan I-x (not after B-x/I-x) to B-x; idempotent."""
    repaired: list[str] = []
    prev = "O"
    for lab in labels.labels:
        prefix, tag = split_label(lab)
        if prefix == "I":
            p_prefix, p_tag = split_label(prev)
            if p_prefix not in ("B", "I") or p_tag != tag:
                lab = make_label("B", tag)
        repaired.append(lab)
        prev = lab
    return LabelSequence(labels.scheme, tuple(repaired))


@dataclass
class PRFReport:
    precision: float
    recall: float
    f1: float
    averaging: str
    per_label: dict[str, dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "averaging": self.averaging,
            "per_label": self.per_label,
        }


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def token_prf(
    gold: list[LabelSequence],
    pred: list[LabelSequence],
    averaging: str = "micro",
) -> PRFReport:
    """Token-level precision/recall/F1 treating every non-O label as positive.

    micro pools true/false positives over all tokens; macro averages the
    per-label scores over labels observed in gold or predictions.
    """
    if averaging not in ("micro", "macro"):
        raise ValueError(f"unknown averaging: {averaging!r}")
    if len(gold) != len(pred):
        raise ValueError(
            f"gold has {len(gold)} sequences, predictions have {len(pred)}"
        )
    counts: dict[str, list[int]] = {}  # label -> [tp, fp, fn]
    for idx, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"length mismatch in sequence {idx}")
        for gl, pl in zip(g.labels, p.labels):
            if pl != "O":
                counts.setdefault(pl, [0, 0, 0])
                if pl == gl:
                    counts[pl][0] += 1
                else:
                    counts[pl][1] += 1
            if gl != "O" and pl != gl:
                counts.setdefault(gl, [0, 0, 0])
                counts[gl][2] += 1
    per_label = {
        lab: dict(zip(("precision", "recall", "f1"), _prf(*c)))
        for lab, c in sorted(counts.items())
    }
    if averaging == "micro":
        tp = sum(c[0] for c in counts.values())
        fp = sum(c[1] for c in counts.values())
        fn = sum(c[2] for c in counts.values())
        p, r, f1 = _prf(tp, fp, fn)
    else:
        scores = list(per_label.values())
        n = len(scores)
        p = sum(s["precision"] for s in scores) / n if n else 0.0
        r = sum(s["recall"] for s in scores) / n if n else 0.0
        f1 = sum(s["f1"] for s in scores) / n if n else 0.0
    return PRFReport(p, r, f1, averaging, per_label)


@dataclass
class TaggedSequence:
    """One CoNLL-style sequence: tokens with optional POS and label columns."""

    tokens: list[str]
    labels: list[str] | None = None
    pos: list[str] | None = None


def write_conll(path, sequences: list[TaggedSequence]) -> None:
    """One token per line, tab-separated columns, blank line between sequences.

    Columns are token, optional POS, optional label; the layout is the same
    for every sequence in one file.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            for i, tok in enumerate(seq.tokens):
                cols = [tok]
                if seq.pos is not None:
                    cols.append(seq.pos[i])
                if seq.labels is not None:
                    cols.append(seq.labels[i])
                fh.write("\t".join(cols) + "\n")
            fh.write("\n")


def read_conll(path) -> list[TaggedSequence]:
    """Read sequences of 1 (token), 2 (token, label) or 3 (token, POS, label) columns."""
    sequences: list[TaggedSequence] = []
    tokens: list[str] = []
    labels: list[str] = []
    pos: list[str] = []
    width = 0

    def flush() -> None:
        nonlocal tokens, labels, pos
        if tokens:
            sequences.append(
                TaggedSequence(
                    tokens,
                    labels or None,
                    pos or None,
                )
            )
        tokens, labels, pos = [], [], []

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            cols = line.split("\t")
            if width and len(cols) != width:
                raise ValueError(f"{path}:{lineno}: inconsistent column count")
            width = len(cols)
            tokens.append(cols[0])
            if len(cols) == 2:
                labels.append(cols[1])
            elif len(cols) == 3:
                pos.append(cols[1])
                labels.append(cols[2])
            elif len(cols) > 3:
                raise ValueError(f"{path}:{lineno}: too many columns")
    flush()
    return sequences
