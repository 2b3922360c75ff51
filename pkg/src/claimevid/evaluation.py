"""Precision@k over run files with graded qrels, and graded count tables.

Grades run 0 (irrelevant) through 3 (highly relevant). Binary precision@k
treats grade >= threshold as relevant, counts unjudged documents as grade 0,
and pads queries returning fewer than k documents with non-relevant slots.
Graded counts are raw totals per grade within the top k, summed over all
queries, the convention used for expert-judgment tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bm25 import RankedList

GRADES = (0, 1, 2, 3)
GRADE_NAMES = {
    0: "irrelevant",
    1: "somewhat relevant",
    2: "relevant",
    3: "highly relevant",
}
DEFAULT_THRESHOLD = 2

Qrels = dict  # (query_id, doc_id) -> grade


def read_qrels(path) -> Qrels:
    """query_id TAB doc_id TAB grade, one judgment per (query, doc)."""
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns")
            query_id, doc_id, grade_str = cols
            grade = int(grade_str)
            if grade not in GRADES:
                raise ValueError(
                    f"{path}:{lineno}: grade {grade} outside {GRADES}"
                )
            key = (query_id, doc_id)
            if key in qrels:
                raise ValueError(
                    f"{path}:{lineno}: duplicate judgment for {key}"
                )
            qrels[key] = grade
    return qrels


def write_qrels(path, qrels: Qrels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (query_id, doc_id), grade in qrels.items():
            fh.write(f"{query_id}\t{doc_id}\t{grade}\n")


def _grade(qrels: Qrels, query_id: str, doc_id: str) -> int:
    return qrels.get((query_id, doc_id), 0)


def precision_at_k(
    run: list[RankedList],
    qrels: Qrels,
    k: int,
    binary_threshold: int = DEFAULT_THRESHOLD,
    pooled: bool = False,
) -> float:
    """Mean over queries of (relevant docs in top k) / k.

    With pooled=True the relevant counts are pooled over all queries and
    divided by the retrieved slot count instead of averaging per query.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not run:
        raise ValueError("empty run")
    per_query = []
    pooled_rel = 0
    pooled_slots = 0
    for ranked in run:
        top = ranked.items[:k]
        rel = sum(
            1
            for doc_id, _ in top
            if _grade(qrels, ranked.query_id, doc_id) >= binary_threshold
        )
        per_query.append(rel / k)
        pooled_rel += rel
        pooled_slots += len(top)
    if pooled:
        return pooled_rel / pooled_slots if pooled_slots else 0.0
    return sum(per_query) / len(per_query)


@dataclass
class EvalReport:
    ks: list[int]
    n_queries: int
    binary_threshold: int
    precision: dict[int, float] = field(default_factory=dict)
    counts: dict[int, dict[int, int]] = field(default_factory=dict)
    unjudged_as_irrelevant: bool = True

    def as_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "binary_threshold": self.binary_threshold,
            "unjudged_as_irrelevant": self.unjudged_as_irrelevant,
            "precision_at_k": {str(k): self.precision[k] for k in self.ks},
            "graded_counts": {
                str(k): {GRADE_NAMES[g]: self.counts[k][g] for g in GRADES}
                for k in self.ks
            },
        }


def graded_counts(
    run: list[RankedList],
    qrels: Qrels,
    ks: list[int],
    binary_threshold: int = DEFAULT_THRESHOLD,
) -> EvalReport:
    """Raw per-grade counts of retrieved docs within each top-k cut."""
    for k in ks:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
    report = EvalReport(list(ks), len(run), binary_threshold)
    for k in ks:
        counts = {g: 0 for g in GRADES}
        for ranked in run:
            for doc_id, _ in ranked.items[:k]:
                counts[_grade(qrels, ranked.query_id, doc_id)] += 1
        report.counts[k] = counts
        report.precision[k] = (
            precision_at_k(run, qrels, k, binary_threshold) if run else 0.0
        )
    return report


def format_report(report: EvalReport) -> str:
    """Aligned text table: one grade per row, one k cut per column."""
    header = ["grade"] + [f"k={k}" for k in report.ks]
    rows = [header]
    for grade in reversed(GRADES):
        row = [GRADE_NAMES[grade]]
        row += [str(report.counts[k][grade]) for k in report.ks]
        rows.append(row)
    prec_row = [f"p@k (grade>={report.binary_threshold})"]
    prec_row += [f"{report.precision[k]:.4f}" for k in report.ks]
    rows.append(prec_row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)
