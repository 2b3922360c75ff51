"""Walkthrough: corpus statistics, the 90/10 split, and whole-word masking.

Writes a small claims file, reports its statistics, splits it for training,
and prepares a masked copy of the text for language-model adaptation.

Run with:  python demos/corpus_prep.py
"""

import json
import tempfile
from pathlib import Path

from claimevid.corpus import (
    corpus_stats,
    mask_corpus,
    read_records,
    split_train_val,
    write_masked,
    write_records,
)

workdir = Path(tempfile.mkdtemp(prefix="claimprep-"))
claims_path = workdir / "claims.jsonl"

rows = [
    ("c1", "I heard quitting nicotine helps smokers feel better.",
     ["smokers"], ["nicotine"], ["cessation"]),
    ("c2", "People say methotrexate reduced their lupus joint pain.",
     ["lupus"], ["methotrexate"], ["joint pain"]),
    ("c3", "The low fodmap diet stopped my bloating within weeks!",
     ["ibs"], ["low fodmap diet"], ["bloating"]),
    ("c4", "Magnesium cut her migraines down to one a month.",
     ["migraine"], ["magnesium"], ["headaches"]),
    ("c5", "Melatonin improved my sleep quality. It took two weeks.",
     ["insomnia"], ["melatonin"], ["sleep quality"]),
]
with open(claims_path, "w", encoding="utf-8") as fh:
    for cid, text, pops, ints, outs in rows:
        fh.write(json.dumps({
            "claim_id": cid, "claim_text": text,
            "populations": pops, "interventions": ints, "outcomes": outs,
            "evidence_doc_id": f"d-{cid}",
        }) + "\n")

claims = read_records(claims_path, "claims")

# 1. corpus statistics (tokens case-folded, PIO strings trimmed)
stats = corpus_stats(claims)
print("corpus statistics:")
for key, value in stats.as_dict().items():
    print(f"  {key:16s} {value}")

# 2. deterministic 90/10 split
train, val = split_train_val(claims, ratio=0.9, seed=0)
write_records(workdir / "train.jsonl", train)
write_records(workdir / "val.jsonl", val)
print(f"\nsplit: {len(train)} train / {len(val)} validation "
      f"(seed-stable; rerun reproduces the same partition)")

# 3. whole-word masking at the published 15% rate
masked = mask_corpus(claims, rate=0.15, seed=1)
write_masked(workdir / "masked.jsonl", masked)
print("\nmasked examples (whole words only, never fragments):")
for m in masked:
    print(f"  {m.claim_id}: {m.masked}   <- indices {m.masked_word_indices}")

print(f"\nartifacts written under {workdir}")
print("CLI equivalents: claimevid stats / split / mask "
      "(see README for the full pipeline)")
