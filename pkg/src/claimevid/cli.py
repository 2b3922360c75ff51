"""Command-line entry point composing the pipeline stages over files.

Every subcommand reads declared inputs, writes declared outputs, and prints
a one-line JSON summary to stdout. Randomness funnels through a per-command
--seed flag, so a rerun with identical inputs and flags reproduces its
outputs byte for byte. Exit codes: 0 ok, 1 validation error, 2 IO error.
"""

from __future__ import annotations

import argparse
import json
import shutil
import subprocess
import sys
from datetime import datetime, timezone

from . import bm25, corpus, crf, dense, evaluation, features, tagging

PROG = "claimevid"


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", help="file of 'flag = value' lines providing defaults"
    )
    common.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit the timestamp field from the summary line",
    )
    common.add_argument(
        "--threads", type=int, default=1, help="worker cap (advisory)"
    )
    return common


def _read_config_file(path) -> list[str]:
    """Turn 'key = value' lines into CLI tokens; real flags still win."""
    tokens: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "yes", "1") and key in _BOOL_FLAGS:
                tokens.append(f"--{key}")
            elif value.lower() in ("false", "no", "0") and key in _BOOL_FLAGS:
                continue
            else:
                tokens.append(f"--{key}={value}")
    return tokens


_BOOL_FLAGS = {"no-timestamp", "include-pos", "pooled"}


def _summary(args, command: str, **fields) -> int:
    payload = {"command": command, **fields}
    if not args.no_timestamp:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    print(json.dumps(payload, ensure_ascii=False))
    return 0


def _cmd_stats(args) -> int:
    claims = corpus.read_records(args.claims, corpus.CLAIMS)
    stats = corpus.corpus_stats(claims)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(stats.as_dict(), fh)
    return _summary(args, "stats", **stats.as_dict())


def _cmd_split(args) -> int:
    records = corpus.read_records(args.in_path, args.schema)
    train, val = corpus.split_train_val(records, args.ratio, args.seed)
    corpus.write_records(args.train_out, train)
    corpus.write_records(args.val_out, val)
    return _summary(
        args, "split",
        n_records=len(records), n_train=len(train), n_val=len(val),
        ratio=args.ratio, seed=args.seed,
    )


def _cmd_mask(args) -> int:
    claims = corpus.read_records(args.claims, corpus.CLAIMS)
    masked = corpus.mask_corpus(claims, args.rate, args.seed, args.mask_token)
    corpus.write_masked(args.out, masked)
    n_words = sum(
        len([t for t in tagging.tokenize(m.original)
             if any(ch.isalnum() for ch in t.text)])
        for m in masked
    )
    n_masked = sum(len(m.masked_word_indices) for m in masked)
    return _summary(
        args, "mask",
        n_claims=len(masked), n_words=n_words, n_masked_words=n_masked,
        rate=args.rate, seed=args.seed,
    )


def _scheme(name: str) -> tagging.LabelScheme:
    if name not in tagging.SCHEMES:
        raise ValueError(
            f"unknown scheme {name!r}; expected one of {sorted(tagging.SCHEMES)}"
        )
    return tagging.SCHEMES[name]


def _cmd_tag_convert(args) -> int:
    scheme = _scheme(args.scheme)
    posts = corpus.read_records(args.posts, corpus.POSTS)
    sequences = []
    for post in posts:
        tokens = tagging.tokenize(post.text)
        spans = (
            list(post.claim_spans)
            if scheme is tagging.CLAIM_SCHEME
            else list(post.pio_spans)
        )
        labels = tagging.spans_to_bio(tokens, spans, scheme)
        pos = features.pos_tag(tokens) if args.include_pos else None
        sequences.append(
            tagging.TaggedSequence(
                [t.text for t in tokens], list(labels.labels), pos
            )
        )
    tagging.write_conll(args.out, sequences)
    return _summary(
        args, "tag-convert", scheme=args.scheme,
        n_posts=len(posts), n_tokens=sum(len(s.tokens) for s in sequences),
    )


def _load_tagged(path, scheme, fdict) -> list:
    data = []
    for seq in tagging.read_conll(path):
        if seq.labels is None:
            raise ValueError(f"{path}: sequences carry no label column")
        data.append(
            crf.encode_example(seq.tokens, seq.labels, scheme, fdict, seq.pos)
        )
    return data


def _cmd_train_crf(args) -> int:
    scheme = _scheme(args.scheme)
    train_seqs = tagging.read_conll(args.train)
    if any(s.labels is None for s in train_seqs):
        raise ValueError(f"{args.train}: sequences carry no label column")
    fdict = features.build_feature_dict(
        [(s.tokens, s.pos) for s in train_seqs]
    )
    config = crf.TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
    )
    train_data = [
        crf.encode_example(s.tokens, s.labels, scheme, fdict, s.pos)
        for s in train_seqs
    ]
    if args.val:
        val_data = _load_tagged(args.val, scheme, fdict)
    else:
        train_data, val_data = corpus.split_train_val(
            train_data, 1.0 - args.val_ratio, args.seed
        )
    model = crf.train(
        train_data, val_data, config,
        scheme=scheme, feature_dict=fdict, l2=args.l2,
    )
    fdict.save(args.dict_out)
    crf.save_model(model, args.model_out)
    return _summary(
        args, "train-crf", scheme=args.scheme,
        n_train=len(train_data), n_val=len(val_data),
        n_features=len(fdict), seed=args.seed,
        val_nll=crf.data_nll(model, val_data),
    )


def _cmd_predict(args) -> int:
    fdict = features.FeatureDictionary.load(args.dict)
    model = crf.load_model(args.model, fdict)
    sequences = tagging.read_conll(args.in_path)
    out = []
    for seq in sequences:
        feats, _ = crf.encode_example(
            seq.tokens, ["O"] * len(seq.tokens), model.scheme, fdict, seq.pos
        )
        labels = crf.viterbi(model, feats) if seq.tokens else None
        out.append(
            tagging.TaggedSequence(
                seq.tokens,
                list(labels.labels) if labels else [],
                seq.pos,
            )
        )
    tagging.write_conll(args.out, out)
    return _summary(
        args, "predict", n_sequences=len(out),
        n_tokens=sum(len(s.tokens) for s in out),
    )


def _conll_label_sequences(path, scheme) -> list[tagging.LabelSequence]:
    out = []
    for seq in tagging.read_conll(path):
        if seq.labels is None:
            raise ValueError(f"{path}: sequences carry no label column")
        out.append(tagging.LabelSequence(scheme, tuple(seq.labels)))
    return out


def _detect_scheme(path) -> tagging.LabelScheme:
    for seq in tagging.read_conll(path):
        for lab in seq.labels or []:
            if "-" in lab:
                return tagging.PIO_SCHEME
    return tagging.CLAIM_SCHEME


def _cmd_score_spans(args) -> int:
    scheme = (
        _scheme(args.scheme) if args.scheme else _detect_scheme(args.gold)
    )
    gold = _conll_label_sequences(args.gold, scheme)
    pred = _conll_label_sequences(args.pred, scheme)
    report = tagging.token_prf(gold, pred, args.averaging)
    return _summary(args, "score-spans", scheme=scheme.name, **report.as_dict())


def _cmd_index(args) -> int:
    abstracts = corpus.read_records(args.evidence, corpus.EVIDENCE)
    index = bm25.build_index(abstracts, args.k1, args.b)
    bm25.save_index(index, args.out)
    return _summary(
        args, "index", n_docs=index.n_docs, avgdl=index.avgdl,
        k1=args.k1, b=args.b,
    )


def _cmd_search(args) -> int:
    if bool(args.index) == bool(args.vectors):
        raise ValueError("pass exactly one of --index (BM25) or --vectors (dense)")
    runs = []
    if args.index:
        index = bm25.load_index(args.index)
        claims = corpus.read_records(args.queries, corpus.CLAIMS)
        for rec in claims:
            query = bm25.make_query(
                rec.claim_text, rec.populations, rec.interventions,
                rec.outcomes, args.mode, query_id=rec.claim_id,
            )
            runs.append(bm25.search(index, query, args.k))
        kind = "bm25"
    else:
        store = dense.load_vectors(args.vectors)
        queries = dense.load_vectors(args.query_vectors)
        for query_id, row in zip(queries.ids, queries.matrix):
            runs.append(
                dense.top_k(store, row, args.k, args.metric, query_id=query_id)
            )
        kind = "dense"
    bm25.write_run_file(args.out, runs)
    return _summary(
        args, "search", kind=kind, k=args.k, n_queries=len(runs),
        n_empty_queries=sum(1 for r in runs if r.empty_query),
        n_results=sum(len(r.items) for r in runs),
    )


def _cmd_pairs(args) -> int:
    claims = corpus.read_records(args.claims, corpus.CLAIMS)
    abstracts = corpus.read_records(args.evidence, corpus.EVIDENCE)
    pairs = dense.build_training_pairs(
        claims, abstracts, args.n_negatives, args.seed, args.mode
    )
    dense.write_pairs(args.out, pairs)
    return _summary(
        args, "pairs", n_pairs=len(pairs), seed=args.seed,
        n_pool_exhausted=sum(1 for p in pairs if p.pool_exhausted),
    )


def _cmd_eval(args) -> int:
    runs = bm25.read_run_file(args.run)
    qrels = evaluation.read_qrels(args.qrels)
    ks = [int(x) for x in args.k.split(",") if x.strip()]
    if not ks:
        raise ValueError("--k must list at least one cut, e.g. 1,5,10,100")
    report = evaluation.graded_counts(runs, qrels, ks, args.threshold)
    if args.pooled:
        report.precision = {
            k: evaluation.precision_at_k(runs, qrels, k, args.threshold, pooled=True)
            for k in ks
        }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
    if args.table_out:
        with open(args.table_out, "w", encoding="utf-8") as fh:
            fh.write(evaluation.format_report(report) + "\n")
    return _summary(args, "eval", **report.as_dict())


def _cmd_gen(args) -> int:
    bridge = shutil.which(args.bridge_cmd)
    if bridge is None:
        raise ValueError(
            f"generation bridge {args.bridge_cmd!r} not found on PATH; "
            "install the bridge package or pass --bridge-cmd"
        )
    cmd = [
        bridge, "generate",
        "--prompts", args.prompts,
        "--out", args.out,
        "--config", args.gen_config,
        "--model", args.model,
        "--seed", str(args.seed),
    ]
    proc = subprocess.run(cmd)
    if proc.returncode != 0:
        raise ValueError(
            f"generation bridge exited with status {proc.returncode}"
        )
    n_out = sum(1 for line in open(args.out, encoding="utf-8") if line.strip())
    return _summary(
        args, "gen", n_requests=n_out, bridge=args.bridge_cmd, seed=args.seed
    )


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Medical claim / PIO tagging and evidence retrieval pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--claims", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("split", parents=[common], help="train/validation split")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--schema", choices=corpus.SCHEMAS, default=corpus.CLAIMS)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--val-out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("mask", parents=[common], help="whole-word mask corpus")
    p.add_argument("--claims", required=True)
    p.add_argument("--rate", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-token", default=corpus.DEFAULT_MASK_TOKEN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser(
        "tag-convert", parents=[common],
        help="annotated posts to CoNLL token/label TSV",
    )
    p.add_argument("--posts", required=True)
    p.add_argument("--scheme", choices=sorted(tagging.SCHEMES), required=True)
    p.add_argument("--include-pos", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tag_convert)

    p = sub.add_parser("train-crf", parents=[common], help="train the tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--val")
    p.add_argument("--val-ratio", type=float, default=0.1)
    p.add_argument("--scheme", choices=sorted(tagging.SCHEMES), required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--dict-out", required=True)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--max-epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--l2", type=float, default=1e-2)
    p.add_argument("--optimizer", choices=crf.OPTIMIZERS, default="adam")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_crf)

    p = sub.add_parser("predict", parents=[common], help="decode with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser(
        "score-spans", parents=[common], help="token-level P/R/F1"
    )
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--scheme", choices=sorted(tagging.SCHEMES))
    p.add_argument("--averaging", choices=("micro", "macro"), default="micro")
    p.set_defaults(func=_cmd_score_spans)

    p = sub.add_parser("index", parents=[common], help="build a BM25 index")
    p.add_argument("--evidence", required=True)
    p.add_argument("--k1", type=float, default=1.5)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", parents=[common], help="rank documents")
    p.add_argument("--index", help="BM25 index file")
    p.add_argument("--queries", help="claims JSONL used as BM25 queries")
    p.add_argument(
        "--mode", choices=bm25.QUERY_MODES, default=bm25.CLAIM_PLUS_PIO
    )
    p.add_argument("--vectors", help="document vectors JSONL (dense mode)")
    p.add_argument("--query-vectors", help="query vectors JSONL (dense mode)")
    p.add_argument("--metric", choices=dense.METRICS, default="dot")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser(
        "pairs", parents=[common], help="dense-retriever training pairs"
    )
    p.add_argument("--claims", required=True)
    p.add_argument("--evidence", required=True)
    p.add_argument("--n-negatives", type=int, default=dense.DEFAULT_N_NEGATIVES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--mode", choices=bm25.QUERY_MODES, default=bm25.CLAIM_PLUS_PIO
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("eval", parents=[common], help="precision@k report")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", default="1,5,10,100")
    p.add_argument("--threshold", type=int, default=evaluation.DEFAULT_THRESHOLD)
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--out")
    p.add_argument("--table-out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser(
        "gen", parents=[common],
        help="generate synthetic claims through the external bridge",
    )
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gen-config", required=True, help="decoding config JSON")
    p.add_argument("--model", required=True, help="bridge model artifact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bridge-cmd", default="claim-gen-bridge")
    p.set_defaults(func=_cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # pull config-file defaults in ahead of explicit flags
    if "--config" in argv:
        i = argv.index("--config")
        try:
            extra = _read_config_file(argv[i + 1])
        except IndexError:
            print("error: --config needs a file path", file=sys.stderr)
            return 1
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return 2
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        argv = argv[:1] + extra + argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
