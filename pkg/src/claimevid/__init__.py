"""Toolkit for medical claim / PIO span tagging and trial-abstract retrieval."""

from .tagging import (
    CLAIM_SCHEME,
    PIO_SCHEME,
    CharSpan,
    LabelSequence,
    PIOCategory,
    Token,
    bio_to_spans,
    repair_labels,
    spans_to_bio,
    token_prf,
    tokenize,
)
from .corpus import (
    AnnotatedPost,
    ClaimRecord,
    CorpusStats,
    EvidenceAbstract,
    corpus_stats,
    mask_corpus,
    read_records,
    split_train_val,
    write_records,
)
from .features import FeatureDictionary, build_feature_dict, extract_features, pos_tag
from .crf import CRFModel, TrainConfig, forward_logZ, nll_gradient, train, viterbi
from .bm25 import BM25Index, RankedList, analyze, build_index, make_query, search
from .dense import VectorStore, build_training_pairs, load_vectors, top_k
from .evaluation import graded_counts, precision_at_k, read_qrels

__version__ = "0.1.0"

__all__ = [
    "AnnotatedPost",
    "BM25Index",
    "CLAIM_SCHEME",
    "CRFModel",
    "CharSpan",
    "ClaimRecord",
    "CorpusStats",
    "EvidenceAbstract",
    "FeatureDictionary",
    "LabelSequence",
    "PIOCategory",
    "PIO_SCHEME",
    "RankedList",
    "Token",
    "TrainConfig",
    "VectorStore",
    "analyze",
    "bio_to_spans",
    "build_feature_dict",
    "build_index",
    "build_training_pairs",
    "corpus_stats",
    "extract_features",
    "forward_logZ",
    "graded_counts",
    "load_vectors",
    "make_query",
    "mask_corpus",
    "nll_gradient",
    "pos_tag",
    "precision_at_k",
    "read_qrels",
    "read_records",
    "repair_labels",
    "search",
    "spans_to_bio",
    "split_train_val",
    "token_prf",
    "tokenize",
    "top_k",
    "train",
    "viterbi",
    "write_records",
]
