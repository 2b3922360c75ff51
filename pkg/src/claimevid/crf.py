"""Linear-chain CRF over sparse binary token features.

The chain potential of a labeling y for a T-token sequence is

    score(x, y) = start[y_0] + sum_t E[t, y_t] + sum_t T[y_{t-1}, y_t] + end[y_{T-1}]

where E[t] is the sum of emission weight rows for the features active at
token t. All dynamic programs run in log space. Weights start at zero
(the objective is convex), so the training seed only orders mini-batches.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .features import FeatureDictionary, sequence_features
from .tagging import SCHEMES, LabelScheme, LabelSequence

MODEL_FORMAT_VERSION = 1

OPTIMIZERS = ("adam", "sgd")

FeatureSeq = list  # list of per-token integer id arrays


@dataclass
class TrainConfig:
    batch_size: int = 8
    max_epochs: int = 20
    patience: int = 3
    learning_rate: float = 1e-5
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


class CRFModel:
    """Emission, transition, and boundary weights for one label scheme."""

    def __init__(
        self,
        scheme: LabelScheme,
        feature_dict: FeatureDictionary,
        l2: float = 1e-2,
    ) -> None:
        self.scheme = scheme
        self.feature_dict = feature_dict
        self.l2 = float(l2)
        n_labels = len(scheme)
        self.W = np.zeros((len(feature_dict), n_labels))
        self.T = np.zeros((n_labels, n_labels))
        self.start = np.zeros(n_labels)
        self.end = np.zeros(n_labels)
        self.history: dict | None = None

    @property
    def n_labels(self) -> int:
        return len(self.scheme)

    def weights(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "T": self.T, "start": self.start, "end": self.end}

    def copy_weights(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.weights().items()}

    def set_weights(self, weights: dict[str, np.ndarray]) -> None:
        for key, value in weights.items():
            getattr(self, key)[...] = value

    def emissions(self, feats: FeatureSeq) -> np.ndarray:
        """Per-token emission score matrix of shape (T, n_labels)."""
        out = np.zeros((len(feats), self.n_labels))
        for t, ids in enumerate(feats):
            if len(ids):
                out[t] = self.W[np.asarray(ids, dtype=np.intp)].sum(axis=0)
        return out


def _logsumexp(a: np.ndarray, axis: int | None = None):
    if axis is None:
        m = float(np.max(a))
        return m + math.log(float(np.sum(np.exp(a - m))))
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _label_ids(model: CRFModel, labels) -> list[int]:
    if isinstance(labels, LabelSequence):
        if labels.scheme is not model.scheme:
            raise ValueError(
                f"labels use scheme {labels.scheme.name!r}, "
                f"model uses {model.scheme.name!r}"
            )
        return labels.ids()
    ids = list(labels)
    for y in ids:
        if not 0 <= y < model.n_labels:
            raise ValueError(f"label id {y} outside scheme {model.scheme.name!r}")
    return ids


def sequence_score(model: CRFModel, feats: FeatureSeq, labels) -> float:
    """Unnormalized log-potential of one labeling."""
    ids = _label_ids(model, labels)
    if len(ids) != len(feats):
        raise ValueError(
            f"{len(feats)} feature vectors but {len(ids)} labels"
        )
    if not ids:
        raise ValueError("empty sequence")
    E = model.emissions(feats)
    score = model.start[ids[0]] + model.end[ids[-1]]
    score += sum(E[t, y] for t, y in enumerate(ids))
    score += sum(model.T[a, b] for a, b in zip(ids, ids[1:]))
    return float(score)


def forward_logZ(model: CRFModel, feats: FeatureSeq) -> float:
    """Log partition over all labelings, via the forward recursion."""
    if not feats:
        raise ValueError("empty sequence")
    E = model.emissions(feats)
    alpha = model.start + E[0]
    for t in range(1, len(feats)):
        alpha = E[t] + _logsumexp(alpha[:, None] + model.T, axis=0)
    return float(_logsumexp(alpha + model.end))


def backward_logZ(model: CRFModel, feats: FeatureSeq) -> float:
    """Log partition via the backward recursion; must agree with forward."""
    if not feats:
        raise ValueError("empty sequence")
    E = model.emissions(feats)
    beta = model.end.copy()
    for t in range(len(feats) - 2, -1, -1):
        beta = _logsumexp(model.T + (E[t + 1] + beta)[None, :], axis=1)
    return float(_logsumexp(model.start + E[0] + beta))


def forward_backward(
    model: CRFModel, feats: FeatureSeq
) -> tuple[float, np.ndarray, np.ndarray]:
    """logZ plus node marginals (T, L) and edge marginals (T-1, L, L)."""
    if not feats:
        raise ValueError("empty sequence")
    T_len, L = len(feats), model.n_labels
    E = model.emissions(feats)
    alphas = np.zeros((T_len, L))
    alphas[0] = model.start + E[0]
    for t in range(1, T_len):
        alphas[t] = E[t] + _logsumexp(alphas[t - 1][:, None] + model.T, axis=0)
    betas = np.zeros((T_len, L))
    betas[-1] = model.end
    for t in range(T_len - 2, -1, -1):
        betas[t] = _logsumexp(model.T + (E[t + 1] + betas[t + 1])[None, :], axis=1)
    log_z = float(_logsumexp(alphas[-1] + model.end))
    node = np.exp(alphas + betas - log_z)
    edge = np.zeros((max(T_len - 1, 0), L, L))
    for t in range(1, T_len):
        edge[t - 1] = np.exp(
            alphas[t - 1][:, None]
            + model.T
            + (E[t] + betas[t])[None, :]
            - log_z
        )
    return log_z, node, edge


def viterbi(model: CRFModel, feats: FeatureSeq) -> LabelSequence:
    """Highest-scoring labeling; ties resolve to the lowest label index."""
    if not feats:
        raise ValueError("empty sequence")
    E = model.emissions(feats)
    delta = model.start + E[0]
    backptr = []
    for t in range(1, len(feats)):
        scores = delta[:, None] + model.T
        backptr.append(np.argmax(scores, axis=0))
        delta = E[t] + np.max(scores, axis=0)
    best = int(np.argmax(delta + model.end))
    path = [best]
    for bp in reversed(backptr):
        path.append(int(bp[path[-1]]))
    path.reverse()
    return LabelSequence.from_ids(model.scheme, path)


def nll_gradient(
    model: CRFModel, batch: list[tuple[FeatureSeq, list]]
) -> tuple[float, dict[str, np.ndarray]]:
    """Regularized negative log-likelihood and its exact gradient over a batch.

    The gradient of each weight is (expected count under the model) minus
    (empirical count in the gold labels) plus the l2 term.
    """
    if not batch:
        raise ValueError("empty batch")
    grads = {k: np.zeros_like(v) for k, v in model.weights().items()}
    loss = 0.0
    for si, (feats, labels) in enumerate(batch):
        ids = _label_ids(model, labels)
        log_z, node, edge = forward_backward(model, feats)
        gold = sequence_score(model, feats, ids)
        if not (math.isfinite(log_z) and math.isfinite(gold)):
            raise ValueError(f"non-finite potential in sequence {si}")
        loss += log_z - gold
        for t, fids in enumerate(feats):
            if len(fids):
                fids = np.asarray(fids, dtype=np.intp)
                np.add.at(grads["W"], fids, node[t])
                np.add.at(grads["W"][:, ids[t]], fids, -1.0)
        if len(feats) > 1:
            grads["T"] += edge.sum(axis=0)
            for a, b in zip(ids, ids[1:]):
                grads["T"][a, b] -= 1.0
        grads["start"] += node[0]
        grads["start"][ids[0]] -= 1.0
        grads["end"] += node[-1]
        grads["end"][ids[-1]] -= 1.0
    l2 = model.l2
    if l2:
        for key, param in model.weights().items():
            loss += 0.5 * l2 * float(np.sum(param * param))
            grads[key] += l2 * param
    return float(loss), grads


def data_nll(model: CRFModel, dataset: list[tuple[FeatureSeq, list]]) -> float:
    """Unregularized negative log-likelihood; the early-stopping criterion."""
    total = 0.0
    for feats, labels in dataset:
        total += forward_logZ(model, feats) - sequence_score(model, feats, labels)
    return total


class _Optimizer:
    def __init__(self, kind: str, lr: float, params: dict[str, np.ndarray]):
        self.kind = kind
        self.lr = lr
        self.step_count = 0
        if kind == "adam":
            self.m = {k: np.zeros_like(v) for k, v in params.items()}
            self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.step_count += 1
        if self.kind == "sgd":
            for key in params:
                params[key] -= self.lr * grads[key]
            return
        b1, b2, eps = 0.9, 0.999, 1e-8
        for key in params:
            self.m[key] = b1 * self.m[key] + (1 - b1) * grads[key]
            self.v[key] = b2 * self.v[key] + (1 - b2) * grads[key] ** 2
            m_hat = self.m[key] / (1 - b1 ** self.step_count)
            v_hat = self.v[key] / (1 - b2 ** self.step_count)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + eps)


def train(
    train_data: list[tuple[FeatureSeq, list]],
    val_data: list[tuple[FeatureSeq, list]],
    config: TrainConfig,
    *,
    scheme: LabelScheme,
    feature_dict: FeatureDictionary,
    l2: float = 1e-2,
) -> CRFModel:
    """Mini-batch training with early stopping on validation NLL.

    Returns the weights from the best validation epoch. Deterministic for a
    fixed config: weights start at zero and the seed only shuffles batches.
    """
    if not train_data or not val_data:
        raise ValueError("train and validation sets must be non-empty")
    if not feature_dict.frozen:
        raise ValueError("feature dictionary must be frozen before training")
    model = CRFModel(scheme, feature_dict, l2)
    params = model.weights()
    opt = _Optimizer(config.optimizer, config.learning_rate, params)
    rng = random.Random(config.seed)
    best_val = math.inf
    best_weights = model.copy_weights()
    bad_epochs = 0
    history: list[float] = []
    for epoch in range(1, config.max_epochs + 1):
        order = list(range(len(train_data)))
        rng.shuffle(order)
        for lo in range(0, len(order), config.batch_size):
            batch = [train_data[i] for i in order[lo : lo + config.batch_size]]
            try:
                loss, grads = nll_gradient(model, batch)
            except ValueError as exc:
                raise ValueError(f"epoch {epoch}: {exc}") from exc
            if not math.isfinite(loss):
                raise ValueError(f"training diverged at epoch {epoch}")
            opt.step(params, grads)
        val_nll = data_nll(model, val_data)
        if not math.isfinite(val_nll):
            raise ValueError(f"training diverged at epoch {epoch}")
        history.append(val_nll)
        if val_nll < best_val:
            best_val = val_nll
            best_weights = model.copy_weights()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    model.set_weights(best_weights)
    model.history = {"epochs_run": len(history), "val_nll": history}
    return model


def encode_example(
    tokens: list,
    labels,
    scheme: LabelScheme,
    feature_dict: FeatureDictionary,
    pos: list[str] | None = None,
) -> tuple[FeatureSeq, list[int]]:
    """Turn raw tokens and string labels into (feature id arrays, label ids)."""
    feats = [
        np.asarray(feature_dict.encode(fs), dtype=np.intp)
        for fs in sequence_features(tokens, pos)
    ]
    if isinstance(labels, LabelSequence):
        ids = labels.ids()
    else:
        ids = [scheme.index(lab) for lab in labels]
    return feats, ids


def save_model(model: CRFModel, path) -> None:
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "scheme": model.scheme.name,
        "labels": list(model.scheme.labels),
        "dict_hash": model.feature_dict.content_hash(),
        "dict_size": len(model.feature_dict),
        "l2": model.l2,
        "weights": {
            "W": model.W.tolist(),
            "T": model.T.tolist(),
            "start": model.start.tolist(),
            "end": model.end.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path, feature_dict: FeatureDictionary) -> CRFModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version: {payload.get('version')}")
    scheme = SCHEMES.get(payload["scheme"])
    if scheme is None or list(scheme.labels) != payload["labels"]:
        raise ValueError(f"unknown label scheme in model file: {payload['scheme']!r}")
    if payload["dict_hash"] != feature_dict.content_hash():
        raise ValueError("feature dictionary does not match the model file")
    model = CRFModel(scheme, feature_dict, payload["l2"])
    weights = payload["weights"]
    model.set_weights(
        {
            "W": np.asarray(weights["W"], dtype=float),
            "T": np.asarray(weights["T"], dtype=float),
            "start": np.asarray(weights["start"], dtype=float),
            "end": np.asarray(weights["end"], dtype=float),
        }
    )
    return model
