"""A small trainable encoder-decoder used as the bridge's built-in generator.

The encoder pools embeddings of the prompt tokens; the decoder conditions on
that pooled vector plus the previous output token through one tanh layer.
Deliberately tiny: the bridge's job is faithful decoding behaviour and file
contracts, and large pretrained generators stay outside this package. Word-
and character-level variants cover token-level and byte-level generator
families.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .config import UNITS

MODEL_FORMAT_VERSION = 1

BOS, EOS, UNK = 0, 1, 2
SPECIALS = ("<bos>", "<eos>", "<unk>")


@dataclass
class TrainSettings:
    batch_size: int = 1
    max_epochs: int = 20
    learning_rate: float = 1e-4
    seed: int = 0
    stabilize_tol: float = 1e-4
    stabilize_patience: int = 2

    def __post_init__(self) -> None:
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class TinySeq2Seq:
    def __init__(self, vocab: list[str], unit: str, dim: int, seed: int = 0):
        if unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
        if list(vocab[:3]) != list(SPECIALS):
            raise ValueError("vocab must start with the special tokens")
        self.vocab = list(vocab)
        self.unit = unit
        self.dim = dim
        self.token_ids = {tok: i for i, tok in enumerate(self.vocab)}
        rng = np.random.default_rng(seed)
        v = len(self.vocab)
        self.enc_emb = rng.normal(0, 0.1, (v, dim))
        self.dec_emb = rng.normal(0, 0.1, (v, dim))
        self.b_h = np.zeros(dim)
        self.out_w = rng.normal(0, 0.1, (v, dim))
        self.out_b = np.zeros(v)
        self.history: dict | None = None

    # --- text <-> token ids ---------------------------------------------

    def split_text(self, text: str) -> list[str]:
        return text.split() if self.unit == "word" else list(text)

    def join_tokens(self, tokens: list[str]) -> str:
        return (" " if self.unit == "word" else "").join(tokens)

    def encode_text(self, text: str) -> list[int]:
        return [self.token_ids.get(tok, UNK) for tok in self.split_text(text)]

    @classmethod
    def build(cls, texts: list[str], unit: str, dim: int = 16, seed: int = 0):
        if unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
        tokens = set()
        for text in texts:
            tokens.update(text.split() if unit == "word" else list(text))
        vocab = list(SPECIALS) + sorted(tokens)
        return cls(vocab, unit, dim, seed)

    # --- forward ----------------------------------------------------------

    def prompt_vector(self, prompt: str) -> np.ndarray:
        ids = self.encode_text(prompt)
        if not ids:
            return np.zeros(self.dim)
        return self.enc_emb[ids].mean(axis=0)

    def step(self, prompt_vec: np.ndarray, prev_id: int):
        """Decoder step: returns (logits over vocab, hidden state)."""
        hidden = np.tanh(prompt_vec + self.dec_emb[prev_id] + self.b_h)
        logits = self.out_w @ hidden + self.out_b
        return logits, hidden

    def params(self) -> dict[str, np.ndarray]:
        return {
            "enc_emb": self.enc_emb,
            "dec_emb": self.dec_emb,
            "b_h": self.b_h,
            "out_w": self.out_w,
            "out_b": self.out_b,
        }

    # --- training ---------------------------------------------------------

    def example_loss_and_grads(self, prompt: str, target: str, want_grads=True):
        """Teacher-forced mean-per-token cross entropy and its gradients."""
        prompt_ids = self.encode_text(prompt)
        target_ids = self.encode_text(target) + [EOS]
        prevs = [BOS] + target_ids[:-1]
        p_vec = self.prompt_vector(prompt)
        n_steps = len(target_ids)
        grads = (
            {k: np.zeros_like(v) for k, v in self.params().items()}
            if want_grads
            else None
        )
        loss = 0.0
        for prev, target_id in zip(prevs, target_ids):
            logits, hidden = self.step(p_vec, prev)
            shifted = logits - logits.max()
            log_probs = shifted - math.log(float(np.exp(shifted).sum()))
            loss -= log_probs[target_id] / n_steps
            if not want_grads:
                continue
            d_logits = np.exp(log_probs)
            d_logits[target_id] -= 1.0
            d_logits /= n_steps
            grads["out_w"] += np.outer(d_logits, hidden)
            grads["out_b"] += d_logits
            d_pre = (self.out_w.T @ d_logits) * (1.0 - hidden * hidden)
            grads["b_h"] += d_pre
            grads["dec_emb"][prev] += d_pre
            if prompt_ids:
                for pid in prompt_ids:
                    grads["enc_emb"][pid] += d_pre / len(prompt_ids)
        return float(loss), grads

    def corpus_loss(self, pairs: list[tuple[str, str]]) -> float:
        total = 0.0
        for prompt, target in pairs:
            loss, _ = self.example_loss_and_grads(prompt, target, want_grads=False)
            total += loss
        return total / len(pairs)

    # --- persistence --------------------------------------------------------

    def save(self, path) -> None:
        payload = {
            "version": MODEL_FORMAT_VERSION,
            "unit": self.unit,
            "dim": self.dim,
            "vocab": self.vocab,
            "params": {k: v.tolist() for k, v in self.params().items()},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "TinySeq2Seq":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model version: {payload.get('version')}")
        model = cls(payload["vocab"], payload["unit"], payload["dim"])
        for key, value in payload["params"].items():
            getattr(model, key)[...] = np.asarray(value, dtype=float)
        return model


def read_training_pairs(path) -> list[tuple[str, str]]:
    """(prompt, claim) pairs from the pipeline's claims JSONL format.

    The prompt is the comma-joined PIO elements in population, intervention,
    outcome order; the claim text is the decoding target. Records with empty
    claim text are skipped.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            elements = [
                e
                for e in (
                    list(obj.get("populations", []))
                    + list(obj.get("interventions", []))
                    + list(obj.get("outcomes", []))
                )
                if e
            ]
            claim = obj.get("claim_text", "")
            if not elements:
                raise ValueError(f"{path}:{lineno}: no PIO elements")
            if claim:
                pairs.append((", ".join(elements), claim))
    return pairs


def finetune_generator(
    pairs: list[tuple[str, str]],
    settings: TrainSettings,
    out_path,
    unit: str = "word",
    dim: int = 16,
) -> TinySeq2Seq:
    """Gradient-descent fine-tuning on (prompt, claim) pairs; saves the artifact.

    Training halts when the corpus loss stabilizes (relative change below
    stabilize_tol for stabilize_patience consecutive epochs) or at the epoch
    cap, whichever comes first.
    """
    if not pairs:
        raise ValueError("no training pairs")
    texts = [p for p, _ in pairs] + [t for _, t in pairs]
    model = TinySeq2Seq.build(texts, unit, dim, seed=settings.seed)
    rng = random.Random(settings.seed)
    history: list[float] = []
    calm_epochs = 0
    for _epoch in range(settings.max_epochs):
        order = list(range(len(pairs)))
        rng.shuffle(order)
        for lo in range(0, len(order), settings.batch_size):
            batch = [pairs[i] for i in order[lo : lo + settings.batch_size]]
            grads = {k: np.zeros_like(v) for k, v in model.params().items()}
            for prompt, target in batch:
                _, g = model.example_loss_and_grads(prompt, target)
                for key in grads:
                    grads[key] += g[key] / len(batch)
            for key, param in model.params().items():
                param -= settings.learning_rate * grads[key]
        epoch_loss = model.corpus_loss(pairs)
        if not math.isfinite(epoch_loss):
            raise ValueError(f"training diverged at epoch {len(history) + 1}")
        if history:
            change = abs(history[-1] - epoch_loss) / max(1.0, abs(history[-1]))
            calm_epochs = calm_epochs + 1 if change < settings.stabilize_tol else 0
        history.append(epoch_loss)
        if calm_epochs >= settings.stabilize_patience:
            break
    model.history = {"epochs_run": len(history), "loss": history}
    model.save(out_path)
    return model
