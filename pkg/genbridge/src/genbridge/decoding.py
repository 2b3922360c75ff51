"""Constrained decoding over the generator model.

Two strategies: multinomial sampling from the temperature-scaled
distribution, and contrastive search, which rescores the top candidates by
probability minus a degeneration penalty (maximum cosine similarity between
the candidate's hidden state and every previously emitted one).

Hard constraints enforced during decoding: the end token is banned until the
minimum length is reached, generation stops at the maximum length, and any
token completing an already-seen n-gram of the configured size is banned.
When every token is banned the request fails with an error record instead of
emitting a constraint-violating claim.
"""

from __future__ import annotations

import numpy as np

from .config import DecodingConfig, GenerationRequest, render_prompt
from .model import BOS, EOS, UNK, TinySeq2Seq

# conventional contrastive-search candidate pool and degeneration weight
CONTRASTIVE_TOP_K = 4
CONTRASTIVE_ALPHA = 0.6


def _banned_by_ngram(generated: list[int], n: int) -> set[int]:
    """Tokens that would complete a repeat of an n-gram already generated."""
    if n == 1:
        return set(generated)
    if len(generated) < n - 1:
        return set()
    prefix = tuple(generated[-(n - 1):])
    banned = set()
    for i in range(len(generated) - n + 1):
        if tuple(generated[i : i + n - 1]) == prefix:
            banned.add(generated[i + n - 1])
    return banned


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    return probs / probs.sum()


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom > 0 else 0.0


def generate_tokens(
    model: TinySeq2Seq,
    prompt: str,
    config: DecodingConfig,
    rng: np.random.Generator,
) -> list[int] | None:
    """Token ids of one generated claim, or None when constraints dead-end."""
    prompt_vec = model.prompt_vector(prompt)
    generated: list[int] = []
    hiddens: list[np.ndarray] = []
    prev = BOS
    while len(generated) < config.max_length:
        logits, _ = model.step(prompt_vec, prev)
        logits = logits.copy()
        if config.repetition_penalty != 1.0:
            for tok in set(generated):
                if logits[tok] > 0:
                    logits[tok] /= config.repetition_penalty
                else:
                    logits[tok] *= config.repetition_penalty
        banned = {BOS, UNK}
        banned |= _banned_by_ngram(generated, config.no_repeat_ngram_size)
        if len(generated) < config.min_length:
            banned.add(EOS)
        logits[sorted(banned)] = -np.inf
        if not np.isfinite(logits).any():
            return None
        scaled = logits / config.temperature
        probs = _softmax(scaled)
        if config.strategy == "multinomial":
            choice = int(rng.choice(len(probs), p=probs))
        else:
            order = np.argsort(-probs, kind="stable")
            candidates = [int(i) for i in order[:CONTRASTIVE_TOP_K] if probs[i] > 0]
            choice, best = candidates[0], -np.inf
            for cand in candidates:
                _, h_cand = model.step(prompt_vec, cand)
                penalty = max(
                    (_cosine(h_cand, h) for h in hiddens), default=0.0
                )
                score = (1 - CONTRASTIVE_ALPHA) * float(probs[cand])
                score -= CONTRASTIVE_ALPHA * penalty
                if score > best:
                    choice, best = cand, score
        if choice == EOS:
            break
        _, h_choice = model.step(prompt_vec, choice)
        generated.append(choice)
        hiddens.append(h_choice)
        prev = choice
    return generated


def generate_claims(
    requests: list[GenerationRequest],
    config: DecodingConfig,
    model: TinySeq2Seq,
    seed: int = 0,
) -> list[dict]:
    """One output record per request, in input order.

    A request that cannot satisfy the decoding constraints produces a record
    with an "error" field; processing continues with the next request.
    """
    if config.num_beams != 1:
        raise ValueError(
            "only single-beam decoding is supported; the published "
            "configurations all use one beam"
        )
    rng = np.random.default_rng(seed)
    cfg_hash = config.hash()
    records = []
    for request in requests:
        prompt = render_prompt(request)
        token_ids = generate_tokens(model, prompt, config, rng)
        if token_ids is None or len(token_ids) < config.min_length:
            records.append({
                "prompt_id": request.prompt_id,
                "error": "no admissible token under the decoding constraints",
            })
            continue
        claim = model.join_tokens([model.vocab[i] for i in token_ids])
        records.append({
            "prompt_id": request.prompt_id,
            "claim": claim,
            "config_hash": cfg_hash,
        })
    return records
