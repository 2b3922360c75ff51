"""Decoding configuration, JSONL wire formats, and the model-free checker.

The bridge talks to the rest of the pipeline through two files: a prompts
file of PIO element lists and a claims file of generated text. Every output
record carries a hash of the decoding configuration that produced it, and
the length/no-repeat constraints of a configuration can be verified over an
output file without loading any model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

STRATEGIES = ("contrastive", "multinomial")
UNITS = ("word", "char")


@dataclass(frozen=True)
class DecodingConfig:
    strategy: str = "contrastive"
    num_beams: int = 1
    min_length: int = 28
    max_length: int = 84
    temperature: float = 0.8
    repetition_penalty: float = 0.5
    no_repeat_ngram_size: int = 3

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )
        if self.min_length > self.max_length:
            raise ValueError(
                f"min_length {self.min_length} exceeds max_length {self.max_length}"
            )
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.no_repeat_ngram_size < 1:
            raise ValueError("no_repeat_ngram_size must be >= 1")
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2)

    @classmethod
    def load(cls, path) -> "DecodingConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


# Published settings for the token-level and byte-level generator families.
# A repetition penalty of 0.5 sits below the conventional neutral 1.0; it is
# surfaced exactly as published, which under the usual convention amplifies
# rather than dampens repetition.
TOKEN_LEVEL_CONFIG = DecodingConfig(
    strategy="contrastive", num_beams=1, min_length=28, max_length=84,
    temperature=0.8, repetition_penalty=0.5, no_repeat_ngram_size=3,
)
BYTE_LEVEL_CONFIG = DecodingConfig(
    strategy="contrastive", num_beams=1, min_length=56, max_length=256,
    temperature=0.5, repetition_penalty=0.5, no_repeat_ngram_size=15,
)


@dataclass
class GenerationRequest:
    prompt_id: str
    populations: list[str] = field(default_factory=list)
    interventions: list[str] = field(default_factory=list)
    outcomes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (self.populations or self.interventions or self.outcomes):
            raise ValueError(
                f"request {self.prompt_id!r}: all PIO element lists are empty"
            )


def render_prompt(request: GenerationRequest) -> str:
    """PIO elements joined by ', ' in population, intervention, outcome order."""
    elements = [
        e for e in (
            request.populations + request.interventions + request.outcomes
        )
        if e
    ]
    return ", ".join(elements)


def read_prompts(path) -> list[GenerationRequest]:
    requests = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            requests.append(
                GenerationRequest(
                    prompt_id=str(obj["prompt_id"]),
                    populations=list(obj.get("populations", [])),
                    interventions=list(obj.get("interventions", [])),
                    outcomes=list(obj.get("outcomes", [])),
                )
            )
    return requests


def write_claims(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_claims(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
    return records


def claim_tokens(claim: str, unit: str) -> list[str]:
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
    return claim.split() if unit == "word" else list(claim)


def check_claims(records: list[dict], config: DecodingConfig, unit: str) -> list[str]:
    """Verify length and no-repeat-ngram constraints; returns violations.

    Purely mechanical: needs only the emitted records and the configuration,
    never a model. Records carrying an "error" field are skipped.
    """
    violations = []
    n = config.no_repeat_ngram_size
    for record in records:
        if "error" in record:
            continue
        prompt_id = record.get("prompt_id", "?")
        claim = record.get("claim")
        if not isinstance(claim, str):
            violations.append(f"{prompt_id}: missing claim text")
            continue
        tokens = claim_tokens(claim, unit)
        if not config.min_length <= len(tokens) <= config.max_length:
            violations.append(
                f"{prompt_id}: length {len(tokens)} outside "
                f"[{config.min_length}, {config.max_length}]"
            )
        seen = set()
        for i in range(len(tokens) - n + 1):
            gram = tuple(tokens[i : i + n])
            if gram in seen:
                violations.append(
                    f"{prompt_id}: repeated {n}-gram {' '.join(gram)!r}"
                )
                break
            seen.add(gram)
    return violations


def check_claims_file(path, config: DecodingConfig, unit: str) -> list[str]:
    return check_claims(read_claims(path), config, unit)
