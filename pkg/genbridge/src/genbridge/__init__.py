"""Bridge wrapping a small sequence-to-sequence generator behind JSONL contracts."""

from .config import (
    BYTE_LEVEL_CONFIG,
    TOKEN_LEVEL_CONFIG,
    DecodingConfig,
    GenerationRequest,
    check_claims,
    check_claims_file,
    read_claims,
    read_prompts,
    render_prompt,
    write_claims,
)
from .decoding import generate_claims, generate_tokens
from .model import (
    TinySeq2Seq,
    TrainSettings,
    finetune_generator,
    read_training_pairs,
)

__version__ = "0.1.0"

__all__ = [
    "BYTE_LEVEL_CONFIG",
    "DecodingConfig",
    "GenerationRequest",
    "TOKEN_LEVEL_CONFIG",
    "TinySeq2Seq",
    "TrainSettings",
    "check_claims",
    "check_claims_file",
    "finetune_generator",
    "generate_claims",
    "generate_tokens",
    "read_claims",
    "read_prompts",
    "read_training_pairs",
    "render_prompt",
    "write_claims",
]
