"""Per-token feature template for the sequence tagger.

Each token yields its lowercased surface form, its POS tag, four orthographic
predicates, and a +/-3 window of neighboring words and POS tags. Out-of-range
window slots emit boundary sentinels (BOS@d / EOS@d) so the set of templates
at a position never depends on the sentence.

POS tags come either from an external parallel column (passed through
verbatim) or from a small deterministic heuristic tagger over a closed
coarse tag set.
"""

from __future__ import annotations

import hashlib
import json

from .tagging import Token

COARSE_TAGS = (
    "NOUN", "VERB", "ADJ", "ADV", "NUM", "PRON",
    "DET", "ADP", "CONJ", "PUNCT", "OTHER",
)

WINDOW_OFFSETS = (-3, -2, -1, 1, 2, 3)

_LEXICON: dict[str, str] = {}
for _word in (
    "i you he she it we they me him her us them my your his its our their "
    "this that these those myself yourself himself herself itself ourselves "
    "themselves who whom whose which what someone anyone everyone nothing"
).split():
    _LEXICON[_word] = "PRON"
for _word in "a an the some any no every each either neither".split():
    _LEXICON[_word] = "DET"
for _word in (
    "of in on at by for with from to into onto over under about after "
    "before between during through against without within across upon "
    "among around since until toward towards off up down out near"
).split():
    _LEXICON[_word] = "ADP"
for _word in (
    "and or but nor so yet because although though while if when than "
    "whether unless once whereas"
).split():
    _LEXICON[_word] = "CONJ"
for _word in (
    "be am is are was were been being have has had having do does did done "
    "doing will would can could shall should may might must get got gets "
    "getting take took taken takes make made makes go went gone goes say "
    "said says see saw seen feel felt feels know knew known think thought "
    "use used try tried help helped work worked start started stop stopped "
    "need needed want wanted keep kept read heard hear tell told found find"
).split():
    _LEXICON[_word] = "VERB"
for _word in (
    "not very too also just only really quite never always often sometimes "
    "here there now then soon already still again almost maybe perhaps"
).split():
    _LEXICON[_word] = "ADV"

# Longest suffix wins; checked in order.
_SUFFIX_RULES = (
    ("tion", "NOUN"), ("sion", "NOUN"), ("ment", "NOUN"), ("ness", "NOUN"),
    ("ity", "NOUN"), ("ism", "NOUN"),
    ("able", "ADJ"), ("ible", "ADJ"), ("less", "ADJ"), ("ful", "ADJ"),
    ("ous", "ADJ"), ("ive", "ADJ"), ("ical", "ADJ"), ("ic", "ADJ"),
    ("ing", "VERB"), ("ed", "VERB"),
    ("ly", "ADV"),
)

_NUM_EXTRA = set(".,%-/")


def _token_text(token) -> str:
    return token.text if isinstance(token, Token) else token


def _is_numeric_token(text: str) -> bool:
    stripped = [ch for ch in text if ch not in _NUM_EXTRA]
    return bool(stripped) and all(ch.isdigit() for ch in stripped)


def _heuristic_tag(text: str) -> str:
    if not any(ch.isalnum() for ch in text):
        return "PUNCT"
    if _is_numeric_token(text):
        return "NUM"
    lower = text.lower()
    if lower in _LEXICON:
        return _LEXICON[lower]
    if any(ch.isdigit() for ch in text):
        return "OTHER"
    for suffix, tag in _SUFFIX_RULES:
        if len(lower) > len(suffix) + 1 and lower.endswith(suffix):
            return tag
    return "NOUN"


def pos_tag(tokens: list, provided: list[str] | None = None) -> list[str]:
    """Tag every token; externally supplied tags pass through verbatim."""
    if provided is not None:
        if len(provided) != len(tokens):
            raise ValueError(
                f"provided {len(provided)} POS tags for {len(tokens)} tokens"
            )
        return list(provided)
    return [_heuristic_tag(_token_text(t)) for t in tokens]


def extract_features(tokens: list, pos: list[str], i: int) -> list[str]:
    """Feature strings for token i: surface, POS, orthography, +/-3 window."""
    if not 0 <= i < len(tokens):
        raise IndexError(f"token index {i} out of range for {len(tokens)} tokens")
    text = _token_text(tokens[i])
    feats = [
        f"word={text.lower()}",
        f"pos={pos[i]}",
        f"is_alnum={int(text.isalnum())}",
        f"is_upper={int(text.isupper())}",
        f"is_numeric={int(text.isnumeric())}",
        f"is_title={int(text.istitle())}",
    ]
    for d in WINDOW_OFFSETS:
        j = i + d
        if 0 <= j < len(tokens):
            feats.append(f"word@{d:+d}={_token_text(tokens[j]).lower()}")
            feats.append(f"pos@{d:+d}={pos[j]}")
        elif j < 0:
            feats.append(f"BOS@{d:+d}")
        else:
            feats.append(f"EOS@{d:+d}")
    return feats


def sequence_features(tokens: list, pos: list[str] | None = None) -> list[list[str]]:
    """Feature strings for every position; POS defaults to the heuristic tagger."""
    tags = pos_tag(tokens, pos)
    return [extract_features(tokens, tags, i) for i in range(len(tokens))]


def parse_feature(feature: str) -> tuple[str, str]:
    """Split a feature string into (template name, value); sentinels map to value 1."""
    if "=" in feature:
        name, _, value = feature.partition("=")
        return name, value
    return feature, "1"


class FeatureDictionary:
    """Bijection between feature strings and contiguous integer ids."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._features: list[str] = []
        self.frozen = False

    def __len__(self) -> int:
        return len(self._features)

    def __contains__(self, feature: str) -> bool:
        return feature in self._ids

    def add(self, feature: str) -> int:
        if feature in self._ids:
            return self._ids[feature]
        if self.frozen:
            raise ValueError(f"dictionary frozen; cannot add {feature!r}")
        idx = len(self._features)
        self._ids[feature] = idx
        self._features.append(feature)
        return idx

    def freeze(self) -> "FeatureDictionary":
        self.frozen = True
        return self

    def feature(self, idx: int) -> str:
        return self._features[idx]

    def encode(self, features: list[str]) -> list[int]:
        """Map feature strings to ids; unknown features are silently dropped."""
        return [self._ids[f] for f in features if f in self._ids]

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for idx, feat in enumerate(self._features):
            digest.update(f"{feat}\t{idx}\n".encode("utf-8"))
        return digest.hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for idx, feat in enumerate(self._features):
                fh.write(json.dumps({"feature": feat, "id": idx}) + "\n")

    @classmethod
    def load(cls, path) -> "FeatureDictionary":
        fdict = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if obj["id"] != len(fdict._features):
                    raise ValueError(f"{path}:{lineno}: ids must be contiguous")
                fdict.add(obj["feature"])
        return fdict.freeze()


def build_feature_dict(corpus: list[tuple[list, list[str] | None]]) -> FeatureDictionary:
    """Assign ids to every feature string in first-seen order, then freeze."""
    if not corpus:
        raise ValueError("cannot build a feature dictionary from an empty corpus")
    fdict = FeatureDictionary()
    for tokens, pos in corpus:
        for feats in sequence_features(tokens, pos):
            for feat in feats:
                fdict.add(feat)
    return fdict.freeze()
