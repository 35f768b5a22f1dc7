"""Text cleanup applied before embedding, in a fixed order: strip URLs,
split hashtags into words, expand contractions, drop handles and bare
numbers, lower-case, collapse whitespace."""

from __future__ import annotations

import re

_URL = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
_HANDLE = re.compile(r"@\w+")
_NUMBER = re.compile(r"\b\d+(?:[.,]\d+)*\b")
_HASHTAG = re.compile(r"#(\w+)")
_WS = re.compile(r"\s+")

# word-level irregulars checked before the generic suffix rules
_IRREGULAR = {
    "won't": "will not",
    "can't": "cannot",
    "shan't": "shall not",
    "ain't": "is not",
    "let's": "let us",
}

# generic clitic suffixes, longest first
_SUFFIXES = (
    ("n't", " not"),
    ("'ll", " will"),
    ("'re", " are"),
    ("'ve", " have"),
    ("'m", " am"),
    ("'d", " would"),
    ("'s", " is"),
)


def _split_hashtag(match: re.Match) -> str:
    """#CamelCase2024Tag -> 'Camel Case 2024 Tag'. All-lowercase tags are
    kept as a single word (no dictionary segmentation)."""
    body = match.group(1)
    parts = re.findall(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+", body)
    return " ".join(parts) if parts else body


def _expand_contractions(text: str) -> str:
    def expand_word(match: re.Match) -> str:
        word = match.group(0)
        low = word.lower()
        if low in _IRREGULAR:
            return _IRREGULAR[low]
        for suffix, repl in _SUFFIXES:
            if low.endswith(suffix) and len(low) > len(suffix):
                return word[: len(word) - len(suffix)] + repl
        return word

    return re.sub(r"[A-Za-z]+(?:'[A-Za-z]+)+", expand_word, text)


def preprocess(text: str) -> str:
    """Normalized text, or the empty string when nothing survives."""
    text = _URL.sub(" ", text)
    text = _HASHTAG.sub(_split_hashtag, text)
    text = _expand_contractions(text)
    text = _HANDLE.sub(" ", text)
    text = _NUMBER.sub(" ", text)
    text = text.lower()
    return _WS.sub(" ", text).strip()
