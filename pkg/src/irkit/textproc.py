"""Shared text processing: tokenization, stopwords, token-set overlap.

One tokenizer serves both the retrieval indexes and the step matcher so
that component labels, screen names, and issue text all land in the same
token space.
"""

import re

# Fixed 35-word stopword list. Deliberately small: token-set overlap is
# already forgiving and we must not eat domain words like "save" or "back".
STOPWORDS = frozenset([
    "a", "an", "the", "and", "or", "but", "if", "then", "else", "when",
    "at", "by", "for", "with", "about", "against", "between", "into",
    "through", "to", "from", "in", "on", "of", "is", "are", "was", "were",
    "be", "been", "it", "its", "this", "that", "these",
])

_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_NON_ALNUM_RE = re.compile(r"[^A-Za-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens: split on non-alphanumerics, camelCase and
    snake_case boundaries; stopwords and single-character tokens dropped.
    """
    tokens = []
    for chunk in _NON_ALNUM_RE.split(text):
        if not chunk:
            continue
        for part in _CAMEL_RE.split(chunk):
            tok = part.lower()
            if len(tok) > 1 and tok not in STOPWORDS:
                tokens.append(tok)
    return tokens


def token_set_f1(a: set[str], b: set[str]) -> float:
    """Token-set F1: 2|A∩B| / (|A| + |B|); 0.0 when either side is empty."""
    if not a or not b:
        return 0.0
    inter = len(a & b)
    return 2.0 * inter / (len(a) + len(b))
