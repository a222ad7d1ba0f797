"""Small text helpers shared by the baseline model, mock provider, and prompts."""

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_LINE_BREAKS = re.compile(r"[\r\n]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def flatten_line(text: str) -> str:
    """Collapse line breaks to spaces so a message occupies one prompt line."""
    return _LINE_BREAKS.sub(" ", text)
