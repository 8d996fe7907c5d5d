"""Identifier-aware source tokenizer.

The pipeline is model-independent, so it needs its own deterministic
tokenizer: text splits on whitespace and punctuation boundaries, and
camelCase / snake_case identifiers additionally expand into subtokens
while the original identifier token is kept.
"""
from __future__ import annotations

import re

# Word runs stay together; every other non-space character is its own token.
_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^A-Za-z0-9_\s]")

# Boundaries: lower/digit->Upper ("getFoo"), and acronym->word ("HTTPServer").
_CAMEL_BOUNDARY_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def split_with_separators(text: str) -> tuple[list[str], list[str]]:
    """Base lexical split into (tokens, separators).

    ``len(separators) == len(tokens) + 1`` and interleaving
    ``separators[0], tokens[0], separators[1], ...`` reconstructs the
    input exactly; separators are pure whitespace.
    """
    tokens: list[str] = []
    separators: list[str] = []
    last = 0
    for match in _TOKEN_RE.finditer(text):
        separators.append(text[last : match.start()])
        tokens.append(match.group())
        last = match.end()
    separators.append(text[last:])
    return tokens, separators


def split_identifier(token: str) -> list[str]:
    """Subtokens of one identifier: snake_case parts, then camelCase parts."""
    parts: list[str] = []
    for chunk in token.split("_"):
        if chunk:
            parts.extend(p for p in _CAMEL_BOUNDARY_RE.split(chunk) if p)
    return parts


def tokenize(text: str) -> list[str]:
    """Tokenize ``text``; identifiers that split also emit their subtokens.

    Deterministic; empty input yields an empty list.
    """
    out: list[str] = []
    base, _ = split_with_separators(text)
    for token in base:
        out.append(token)
        parts = split_identifier(token)
        if len(parts) > 1 or (parts and parts[0] != token):
            out.extend(parts)
    return out
