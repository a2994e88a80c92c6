"""Token accounting used for response lengths, budgets, and novelty.

One tokenizer is used everywhere a response length or a token budget is
involved so that costs, budgets, and transcripts all agree on what a
"token" is.
"""

from __future__ import annotations

import string

_EDGE_CHARS = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace-delimited tokens, punctuation stripped at the edges.

    Chunks that are pure punctuation vanish: "The answer is B." gives
    ["the", "answer", "is", "b"].
    """
    out = []
    for chunk in text.lower().split():
        tok = chunk.strip(_EDGE_CHARS)
        if tok:
            out.append(tok)
    return out


def count_tokens(text: str) -> int:
    return len(tokenize(text))


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Keep at most ``max_tokens`` whitespace-delimited chunks of ``text``.

    Text within the limit is returned unchanged, preserving its original
    whitespace; longer text is cut and rejoined with single spaces.
    """
    chunks = text.split()
    if len(chunks) <= max_tokens:
        return text
    return " ".join(chunks[:max_tokens])
