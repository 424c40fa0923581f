"""Offset-preserving tokenizer shared by the disfluency engine and the metrics.

The rule is fixed so that span offsets and diversity numbers are reproducible:
whitespace-separated chunks with punctuation detached as separate tokens.
Ellipsis runs ("...", "…") and dashes ("—", "–", "--") are single tokens, since
the pause and false-start rules key on them. Apostrophes stay word-internal
("we're", "let's"); digit groups keep internal separators ("6:30", "3.2").
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(
    r"\.{3,}|…"                      # ellipsis runs
    r"|—|–|--"                       # em dash, en dash, double hyphen
    r"|\d+(?:[.:,]\d+)*"             # numbers: 7, 6:30, 3.2, 1,000
    r"|[^\W\d_]+(?:['’][^\W\d_]+)*"  # words, apostrophes internal
    r"|\S"                           # any remaining symbol, one char
)

_WORD_RE = re.compile(r"[^\W_]", re.UNICODE)


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int

    @property
    def is_word(self) -> bool:
        """True for word/number tokens, False for pure punctuation."""
        return bool(_WORD_RE.search(self.text))

    @property
    def norm(self) -> str:
        return self.text.casefold()


def tokenize(text: str) -> list[Token]:
    """Tokenize text into offset-annotated tokens (punctuation detached)."""
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def word_tokens(text: str) -> list[Token]:
    """Only the word tokens, punctuation dropped (offsets preserved)."""
    return [t for t in tokenize(text) if t.is_word]


def metric_tokens(text: str, lowercase: bool = True) -> list[str]:
    """Token strings for metric computation; punctuation kept as tokens."""
    toks = [t.text for t in tokenize(text)]
    return [t.casefold() for t in toks] if lowercase else toks
