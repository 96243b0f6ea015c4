"""Lexical substrate shared by the metric and indexing modules.

Tokenization rules (fixed so that every similarity number is reproducible):

* Primary lexer is the standard Python tokenizer.  The code token stream
  keeps identifiers, keywords, numbers, string literals, operators and
  punctuation; comments, newlines, indentation and whitespace-only error
  tokens are dropped.  String literals stay single tokens.
* Input that the Python tokenizer rejects (unterminated triple quotes,
  inconsistent dedents, ...) falls back to a regex split on word runs and
  individual punctuation characters.  The fallback never fails.
* Shingles are contiguous runs of 5 code tokens.  Sequences shorter than
  the shingle width contribute their whole token sequence as one shingle;
  an empty sequence contributes no shingles.
"""

from __future__ import annotations

import io
import re
import tokenize
from collections import Counter

SHINGLE_WIDTH = 5

_SKIP_TOKEN_TYPES = frozenset(
    {
        tokenize.COMMENT,
        tokenize.NL,
        tokenize.NEWLINE,
        tokenize.INDENT,
        tokenize.DEDENT,
        tokenize.ENDMARKER,
    }
)

_FALLBACK_TOKEN = re.compile(r"\w+|[^\w\s]")

# Comment leaders stripped during normalization.  '#' covers Python; the
# rest show up in headers pasted from other ecosystems.
_COMMENT_LEADER = re.compile(r"^[#/*\-;!%]+")
_WHITESPACE_RUN = re.compile(r"\s+")


def tokenize_code(text: str) -> list[str]:
    """Lex ``text`` into the code token stream.

    Deterministic; never raises.  Returns an empty list for empty or
    whitespace-only input.
    """
    if not text or text.isspace():
        return []
    try:
        tokens = []
        for tok in tokenize.generate_tokens(io.StringIO(text).readline):
            if tok.type in _SKIP_TOKEN_TYPES:
                continue
            if not tok.string or tok.string.isspace():
                continue
            tokens.append(tok.string)
        return tokens
    except (tokenize.TokenError, IndentationError, SyntaxError, ValueError):
        return _FALLBACK_TOKEN.findall(text)


def shingles(tokens: list[str], width: int = SHINGLE_WIDTH) -> set[tuple[str, ...]]:
    """Shingle set of a token sequence.

    Fewer than ``width`` tokens yield the whole sequence as a single
    shingle; no tokens yield the empty set.
    """
    if not tokens:
        return set()
    if len(tokens) < width:
        return {tuple(tokens)}
    return {tuple(tokens[i : i + width]) for i in range(len(tokens) - width + 1)}


def normalize_comment(raw: str) -> str:
    """Normalize one comment: drop leaders, trim, collapse whitespace runs."""
    text = _COMMENT_LEADER.sub("", raw.strip())
    return _WHITESPACE_RUN.sub(" ", text).strip()


def comment_multiset(text: str) -> Counter[str]:
    """Multiset of normalized comments in ``text`` (full-line and trailing).

    Uses the Python tokenizer; on unlexable input falls back to a per-line
    scan that honours quote state within the line.  String literals
    (including docstrings) are never reported as comments.
    """
    counts: Counter[str] = Counter()
    for raw in _iter_raw_comments(text):
        normalized = normalize_comment(raw)
        if normalized:
            counts[normalized] += 1
    return counts


def _iter_raw_comments(text: str) -> list[str]:
    if not text:
        return []
    try:
        return [
            tok.string
            for tok in tokenize.generate_tokens(io.StringIO(text).readline)
            if tok.type == tokenize.COMMENT
        ]
    except (tokenize.TokenError, IndentationError, SyntaxError, ValueError):
        return [c for c in map(_scan_line_comment, text.splitlines()) if c is not None]


def _scan_line_comment(line: str) -> str | None:
    """Best-effort comment detection for one line of unlexable text."""
    quote: str | None = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote is not None:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return line[i:]
        i += 1
    return None
