"""License identification, categorization, and answer grading.

Detection is keyword/rule based over a table shipped as package data
(``data/license_rules.json``), so new licenses are added without code
changes.  Matching runs on a "flattened" view of the header: comment
leaders stripped per line, whitespace runs collapsed, case ignored.
This makes findings independent of comment style and of where a notice
happens to be line-wrapped.

Precedence: explicit ``SPDX-License-Identifier`` tags win outright; in
their absence full-name phrase rules and short keyword rules both
contribute, so a file carrying two different notices is detected as
dual-licensed.
"""

from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources

_SPDX_TAG = re.compile(
    r"SPDX-License-Identifier:?\s*"
    r"(?P<expr>[A-Za-z0-9][A-Za-z0-9.+-]*(?:\s+(?:OR|AND)\s+[A-Za-z0-9][A-Za-z0-9.+-]*)*)",
    re.IGNORECASE,
)
_SPDX_SPLIT = re.compile(r"\s+(?:OR|AND)\s+", re.IGNORECASE)
_SUFFIX = re.compile(r"-(?:only|or-later)$")

_REFINE_WINDOW = 300  # flattened chars after a base match searched for refinements


class LicenseCategory(str, Enum):
    PERMISSIVE = "permissive"
    WEAK_COPYLEFT = "weak-copyleft"
    STRONG_COPYLEFT = "strong-copyleft"

    @property
    def is_copyleft(self) -> bool:
        return self is not LicenseCategory.PERMISSIVE


@dataclass(frozen=True)
class LicenseFinding:
    """Licenses detected in one file header."""

    spdx_ids: tuple[str, ...] = ()
    evidence: tuple[tuple[str, int], ...] = ()  # (pattern name, 0-based line)

    @property
    def is_dual(self) -> bool:
        return len(set(self.spdx_ids)) >= 2

    @property
    def is_empty(self) -> bool:
        return not self.spdx_ids


@dataclass(frozen=True)
class GradeResult:
    """Outcome of comparing a model's license claim against ground truth."""

    claimed_ids: tuple[str, ...]
    correct: bool
    mode: str  # "strict" | "family"


@dataclass(frozen=True)
class _HeaderRule:
    name: str
    pattern: re.Pattern
    spdx_id: str
    refine: tuple[tuple[re.Pattern, str], ...] = ()


@dataclass(frozen=True)
class _RuleTable:
    categories: dict[str, LicenseCategory]
    spdx_aliases: dict[str, str]  # lowercased alias -> canonical id
    header_rules: tuple[_HeaderRule, ...]
    mention_rules: tuple[tuple[str, re.Pattern, str], ...]
    bare_id_rule: re.Pattern = field(repr=False, default=None)  # type: ignore[assignment]


@lru_cache(maxsize=1)
def _load_rules() -> _RuleTable:
    raw = json.loads(resources.files("licokit.data").joinpath("license_rules.json").read_text("utf-8"))
    categories = {sid: LicenseCategory(cat) for sid, cat in raw["categories"].items()}
    aliases = {alias.lower(): target for alias, target in raw["spdx_aliases"].items()}

    header_rules = tuple(
        _HeaderRule(
            name=entry["name"],
            pattern=re.compile(entry["pattern"], re.IGNORECASE),
            spdx_id=entry["spdx_id"],
            refine=tuple(
                (re.compile(ref["pattern"], re.IGNORECASE), ref["spdx_id"])
                for ref in entry.get("refine", ())
            ),
        )
        for entry in raw["header_rules"]
    )
    mention_rules = tuple(
        (entry["name"], re.compile(entry["pattern"], re.IGNORECASE), entry["spdx_id"])
        for entry in raw["mention_patterns"]
    )

    # One alternation over canonical ids and aliases, longest first so
    # e.g. GPL-2.0-or-later is never shadowed by its GPL-2.0 prefix.
    # Trailing sentence punctuation is fine; alnum, hyphenated suffixes
    # and ".<digit>" version continuations are not.
    names = sorted(set(categories) | set(raw["spdx_aliases"]), key=len, reverse=True)
    bare = re.compile(
        r"(?<![A-Za-z0-9.])(?:" + "|".join(re.escape(n) for n in names) + r")(?![A-Za-z0-9+-])(?!\.[0-9])",
        re.IGNORECASE,
    )
    return _RuleTable(categories, aliases, header_rules, mention_rules, bare)


def supported_licenses() -> tuple[str, ...]:
    """Canonical SPDX ids the rule table can detect and grade."""
    return tuple(sorted(_load_rules().categories))


def categorize(spdx_id: str) -> LicenseCategory:
    """Fixed id -> category mapping; unknown ids are an error."""
    table = _load_rules()
    canonical = _canonical_id(spdx_id, table)
    if canonical is None:
        raise ValueError(
            f"unknown license id {spdx_id!r}; supported: {', '.join(sorted(table.categories))}"
        )
    return table.categories[canonical]


def family_key(spdx_id: str) -> str:
    """License family plus version: the id with -only/-or-later stripped."""
    return _SUFFIX.sub("", spdx_id)


def _canonical_id(candidate: str, table: _RuleTable) -> str | None:
    for sid in table.categories:
        if sid.lower() == candidate.lower():
            return sid
    return table.spdx_aliases.get(candidate.lower())


# ---------------------------------------------------------------------------
# Header flattening
# ---------------------------------------------------------------------------

_LEADER = re.compile(r"^[\s#/*;!%-]*")
_WS_RUN = re.compile(r"\s+")


def _flatten(text: str) -> tuple[str, list[int], list[int]]:
    """Strip comment leaders and collapse whitespace, keeping a map from
    flattened offsets back to 0-based source line numbers."""
    pieces: list[str] = []
    piece_lines: list[int] = []
    for lineno, line in enumerate(text.splitlines()):
        stripped = _WS_RUN.sub(" ", _LEADER.sub("", line)).strip()
        if stripped:
            pieces.append(stripped)
            piece_lines.append(lineno)
    flat = " ".join(pieces)
    starts: list[int] = []
    pos = 0
    for piece in pieces:
        starts.append(pos)
        pos += len(piece) + 1
    return flat, starts, piece_lines


def _line_of(offset: int, starts: list[int], piece_lines: list[int]) -> int:
    if not starts:
        return 0
    idx = bisect.bisect_right(starts, offset) - 1
    return piece_lines[max(idx, 0)]


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

def detect_header_license(header_comments: str) -> LicenseFinding:
    """Identify licenses declared in a file-header comment block.

    Returns an empty finding when nothing matches; never raises.
    """
    if not header_comments.strip():
        return LicenseFinding()
    table = _load_rules()

    # Level 1: explicit SPDX tags, scanned line by line on the raw text.
    tag_hits: list[tuple[int, str, int]] = []  # (order, id, line)
    for lineno, line in enumerate(header_comments.splitlines()):
        for match in _SPDX_TAG.finditer(line):
            for part in _SPDX_SPLIT.split(match.group("expr")):
                canonical = _canonical_id(part.strip(), table)
                if canonical is not None:
                    tag_hits.append((len(tag_hits), canonical, lineno))
    if tag_hits:
        ids: list[str] = []
        evidence: list[tuple[str, int]] = []
        for _, sid, lineno in tag_hits:
            if sid not in ids:
                ids.append(sid)
            evidence.append(("spdx-tag", lineno))
        return LicenseFinding(tuple(ids), tuple(evidence))

    # Levels 2 and 3: phrase and keyword rules on the flattened header.
    flat, starts, piece_lines = _flatten(header_comments)
    hits: list[tuple[int, str, str]] = []  # (flat offset, id, rule name)
    for rule in table.header_rules:
        match = rule.pattern.search(flat)
        if match is None:
            continue
        spdx_id = rule.spdx_id
        window = flat[match.start() : match.end() + _REFINE_WINDOW]
        for ref_pattern, ref_id in rule.refine:
            if ref_pattern.search(window):
                spdx_id = ref_id
        hits.append((match.start(), spdx_id, rule.name))

    hits.sort()
    ids = []
    evidence = []
    for offset, sid, name in hits:
        if sid not in ids:
            ids.append(sid)
        evidence.append((name, _line_of(offset, starts, piece_lines)))
    return LicenseFinding(tuple(ids), tuple(evidence))


def parse_license_mention(free_text: str) -> list[str]:
    """SPDX ids mentioned in free-form model text, deduplicated in order
    of first mention.

    Recognizes bare SPDX ids and aliases, conversational forms such as
    "GPLv3" or "Apache License 2.0", and the header rule table applied to
    the flattened text.
    """
    if not free_text.strip():
        return []
    table = _load_rules()
    flat, _, _ = _flatten(free_text)

    hits: list[tuple[int, int, str]] = []  # (start, -length, id)
    for match in table.bare_id_rule.finditer(flat):
        canonical = _canonical_id(match.group(0), table)
        if canonical is not None:
            hits.append((match.start(), -len(match.group(0)), canonical))
    for _name, pattern, spdx_id in table.mention_rules:
        for match in pattern.finditer(flat):
            if _is_guarded(flat, match.start(), match.end()):
                hits.append((match.start(), -len(match.group(0)), spdx_id))
    for rule in table.header_rules:
        match = rule.pattern.search(flat)
        if match is None:
            continue
        spdx_id = rule.spdx_id
        window = flat[match.start() : match.end() + _REFINE_WINDOW]
        for ref_pattern, ref_id in rule.refine:
            if ref_pattern.search(window):
                spdx_id = ref_id
        hits.append((match.start(), -len(match.group(0)), spdx_id))

    # Longest match at each position wins; drop matches nested inside a
    # longer earlier one (e.g. the GPL inside AGPL-3.0).
    hits.sort()
    ordered: list[str] = []
    covered_end = -1
    for start, neg_len, spdx_id in hits:
        end = start - neg_len
        if start < covered_end and end <= covered_end:
            continue
        covered_end = max(covered_end, end)
        if spdx_id not in ordered:
            ordered.append(spdx_id)
    return ordered


def _is_guarded(flat: str, start: int, end: int) -> bool:
    """Reject alias matches glued to alphanumeric context (AGPL vs GPL).

    Sentence punctuation after a match is fine; a ".<digit>" continuation
    (a longer version number) is not.
    """
    before = flat[start - 1] if start > 0 else " "
    after = flat[end] if end < len(flat) else " "
    if before.isalnum() or before in ".-":
        return False
    if after.isalnum() or after == "-":
        return False
    if after == "." and end + 1 < len(flat) and flat[end + 1].isdigit():
        return False
    return True


# ---------------------------------------------------------------------------
# Grading
# ---------------------------------------------------------------------------

def grade_license_answer(claimed: list[str], truth: str, mode: str = "family") -> GradeResult:
    """Grade a model's license claim against the ground-truth license.

    strict: exactly one distinct claimed id, equal to truth.
    family (default): exactly one distinct claimed id whose family and
    major version match truth, ignoring -only/-or-later suffixes.
    Empty or ambiguous (multi-license) claims are incorrect.
    """
    if mode not in ("strict", "family"):
        raise ValueError(f"unknown grading mode {mode!r}")
    table = _load_rules()
    if _canonical_id(truth, table) is None:
        raise ValueError(f"truth license {truth!r} is not in the supported table")

    distinct: list[str] = []
    for cid in claimed:
        canonical = _canonical_id(cid, table) or cid
        if canonical not in distinct:
            distinct.append(canonical)

    if len(distinct) != 1:
        return GradeResult(tuple(distinct), False, mode)
    claim = distinct[0]
    truth_canonical = _canonical_id(truth, table)
    if mode == "strict":
        correct = claim == truth_canonical
    else:
        correct = family_key(claim) == family_key(truth_canonical)
    return GradeResult(tuple(distinct), correct, mode)
