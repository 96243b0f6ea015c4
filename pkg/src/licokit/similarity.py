"""Pairwise similarity metrics and the striking-similarity verdict.

All three text metrics operate on code token sequences (comments
excluded; see ``licokit.lexing``) and live in [0, 1].  Comment overlap
is measured separately as the multiset intersection of normalized body
comments, keeping the two signals independent.

Conventions: two empty inputs score 1.0 (identical emptiness), one
empty input scores 0.0.  BLEU smoothing replaces any zero n-gram
precision with 1e-9, so token-disjoint pairs score ~0 without a single
missing 4-gram zeroing everything out.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from licokit.extract import SnippetMetrics, extract_body_comments
from licokit.lexing import shingles, tokenize_code

TokenSeq = list[str]

BLEU_EPSILON = 1e-9


def tokenize(code: str) -> TokenSeq:
    """Code token sequence for metric computation (see lexing rules)."""
    return tokenize_code(code)


@dataclass(frozen=True)
class SimilarityScores:
    """All similarity signals for one (generated, reference) body pair."""

    bleu4: float
    jaccard: float
    edit_sim: float
    identical_comments: int

    @property
    def max_sim(self) -> float:
        return max(self.bleu4, self.jaccard, self.edit_sim)

    def to_dict(self) -> dict:
        return {
            "bleu4": self.bleu4,
            "jaccard": self.jaccard,
            "edit_sim": self.edit_sim,
            "max_sim": self.max_sim,
            "identical_comments": self.identical_comments,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimilarityScores":
        return cls(
            bleu4=float(data["bleu4"]),
            jaccard=float(data["jaccard"]),
            edit_sim=float(data["edit_sim"]),
            identical_comments=int(data["identical_comments"]),
        )


@dataclass(frozen=True)
class StrikingStandard:
    """Thresholds of the four-criterion standard; all strictly exceeded.

    The first two criteria describe the reference snippet, the last two
    the relationship between generation and reference.
    """

    min_body_lines: int = 10
    min_complexity: int = 3
    sim_threshold: float = 0.6
    min_identical_comments: int = 0

    def to_dict(self) -> dict:
        return {
            "min_body_lines": self.min_body_lines,
            "min_complexity": self.min_complexity,
            "sim_threshold": self.sim_threshold,
            "min_identical_comments": self.min_identical_comments,
        }


@dataclass(frozen=True)
class StrikingVerdict:
    is_striking: bool
    scores: SimilarityScores
    reference_metrics: SnippetMetrics
    standard: StrikingStandard
    failed_criteria: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "is_striking": self.is_striking,
            "failed_criteria": list(self.failed_criteria),
            "standard": self.standard.to_dict(),
        }


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _ngram_counts(tokens: TokenSeq, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: TokenSeq, reference: TokenSeq) -> float:
    """BLEU with modified n-gram precisions up to 4 and brevity penalty.

    The n-gram orders used are capped at the shorter sequence's length,
    so 3-token pairs are scored on 1..3-grams.  Zero precisions are
    replaced by BLEU_EPSILON rather than zeroing the geometric mean.
    """
    if not candidate and not reference:
        return 1.0
    if not candidate or not reference:
        return 0.0

    max_n = min(4, len(candidate), len(reference))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        ref_counts = _ngram_counts(reference, n)
        clipped = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        total = sum(cand_counts.values())
        precision = clipped / total if total else 0.0
        log_sum += math.log(precision if precision > 0.0 else BLEU_EPSILON)

    c, r = len(candidate), len(reference)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return min(1.0, brevity * math.exp(log_sum / max_n))


def jaccard_5gram(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Exact Jaccard similarity over 5-token shingle sets."""
    a, b = shingles(candidate), shingles(reference)
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 1.0


def edit_similarity(candidate: TokenSeq, reference: TokenSeq) -> float:
    """1 - ED/max(len) with token-level unit-cost Levenshtein distance."""
    longest = max(len(candidate), len(reference))
    if longest == 0:
        return 1.0
    return 1.0 - _levenshtein(candidate, reference) / longest


def _levenshtein(a: TokenSeq, b: TokenSeq) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                current.append(previous[j - 1])
            else:
                current.append(1 + min(previous[j - 1], previous[j], current[-1]))
        previous = current
    return previous[-1]


def identical_comment_count(generated_body: str, reference_body: str) -> int:
    """Size of the multiset intersection of normalized body comments."""
    gen = Counter(extract_body_comments(generated_body))
    ref = Counter(extract_body_comments(reference_body))
    return sum((gen & ref).values())


def similarity_report(generated_body: str, reference_body: str) -> SimilarityScores:
    """All similarity signals between a generated and a reference body."""
    cand = tokenize(generated_body)
    ref = tokenize(reference_body)
    return SimilarityScores(
        bleu4=bleu4(cand, ref),
        jaccard=jaccard_5gram(cand, ref),
        edit_sim=edit_similarity(cand, ref),
        identical_comments=identical_comment_count(generated_body, reference_body),
    )


def classify_striking(
    reference_metrics: SnippetMetrics,
    scores: SimilarityScores,
    standard: StrikingStandard | None = None,
) -> StrikingVerdict:
    """Apply the four-criterion standard (all strict inequalities).

    ``reference_metrics`` must come from the ground-truth snippet, not
    from the generation.
    """
    standard = standard or StrikingStandard()
    failed = []
    if not reference_metrics.body_lines > standard.min_body_lines:
        failed.append("body_lines")
    if not reference_metrics.cyclomatic_complexity > standard.min_complexity:
        failed.append("cyclomatic_complexity")
    if not scores.max_sim > standard.sim_threshold:
        failed.append("max_sim")
    if not scores.identical_comments > standard.min_identical_comments:
        failed.append("identical_comments")
    return StrikingVerdict(
        is_striking=not failed,
        scores=scores,
        reference_metrics=reference_metrics,
        standard=standard,
        failed_criteria=tuple(failed),
    )
