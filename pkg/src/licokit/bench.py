"""Benchmark construction and empirical-study group sampling.

Benchmark pipeline, in order: single-license files only, sorted by reuse
count (descending, content-hash tiebreak), snippet extraction, study
eligibility plus the striking-similarity preconditions (body lines > 10,
complexity > 3, at least one body comment), provenance-marker exclusion,
signature+docstring dedup keeping the first by sort order, truncation to
the top k.  Nested functions are dropped whenever their enclosing
function was already selected, so the same text never enters twice.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from licokit.corpus import CorpusFile
from licokit.extract import (
    EligibilityRules,
    FunctionSnippet,
    SnippetMetrics,
    eligibility_filter,
    parse_source,
)
from licokit.licenses import LicenseCategory, categorize, detect_header_license
from licokit.minhash import (
    DEFAULT_SEED,
    CorpusIndex,
    LshIndex,
    exact_jaccard,
    filter_unseen,
    minhash_signature,
    shingle_set,
)
from licokit.lexing import tokenize_code
from licokit.similarity import StrikingStandard
from licokit.stats import StatResult, compare_samples

logger = logging.getLogger(__name__)

PROVENANCE_MARKERS = ("copied from", "taken from", "adapted from")

STUDY_FEATURES = ("prompt_lines", "body_lines", "cyclomatic_complexity", "comment_count")


@dataclass(frozen=True)
class BenchConfig:
    top_k: int = 10_000
    min_reuse: int = 1
    seed: int = 0

    def to_dict(self) -> dict:
        return {"top_k": self.top_k, "min_reuse": self.min_reuse, "seed": self.seed}


@dataclass(frozen=True)
class BenchmarkItem:
    snippet: FunctionSnippet
    license: str | None
    category: LicenseCategory | None
    reuse_count: int

    def to_dict(self) -> dict:
        return {
            "id": self.snippet.id,
            "header_comments": self.snippet.header_comments,
            "imports_globals": self.snippet.imports_globals,
            "signature": self.snippet.signature,
            "docstring": self.snippet.docstring,
            "body": self.snippet.body,
            "license": self.license,
            "category": self.category.value,
            "metrics": self.snippet.metrics.to_dict(),
            "reuse_count": self.reuse_count,
            "source_path": self.snippet.source_path,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkItem":
        snippet = FunctionSnippet(
            id=data["id"],
            header_comments=data["header_comments"],
            imports_globals=data["imports_globals"],
            signature=data["signature"],
            docstring=data["docstring"],
            body=data["body"],
            source_path=data["source_path"],
            metrics=SnippetMetrics.from_dict(data["metrics"]),
            reuse_count=int(data["reuse_count"]),
        )
        return cls(
            snippet=snippet,
            license=data["license"],
            category=LicenseCategory(data["category"]),
            reuse_count=int(data["reuse_count"]),
        )


def meets_striking_preconditions(
    snippet: FunctionSnippet, standard: StrikingStandard | None = None
) -> bool:
    standard = standard or StrikingStandard()
    m = snippet.metrics
    return (
        m.body_lines > standard.min_body_lines
        and m.cyclomatic_complexity > standard.min_complexity
        and m.comment_count > 0
    )


def has_provenance_marker(snippet: FunctionSnippet) -> bool:
    text = (snippet.prompt_text + snippet.body).lower()
    return any(marker in text for marker in PROVENANCE_MARKERS)


def build_benchmark(files: list[CorpusFile], config: BenchConfig | None = None) -> list[BenchmarkItem]:
    """Construct benchmark items from an ingested corpus.

    Deterministic for a fixed (corpus, config).  Emits a warning and a
    short list when the corpus cannot fill top_k.
    """
    config = config or BenchConfig()
    if not files:
        logger.warning("empty corpus: benchmark will be empty")
        return []

    licensed: list[tuple[CorpusFile, str]] = []
    for item in files:
        if (item.reuse_count or 1) < config.min_reuse:
            continue
        snippets = parse_source(item.content, item.path, reuse_count=item.reuse_count or 1)
        if not snippets:
            continue
        finding = detect_header_license(snippets[0].header_comments)
        if len(set(finding.spdx_ids)) != 1:
            continue  # unlicensed or dual-licensed file
        licensed.append((item, finding.spdx_ids[0]))

    licensed.sort(key=lambda pair: (-(pair[0].reuse_count or 1), pair[0].content_hash))

    rules = EligibilityRules()
    items: list[BenchmarkItem] = []
    selected_ids: set[str] = set()
    seen_keys: set[tuple[str, str]] = set()
    for corpus_file, spdx_id in licensed:
        for snippet in parse_source(
            corpus_file.content, corpus_file.path, reuse_count=corpus_file.reuse_count or 1
        ):
            if snippet.parent_id in selected_ids:
                continue
            if not eligibility_filter(snippet, rules):
                continue
            if not meets_striking_preconditions(snippet):
                continue
            if has_provenance_marker(snippet):
                continue
            key = (snippet.signature.strip(), snippet.docstring.strip())
            if key in seen_keys:
                continue
            finding = detect_header_license(snippet.header_comments)
            assert not finding.is_dual, "dual-licensed file survived the single-license filter"
            seen_keys.add(key)
            selected_ids.add(snippet.id)
            items.append(
                BenchmarkItem(
                    snippet=snippet,
                    license=spdx_id,
                    category=categorize(spdx_id),
                    reuse_count=snippet.reuse_count,
                )
            )
            if len(items) >= config.top_k:
                return items

    if len(items) < config.top_k:
        logger.warning("corpus yields %d qualifying snippets (top_k=%d)", len(items), config.top_k)
    return items


def write_benchmark(items: list[BenchmarkItem], path: str | Path, meta: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        if meta is not None:
            handle.write(json.dumps({"kind": "header", **meta}, sort_keys=True) + "\n")
        for item in items:
            handle.write(json.dumps(item.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def load_benchmark(path: str | Path) -> tuple[dict, list[BenchmarkItem]]:
    header: dict = {}
    items = []
    with Path(path).open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if obj.get("kind") == "header":
                header = obj
                continue
            try:
                items.append(BenchmarkItem.from_dict(obj))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad benchmark record: {exc}") from exc
    return header, items


# ---------------------------------------------------------------------------
# Study groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyGroups:
    accessed: list[FunctionSnippet]
    unseen: list[FunctionSnippet]
    n_per_group: int


def as_protocol_items(snippets: list[FunctionSnippet]) -> list[BenchmarkItem]:
    """Wrap study snippets for the two-turn runner.

    Study items carry no license ground truth, so the runner scores
    similarity and striking verdicts but never issues the license inquiry.
    """
    return [
        BenchmarkItem(snippet=s, license=None, category=None, reuse_count=s.reuse_count)
        for s in snippets
    ]


def _dedup_within(snippets: list[FunctionSnippet], threshold: float = 0.2) -> list[FunctionSnippet]:
    """Greedy internal near-duplicate removal at the exact-Jaccard threshold.

    Iterates in id order; a snippet joins the pool only if it is not a
    near-match of anything already kept.
    """
    lsh = LshIndex()
    kept: list[FunctionSnippet] = []
    shingle_sets: dict[str, frozenset] = {}
    for snippet in sorted(snippets, key=lambda s: s.id):
        tokens = tokenize_code(snippet.body)
        own = shingle_set(tokens)
        signature = minhash_signature(tokens, lsh.seed)
        near = False
        for other_id in lsh.query(signature, exclude=snippet.id):
            if exact_jaccard(own, shingle_sets[other_id]) > threshold:
                near = True
                break
        if near:
            continue
        kept.append(snippet)
        shingle_sets[snippet.id] = own
        lsh.insert(snippet.id, signature)
    return kept


def _sample_group(
    pool: list[FunctionSnippet], n: int, rng: random.Random, label: str
) -> list[FunctionSnippet]:
    """Seeded sample honouring the nested-function rule: a nested function
    is skipped when its enclosing function is already in the sample."""
    shuffled = sorted(pool, key=lambda s: s.id)
    rng.shuffle(shuffled)
    chosen: list[FunctionSnippet] = []
    chosen_ids: set[str] = set()
    for snippet in shuffled:
        if snippet.parent_id in chosen_ids:
            continue
        chosen.append(snippet)
        chosen_ids.add(snippet.id)
        if len(chosen) == n:
            break
    if len(chosen) < n:
        logger.warning("%s group has only %d eligible snippets (wanted %d)", label, len(chosen), n)
    return sorted(chosen, key=lambda s: s.id)


def build_study_groups(
    accessed_snippets: list[FunctionSnippet],
    restricted_snippets: list[FunctionSnippet],
    index: CorpusIndex,
    n_per_group: int = 200,
    seed: int = DEFAULT_SEED,
    rules: EligibilityRules | None = None,
    jaccard_threshold: float = 0.2,
) -> StudyGroups:
    """Accessed/Unseen sample groups for the similarity study.

    Accessed: seeded sample of eligible snippets from the accessed corpus.
    Unseen: eligible snippets from the restricted corpus that survive
    near-duplicate filtering against the accessed-corpus index.  Both
    groups are internally deduplicated at the same threshold.
    """
    rules = rules or EligibilityRules()
    rng = random.Random(seed)

    accessed_pool = _dedup_within(
        [s for s in accessed_snippets if eligibility_filter(s, rules)], jaccard_threshold
    )
    accessed = _sample_group(accessed_pool, n_per_group, rng, "accessed")

    unseen_eligible = [s for s in restricted_snippets if eligibility_filter(s, rules)]
    unseen_survivors = filter_unseen(unseen_eligible, index, jaccard_threshold)
    unseen_pool = _dedup_within(unseen_survivors, jaccard_threshold)
    unseen = _sample_group(unseen_pool, n_per_group, rng, "unseen")

    overlap = {s.id for s in accessed} & {s.id for s in unseen}
    if overlap:
        raise AssertionError(f"study groups overlap on ids: {sorted(overlap)[:5]}")
    return StudyGroups(accessed=accessed, unseen=unseen, n_per_group=n_per_group)


def feature_stats(groups: StudyGroups) -> dict[str, dict]:
    """Per-feature summary of both groups plus the two-sample tests."""
    if not groups.accessed or not groups.unseen:
        raise ValueError("feature_stats requires non-empty groups")

    def summary(values: list[float]) -> dict:
        ordered = sorted(values)
        mid = len(ordered) // 2
        median = ordered[mid] if len(ordered) % 2 else (ordered[mid - 1] + ordered[mid]) / 2
        return {
            "min": ordered[0],
            "median": median,
            "mean": sum(ordered) / len(ordered),
            "max": ordered[-1],
        }

    table: dict[str, dict] = {}
    for feature in STUDY_FEATURES:
        accessed = [float(getattr(s.metrics, feature)) for s in groups.accessed]
        unseen = [float(getattr(s.metrics, feature)) for s in groups.unseen]
        result: StatResult = compare_samples(unseen, accessed)
        table[feature] = {
            "unseen": summary(unseen),
            "accessed": summary(accessed),
            **result.to_dict(),
        }
    return table


def render_feature_stats(table: dict[str, dict]) -> str:
    lines = [
        "| feature | group | min | median | mean | max | p-value | delta | effect |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for feature, row in table.items():
        for group in ("unseen", "accessed"):
            stats = row[group]
            lines.append(
                f"| {feature} | {group} | {stats['min']:g} | {stats['median']:g} "
                f"| {stats['mean']:.1f} | {stats['max']:g} "
                f"| {row['p_value']:.3g} | {row['cliffs_delta']:.3f} | {row['effect_level']} |"
            )
    return "\n".join(lines) + "\n"
