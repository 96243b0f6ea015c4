"""licokit: benchmark toolkit for license compliance of code-generating LLMs.

Pipeline: ingest a corpus, extract five-part function snippets, build a
benchmark of licensed non-trivial functions (or Accessed/Unseen study
groups), run a two-turn completion + license-inquiry protocol against a
model, classify striking similarity, and aggregate per-model compliance
scores.
"""

from licokit.extract import (
    EligibilityRules,
    FunctionSnippet,
    SnippetMetrics,
    cyclomatic_complexity,
    eligibility_filter,
    extract_body_comments,
    parse_source,
)
from licokit.licenses import (
    GradeResult,
    LicenseCategory,
    LicenseFinding,
    categorize,
    detect_header_license,
    grade_license_answer,
    parse_license_mention,
)
from licokit.similarity import (
    SimilarityScores,
    StrikingStandard,
    StrikingVerdict,
    bleu4,
    classify_striking,
    edit_similarity,
    identical_comment_count,
    jaccard_5gram,
    similarity_report,
    tokenize,
)
from licokit.minhash import (
    CorpusIndex,
    LshIndex,
    MinHashSignature,
    build_lsh_index,
    estimate_jaccard,
    filter_unseen,
    index_snippets,
    minhash_signature,
    query_candidates,
)
from licokit.bench import (
    BenchConfig,
    BenchmarkItem,
    StudyGroups,
    build_benchmark,
    build_study_groups,
    feature_stats,
)
from licokit.harness import (
    EvalRecord,
    RunnerConfig,
    build_completion_prompt,
    extract_generated_body,
    license_inquiry,
    run_benchmark,
)
from licokit.scoring import LiCoScore, aggregate, emit_report, lico
from licokit.stats import StatResult, cliffs_delta, mann_whitney_u

__version__ = "0.1.0"

__all__ = [
    "BenchConfig",
    "BenchmarkItem",
    "CorpusIndex",
    "EligibilityRules",
    "EvalRecord",
    "FunctionSnippet",
    "GradeResult",
    "LiCoScore",
    "LicenseCategory",
    "LicenseFinding",
    "LshIndex",
    "MinHashSignature",
    "RunnerConfig",
    "SimilarityScores",
    "SnippetMetrics",
    "StatResult",
    "StrikingStandard",
    "StrikingVerdict",
    "StudyGroups",
    "aggregate",
    "bleu4",
    "build_benchmark",
    "build_completion_prompt",
    "build_lsh_index",
    "build_study_groups",
    "categorize",
    "classify_striking",
    "cliffs_delta",
    "cyclomatic_complexity",
    "detect_header_license",
    "edit_similarity",
    "eligibility_filter",
    "emit_report",
    "estimate_jaccard",
    "extract_body_comments",
    "extract_generated_body",
    "feature_stats",
    "filter_unseen",
    "grade_license_answer",
    "identical_comment_count",
    "index_snippets",
    "jaccard_5gram",
    "lico",
    "license_inquiry",
    "mann_whitney_u",
    "minhash_signature",
    "parse_license_mention",
    "parse_source",
    "query_candidates",
    "run_benchmark",
    "similarity_report",
    "tokenize",
]
