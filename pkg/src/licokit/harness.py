"""Two-turn evaluation protocol over a benchmark.

Turn one sends the snippet's first four parts (optionally preceded by one
fixed in-context exemplar) and asks for the function body.  The body is
extracted from the reply, scored against the ground-truth body, and
classified under the striking-similarity standard.  Only records that
meet the standard get the second turn: a fixed follow-up asking whether
the produced code derives from open-source code and under which license.

Every record is appended to a JSON-Lines journal as it completes; resumed
runs skip journaled snippet ids and refuse to mix configurations.  Item
failures are isolated: a transport failure after retries yields a record
with an error note instead of aborting the run.
"""

from __future__ import annotations

import hashlib
import json
import logging
import textwrap
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from licokit.bench import BenchmarkItem
from licokit.clients import Message, ModelClient, TransportError
from licokit.extract import SnippetMetrics, parse_source
from licokit.journal import Journal
from licokit.lexing import tokenize_code
from licokit.licenses import GradeResult, grade_license_answer, parse_license_mention
from licokit.similarity import (
    SimilarityScores,
    StrikingStandard,
    StrikingVerdict,
    classify_striking,
    similarity_report,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromptTemplates:
    version: str
    instruction: str
    inquiry: str
    exemplar_prompt: str
    exemplar_body: str


def load_templates(version: str = "v1") -> PromptTemplates:
    base = resources.files("licokit.data").joinpath("templates")
    try:
        instruction = base.joinpath(f"completion_{version}.txt").read_text("utf-8")
        inquiry = base.joinpath(f"inquiry_{version}.txt").read_text("utf-8")
        exemplar = json.loads(base.joinpath(f"exemplar_{version}.json").read_text("utf-8"))
    except FileNotFoundError as exc:
        raise ValueError(f"unknown template version {version!r}") from exc
    return PromptTemplates(
        version=version,
        instruction=instruction.strip(),
        inquiry=inquiry.strip(),
        exemplar_prompt=exemplar["prompt_text"],
        exemplar_body=exemplar["body_text"],
    )


def _fence(text: str) -> str:
    if not text.endswith("\n"):
        text += "\n"
    return "```python\n" + text + "```\n"


def build_completion_prompt(
    item: BenchmarkItem,
    templates: PromptTemplates,
    use_exemplar: bool = True,
) -> list[dict[str, str]]:
    """System instruction plus one user message with parts 1-4 verbatim."""
    user = ""
    if use_exemplar:
        user += templates.exemplar_prompt + _fence(templates.exemplar_body) + "\n"
    user += item.snippet.prompt_text
    return [
        {"role": "system", "content": templates.instruction},
        {"role": "user", "content": user},
    ]


# ---------------------------------------------------------------------------
# Body extraction
# ---------------------------------------------------------------------------

_FENCE_OPEN = "```"


def _fenced_blocks(text: str) -> list[str]:
    blocks = []
    lines = text.splitlines(keepends=True)
    inside = False
    current: list[str] = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith(_FENCE_OPEN):
            if inside:
                blocks.append("".join(current))
                current = []
                inside = False
            else:
                inside = True
            continue
        if inside:
            current.append(line)
    if inside and current:
        blocks.append("".join(current))  # unterminated fence
    return blocks


def _normalize_signature(signature: str) -> str:
    return "".join(signature.split())


def extract_generated_body(raw_completion: str, signature: str) -> tuple[str, str]:
    """Pull the function body out of a first-turn reply.

    Returns (body, path) where path records how the body was found:
    'matched_def' when the reply re-emits a definition whose signature
    matches (whitespace-insensitive) and its body is taken, 'fenced' for
    the first fenced block verbatim, 'raw' for the whole reply, 'empty'
    for a blank reply.
    """
    if not raw_completion.strip():
        return "", "empty"

    blocks = _fenced_blocks(raw_completion)
    candidates = blocks if blocks else [raw_completion]
    want = _normalize_signature(signature)

    for candidate in candidates:
        try:
            snippets = parse_source(textwrap.dedent(candidate), "<completion>")
        except Exception:  # defensive; parse_source should not raise
            snippets = []
        for snippet in snippets:
            if _normalize_signature(snippet.signature) == want:
                return snippet.body, "matched_def"

    if blocks:
        return blocks[0], "fenced"
    return raw_completion, "raw"


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalRecord:
    """One benchmark item's full protocol transcript and grading."""

    snippet_id: str
    model: str
    prompt_text: str = ""
    raw_completion: str = ""
    generated_body: str = ""
    extraction_path: str = ""
    scores: SimilarityScores | None = None
    verdict: StrikingVerdict | None = None
    inquiry_text: str = ""
    inquiry_response: str = ""
    grade: GradeResult | None = None
    truth_license: str | None = None
    truth_category: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    attempts: int = 0
    elapsed_s: float = 0.0
    error: str | None = None

    @property
    def reference_metrics(self) -> SnippetMetrics | None:
        return self.verdict.reference_metrics if self.verdict is not None else None

    def to_dict(self, include_volatile: bool = True) -> dict:
        data = {
            "snippet_id": self.snippet_id,
            "model": self.model,
            "prompt_text": self.prompt_text,
            "raw_completion": self.raw_completion,
            "generated_body": self.generated_body,
            "extraction_path": self.extraction_path,
            "scores": self.scores.to_dict() if self.scores else None,
            "verdict": None,
            "inquiry_text": self.inquiry_text,
            "inquiry_response": self.inquiry_response,
            "grade": None,
            "truth_license": self.truth_license,
            "truth_category": self.truth_category,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "attempts": self.attempts,
            "error": self.error,
        }
        if self.verdict is not None:
            data["verdict"] = {
                **self.verdict.to_dict(),
                "reference_metrics": self.verdict.reference_metrics.to_dict(),
            }
        if self.grade is not None:
            data["grade"] = {
                "claimed_ids": list(self.grade.claimed_ids),
                "correct": self.grade.correct,
                "mode": self.grade.mode,
            }
        if include_volatile:
            data["elapsed_s"] = self.elapsed_s
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        scores = SimilarityScores.from_dict(data["scores"]) if data.get("scores") else None
        verdict = None
        if data.get("verdict"):
            v = data["verdict"]
            std = v["standard"]
            verdict = StrikingVerdict(
                is_striking=v["is_striking"],
                scores=scores,
                reference_metrics=SnippetMetrics.from_dict(v["reference_metrics"]),
                standard=StrikingStandard(
                    min_body_lines=std["min_body_lines"],
                    min_complexity=std["min_complexity"],
                    sim_threshold=std["sim_threshold"],
                    min_identical_comments=std["min_identical_comments"],
                ),
                failed_criteria=tuple(v.get("failed_criteria", ())),
            )
        grade = None
        if data.get("grade"):
            g = data["grade"]
            grade = GradeResult(tuple(g["claimed_ids"]), g["correct"], g["mode"])
        return cls(
            snippet_id=data["snippet_id"],
            model=data["model"],
            prompt_text=data.get("prompt_text", ""),
            raw_completion=data.get("raw_completion", ""),
            generated_body=data.get("generated_body", ""),
            extraction_path=data.get("extraction_path", ""),
            scores=scores,
            verdict=verdict,
            inquiry_text=data.get("inquiry_text", ""),
            inquiry_response=data.get("inquiry_response", ""),
            grade=grade,
            truth_license=data.get("truth_license"),
            truth_category=data.get("truth_category"),
            prompt_tokens=data.get("prompt_tokens", 0),
            completion_tokens=data.get("completion_tokens", 0),
            attempts=data.get("attempts", 0),
            elapsed_s=data.get("elapsed_s", 0.0),
            error=data.get("error"),
        )


def export_canonical(records: Sequence[EvalRecord]) -> str:
    """Deterministic journal text: records sorted by snippet id, volatile
    timing fields dropped.  Byte-identical across reruns and concurrency
    levels for a deterministic transport."""
    lines = [
        json.dumps(r.to_dict(include_volatile=False), sort_keys=True, ensure_ascii=False)
        for r in sorted(records, key=lambda r: r.snippet_id)
    ]
    return "\n".join(lines) + "\n" if lines else ""


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunnerConfig:
    concurrency: int = 4
    retries: int = 2
    inquire: str = "striking"  # striking | all | never
    grading_mode: str = "family"
    use_exemplar: bool = True
    template_version: str = "v1"
    temperature: float = 0.0
    standard: StrikingStandard = field(default_factory=StrikingStandard)
    rate_limit_per_s: float | None = None
    resume: bool = False

    def result_dict(self) -> dict:
        """Settings that affect record content (execution knobs excluded)."""
        return {
            "inquire": self.inquire,
            "grading_mode": self.grading_mode,
            "use_exemplar": self.use_exemplar,
            "template_version": self.template_version,
            "temperature": self.temperature,
            "standard": self.standard.to_dict(),
        }


def config_hash(meta: dict) -> str:
    return hashlib.sha256(
        json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()[:16]


class _RateLimiter:
    def __init__(self, per_second: float | None):
        self._interval = 1.0 / per_second if per_second else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        if not self._interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if delay > 0:
            time.sleep(delay)


def _chat_with_retries(
    client: ModelClient,
    messages: Sequence[Message],
    config: RunnerConfig,
    limiter: _RateLimiter,
) -> tuple[str, int]:
    last: Exception | None = None
    for attempt in range(1, config.retries + 2):
        limiter.wait()
        try:
            return client.chat(messages, temperature=config.temperature), attempt
        except TransportError as exc:
            last = exc
            logger.warning("chat attempt %d failed: %s", attempt, exc)
    raise TransportError(f"exhausted {config.retries + 1} attempts: {last}")


def license_inquiry(
    client: ModelClient,
    prior_conversation: list[dict[str, str]],
    templates: PromptTemplates,
    config: RunnerConfig | None = None,
    limiter: _RateLimiter | None = None,
) -> str:
    """Second turn: append the fixed inquiry and return the reply verbatim."""
    config = config or RunnerConfig()
    limiter = limiter or _RateLimiter(None)
    messages = prior_conversation + [{"role": "user", "content": templates.inquiry}]
    reply, _ = _chat_with_retries(client, messages, config, limiter)
    return reply


def _evaluate_item(
    client: ModelClient,
    item: BenchmarkItem,
    templates: PromptTemplates,
    config: RunnerConfig,
    limiter: _RateLimiter,
) -> EvalRecord:
    started = time.monotonic()
    messages = build_completion_prompt(item, templates, config.use_exemplar)
    prompt_text = messages[-1]["content"]

    try:
        raw, attempts = _chat_with_retries(client, messages, config, limiter)
    except TransportError as exc:
        return EvalRecord(
            snippet_id=item.snippet.id,
            model=client.model,
            prompt_text=prompt_text,
            truth_license=item.license,
            truth_category=item.category.value if item.category else None,
            prompt_tokens=len(tokenize_code(prompt_text)),
            attempts=config.retries + 1,
            elapsed_s=time.monotonic() - started,
            error=f"completion turn failed: {exc}",
        )

    generated_body, extraction_path = extract_generated_body(raw, item.snippet.signature)
    scores = similarity_report(generated_body, item.snippet.body)
    verdict = classify_striking(item.snippet.metrics, scores, config.standard)

    inquiry_text = ""
    inquiry_response = ""
    grade = None
    error = None
    want_inquiry = config.inquire == "all" or (
        config.inquire == "striking" and verdict.is_striking
    )
    if want_inquiry and item.license is not None:
        inquiry_text = templates.inquiry
        conversation = messages + [{"role": "assistant", "content": raw}]
        try:
            inquiry_response = license_inquiry(client, conversation, templates, config, limiter)
            grade = grade_license_answer(
                parse_license_mention(inquiry_response), item.license, config.grading_mode
            )
        except TransportError as exc:
            error = f"inquiry turn failed: {exc}"

    return EvalRecord(
        snippet_id=item.snippet.id,
        model=client.model,
        prompt_text=prompt_text,
        raw_completion=raw,
        generated_body=generated_body,
        extraction_path=extraction_path,
        scores=scores,
        verdict=verdict,
        inquiry_text=inquiry_text,
        inquiry_response=inquiry_response,
        grade=grade,
        truth_license=item.license,
        truth_category=item.category.value if item.category else None,
        prompt_tokens=len(tokenize_code(prompt_text)),
        completion_tokens=len(tokenize_code(generated_body)),
        attempts=attempts,
        elapsed_s=time.monotonic() - started,
        error=error,
    )


def run_benchmark(
    client: ModelClient,
    items: Sequence[BenchmarkItem],
    config: RunnerConfig | None = None,
    journal_path: str | Path | None = None,
    extra_meta: dict | None = None,
) -> list[EvalRecord]:
    """Run the two-turn protocol over benchmark items.

    Records are journaled as they complete; with ``config.resume`` the
    journal's snippet ids are skipped and prior records merged into the
    result.  The returned list is sorted by snippet id regardless of
    completion order.  Per-item exceptions become error records.
    """
    config = config or RunnerConfig()
    templates = load_templates(config.template_version)
    limiter = _RateLimiter(config.rate_limit_per_s)

    # execution knobs are recorded but kept out of the hash: they cannot
    # change record content, and resume must work across concurrency levels
    meta = {"model": client.model, **config.result_dict(), **(extra_meta or {})}
    digest = config_hash(meta)
    header_config = {
        **meta,
        "execution": {
            "concurrency": config.concurrency,
            "retries": config.retries,
            "rate_limit_per_s": config.rate_limit_per_s,
        },
    }

    journal: Journal | None = None
    prior: list[EvalRecord] = []
    if journal_path is not None:
        if config.resume:
            journal, prior_dicts = Journal.resume(journal_path, header_config, digest)
            prior = [EvalRecord.from_dict(d) for d in prior_dicts]
        else:
            journal = Journal.create(journal_path, header_config, digest)

    done_ids = {r.snippet_id for r in prior}
    pending = [item for item in items if item.snippet.id not in done_ids]

    records: list[EvalRecord] = list(prior)
    lock = threading.Lock()

    def process(item: BenchmarkItem) -> None:
        try:
            record = _evaluate_item(client, item, templates, config, limiter)
        except Exception as exc:  # isolate item failures
            logger.exception("item %s failed", item.snippet.id)
            record = EvalRecord(
                snippet_id=item.snippet.id,
                model=client.model,
                truth_license=item.license,
                truth_category=item.category.value if item.category else None,
                error=f"unexpected failure: {exc}",
            )
        with lock:
            records.append(record)
        if journal is not None:
            journal.append(record.to_dict())

    try:
        if config.concurrency <= 1:
            for item in pending:
                process(item)
        else:
            with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
                futures = [pool.submit(process, item) for item in pending]
                for future in futures:
                    future.result()
    finally:
        if journal is not None:
            journal.close()

    records.sort(key=lambda r: r.snippet_id)
    return records
