"""Subcommand front-end: extract, build-bench, study, run, score.

Configuration precedence is flags > config file > defaults.  The config
file is plain ``key = value`` lines (# comments allowed); keys match the
long flag names with dashes replaced by underscores.

Every artifact starts with a header line carrying the producing
configuration and its hash; score refuses to mix journals produced under
different settings unless --force is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from licokit.bench import (
    BenchConfig,
    build_benchmark,
    build_study_groups,
    feature_stats,
    load_benchmark,
    render_feature_stats,
    write_benchmark,
)
from licokit.clients import CachingClient, HttpChatClient, ReplayClient
from licokit.corpus import extract_corpus, load_corpus
from licokit.extract import EligibilityRules, snippet_to_dict
from licokit.harness import (
    EvalRecord,
    RunnerConfig,
    build_completion_prompt,
    config_hash,
    export_canonical,
    load_templates,
    run_benchmark,
)
from licokit.journal import read_journal
from licokit.minhash import DEFAULT_SEED, index_snippets
from licokit.scoring import aggregate, emit_report
from licokit.similarity import StrikingStandard

logger = logging.getLogger(__name__)


class CliError(RuntimeError):
    pass


def _read_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _setting(args: argparse.Namespace, file_config: dict, key: str, default, cast=None):
    """flags > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_config:
        raw = file_config[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw) if cast else raw
    return default


def _file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _write_jsonl(path: Path, header: dict, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({"kind": "header", **header}, sort_keys=True) + "\n")
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_extract(args: argparse.Namespace, file_config: dict) -> int:
    corpus_path = _setting(args, file_config, "corpus", None)
    out = _setting(args, file_config, "out", None)
    if not corpus_path or not out:
        raise CliError("extract needs --corpus and --out")
    files = load_corpus(corpus_path)
    snippets = extract_corpus(files)
    meta = {"command": "extract", "corpus": str(corpus_path), "files": len(files)}
    _write_jsonl(
        Path(out),
        {**meta, "config_hash": config_hash(meta)},
        [snippet_to_dict(s) for s in snippets],
    )
    print(f"extracted {len(snippets)} snippets from {len(files)} files -> {out}")
    return 0


def cmd_build_bench(args: argparse.Namespace, file_config: dict) -> int:
    corpus_path = _setting(args, file_config, "corpus", None)
    out = _setting(args, file_config, "out", None)
    if not corpus_path or not out:
        raise CliError("build-bench needs --corpus and --out")
    config = BenchConfig(
        top_k=_setting(args, file_config, "top_k", 10_000, int),
        min_reuse=_setting(args, file_config, "min_reuse", 1, int),
        seed=_setting(args, file_config, "seed", 0, int),
    )
    files = load_corpus(corpus_path)
    items = build_benchmark(files, config)
    meta = {"command": "build-bench", "corpus": str(corpus_path), **config.to_dict()}
    write_benchmark(items, out, meta={**meta, "config_hash": config_hash(meta)})
    by_category: dict[str, int] = {}
    for item in items:
        by_category[item.category.value] = by_category.get(item.category.value, 0) + 1
    print(f"benchmark: {len(items)} items -> {out}")
    for category, count in sorted(by_category.items()):
        share = 100.0 * count / len(items) if items else 0.0
        print(f"  {category}: {count} ({share:.2f}%)")
    return 0


def cmd_study(args: argparse.Namespace, file_config: dict) -> int:
    accessed_path = _setting(args, file_config, "accessed", None)
    restricted_path = _setting(args, file_config, "restricted", None)
    out_dir = _setting(args, file_config, "out_dir", None)
    if not accessed_path or not restricted_path or not out_dir:
        raise CliError("study needs --accessed, --restricted and --out-dir")
    n = _setting(args, file_config, "n", 200, int)
    seed = _setting(args, file_config, "seed", DEFAULT_SEED, int)
    min_body_lines = _setting(args, file_config, "min_body_lines", 6, int)

    accessed_files = load_corpus(accessed_path)
    restricted_files = load_corpus(restricted_path)
    accessed_snippets = extract_corpus(accessed_files)
    restricted_snippets = extract_corpus(restricted_files)
    index = index_snippets(accessed_snippets, seed=seed)
    groups = build_study_groups(
        accessed_snippets,
        restricted_snippets,
        index,
        n_per_group=n,
        seed=seed,
        rules=EligibilityRules(min_body_lines=min_body_lines),
    )
    stats = feature_stats(groups)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": "study",
        "accessed": str(accessed_path),
        "restricted": str(restricted_path),
        "n_per_group": n,
        "seed": seed,
        "min_body_lines": min_body_lines,
    }
    meta["config_hash"] = config_hash(meta)
    _write_jsonl(out / "accessed.jsonl", meta, [snippet_to_dict(s) for s in groups.accessed])
    _write_jsonl(out / "unseen.jsonl", meta, [snippet_to_dict(s) for s in groups.unseen])
    (out / "feature_stats.json").write_text(
        json.dumps({"meta": meta, "features": stats}, indent=2, sort_keys=True), encoding="utf-8"
    )
    (out / "feature_stats.md").write_text(render_feature_stats(stats), encoding="utf-8")
    print(f"groups: accessed={len(groups.accessed)} unseen={len(groups.unseen)} -> {out_dir}")
    print(render_feature_stats(stats))
    return 0


def _build_client(args: argparse.Namespace, file_config: dict):
    replay = _setting(args, file_config, "replay", None)
    endpoint = _setting(args, file_config, "endpoint", None)
    model = _setting(args, file_config, "model", None)
    if replay and endpoint:
        raise CliError("use either --replay or --endpoint, not both")
    if replay:
        return ReplayClient.from_file(replay, model=model or "replay")
    if endpoint:
        if not model:
            raise CliError("--endpoint needs --model")
        client = HttpChatClient(endpoint, model)
        cache = _setting(args, file_config, "cache", None)
        return CachingClient(client, cache) if cache else client
    raise CliError("run needs --replay FILE or --endpoint URL")


def cmd_run(args: argparse.Namespace, file_config: dict) -> int:
    bench_path = _setting(args, file_config, "bench", None)
    journal_path = _setting(args, file_config, "journal", None)
    if not bench_path:
        raise CliError("run needs --bench")
    _, items = load_benchmark(bench_path)
    if not items:
        raise CliError(f"benchmark {bench_path} has no items")

    runner = RunnerConfig(
        concurrency=_setting(args, file_config, "concurrency", 4, int),
        retries=_setting(args, file_config, "retries", 2, int),
        inquire=_setting(args, file_config, "inquire", "striking"),
        grading_mode=_setting(args, file_config, "grading_mode", "family"),
        use_exemplar=False if args.no_exemplar else _setting(args, file_config, "use_exemplar", True, bool),
        template_version=_setting(args, file_config, "template_version", "v1"),
        standard=StrikingStandard(),
        rate_limit_per_s=_setting(args, file_config, "rate_limit", None, float),
        resume=args.resume,
    )

    if args.dry_run:
        templates = load_templates(runner.template_version)
        for item in items:
            messages = build_completion_prompt(item, templates, runner.use_exemplar)
            print(f"--- {item.snippet.id} ---")
            for message in messages:
                print(f"[{message['role']}]")
                print(message["content"])
        print(f"dry run: {len(items)} prompts, no requests sent")
        return 0

    if not journal_path:
        raise CliError("run needs --journal")
    client = _build_client(args, file_config)
    extra_meta = {
        "benchmark": str(bench_path),
        "benchmark_hash": _file_hash(bench_path),
        "total_items": len(items),
    }
    records = run_benchmark(client, items, runner, journal_path=journal_path, extra_meta=extra_meta)
    sorted_path = Path(journal_path).with_suffix(".sorted.jsonl")
    sorted_path.write_text(export_canonical(records), encoding="utf-8")
    striking = sum(1 for r in records if r.verdict is not None and r.verdict.is_striking)
    errors = sum(1 for r in records if r.error)
    print(f"run complete: {len(records)} records, {striking} striking, {errors} errors")
    print(f"journal: {journal_path}\nsorted: {sorted_path}")
    return 0


def cmd_score(args: argparse.Namespace, file_config: dict) -> int:
    journal_paths = args.journal or []
    out_dir = _setting(args, file_config, "out_dir", None)
    if not journal_paths or not out_dir:
        raise CliError("score needs --journal (repeatable) and --out-dir")

    scored = []
    settings_keys = set()
    hashes = {}
    for path in journal_paths:
        header, record_dicts = read_journal(path)
        config = header.get("config", {})
        records = [EvalRecord.from_dict(d) for d in record_dicts]
        total = _setting(args, file_config, "total", None, int) or config.get("total_items")
        if not total:
            raise CliError(f"{path}: journal header lacks total_items; pass --total")
        comparable = {k: v for k, v in config.items() if k not in ("model", "execution")}
        settings_keys.add(config_hash(comparable))
        hashes[str(path)] = header.get("config_hash")
        model = config.get("model", "unknown")
        scored.append((model, aggregate(records, int(total)), records))

    if len(settings_keys) > 1 and not args.force:
        raise CliError(
            "journals were produced under different settings; rerun with --force to mix them"
        )

    paths = emit_report(scored, out_dir)
    (Path(out_dir) / "run_meta.json").write_text(
        json.dumps({"journals": hashes}, indent=2, sort_keys=True), encoding="utf-8"
    )
    for model, score, _ in scored:
        print(f"{model}: striking={score.n_striking} lico={score.lico:.3f}")
    print(f"reports: {', '.join(str(p) for p in paths.values())}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="licokit",
        description="Measure license compliance of code-generating LLMs.",
    )
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="corpus -> snippets JSONL")
    p.add_argument("--corpus", help="corpus directory or JSONL file")
    p.add_argument("--out", help="output snippets JSONL")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-bench", help="corpus -> benchmark JSONL")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--min-reuse", type=int, dest="min_reuse")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_build_bench)

    p = sub.add_parser("study", help="two corpora -> study groups + feature stats")
    p.add_argument("--accessed", help="corpus the model has seen")
    p.add_argument("--restricted", help="corpus from differently-licensed sources")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--n", type=int, help="sample size per group (default 200)")
    p.add_argument("--seed", type=int)
    p.add_argument("--min-body-lines", type=int, dest="min_body_lines")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("run", help="benchmark + model -> journal")
    p.add_argument("--bench")
    p.add_argument("--journal")
    p.add_argument("--endpoint", help="chat-completions base URL")
    p.add_argument("--model")
    p.add_argument("--replay", help="replay transport file")
    p.add_argument("--cache", help="response cache for live endpoints")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--rate-limit", type=float, dest="rate_limit", help="max requests per second")
    p.add_argument("--inquire", choices=["striking", "all", "never"])
    p.add_argument("--grading-mode", choices=["strict", "family"], dest="grading_mode")
    p.add_argument("--template-version", dest="template_version")
    p.add_argument("--no-exemplar", action="store_true")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="journal(s) -> reports")
    p.add_argument("--journal", action="append")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--total", type=int, help="benchmark size override")
    p.add_argument("--force", action="store_true", help="allow mixed-config journals")
    p.set_defaults(func=cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        file_config = _read_config_file(args.config)
        return args.func(args, file_config)
    except (CliError, ValueError, FileNotFoundError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
