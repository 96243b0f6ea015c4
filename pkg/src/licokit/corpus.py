"""Corpus ingestion.

Two input shapes: a directory tree of Python source files, or a
JSON-Lines file of objects ``{"path", "content", "project", "reuse_count"}``
(``project`` and ``reuse_count`` optional).

Reuse counting mirrors blob semantics: files are grouped by exact content
hash, the count of distinct projects containing a content is its computed
reuse count, and one representative (lexicographically smallest path) is
kept per content.  An explicit reuse_count on a record overrides the
computed value.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from licokit.extract import FunctionSnippet, parse_source

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusFile:
    path: str
    content: str
    project: str
    reuse_count: int | None = None  # None -> computed from duplicates

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(self.content.encode("utf-8")).hexdigest()[:16]


def load_corpus(source: str | Path) -> list[CorpusFile]:
    """Read a corpus and resolve reuse counts.

    Returns one representative CorpusFile per distinct content, ordered
    by (path, content hash) for determinism.
    """
    source = Path(source)
    if source.is_dir():
        raw = _read_tree(source)
    elif source.is_file():
        raw = _read_jsonl(source)
    else:
        raise FileNotFoundError(f"corpus not found: {source}")
    return _resolve_reuse(raw)


def _read_tree(root: Path) -> list[CorpusFile]:
    files = []
    for path in sorted(root.rglob("*.py")):
        if not path.is_file():
            continue
        try:
            data = path.read_bytes()
        except OSError as exc:
            logger.warning("unreadable file %s: %s", path, exc)
            continue
        try:
            content = data.decode("utf-8")
        except UnicodeDecodeError:
            logger.warning("invalid utf-8 in %s; decoding with replacement", path)
            content = data.decode("utf-8", errors="replace")
        rel = path.relative_to(root)
        project = rel.parts[0] if len(rel.parts) > 1 else root.name
        files.append(CorpusFile(path=str(rel), content=content, project=project))
    return files


def _read_jsonl(path: Path) -> list[CorpusFile]:
    files = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "path" not in obj or "content" not in obj:
                raise ValueError(f"{path}:{lineno}: corpus record needs 'path' and 'content'")
            files.append(
                CorpusFile(
                    path=str(obj["path"]),
                    content=str(obj["content"]),
                    project=str(obj.get("project", obj["path"])),
                    reuse_count=int(obj["reuse_count"]) if "reuse_count" in obj else None,
                )
            )
    return files


def _resolve_reuse(files: list[CorpusFile]) -> list[CorpusFile]:
    by_content: dict[str, list[CorpusFile]] = {}
    for item in files:
        by_content.setdefault(item.content_hash, []).append(item)

    resolved = []
    for group in by_content.values():
        group.sort(key=lambda f: f.path)
        representative = group[0]
        explicit = [f.reuse_count for f in group if f.reuse_count is not None]
        computed = len({f.project for f in group})
        reuse = max(explicit) if explicit else computed
        resolved.append(
            CorpusFile(
                path=representative.path,
                content=representative.content,
                project=representative.project,
                reuse_count=reuse,
            )
        )
    resolved.sort(key=lambda f: (f.path, f.content_hash))
    return resolved


def extract_corpus(files: list[CorpusFile]) -> list[FunctionSnippet]:
    """Parse every corpus file into snippets, sorted by id.

    Extraction is pure per file; the id sort makes the merged output
    independent of file processing order.
    """
    snippets: list[FunctionSnippet] = []
    for item in files:
        snippets.extend(parse_source(item.content, item.path, reuse_count=item.reuse_count or 1))
    snippets.sort(key=lambda s: (s.id, s.source_path, s.start_line))
    return snippets
