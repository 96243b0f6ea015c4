"""Append-only JSON-Lines journal with resume support.

Line 1 is a header object carrying the full run configuration and its
hash; every later line is one record object.  Appends are serialized
behind a lock and flushed per line, so a killed run loses at most the
line being written; a trailing partial line is tolerated on resume.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

SCHEMA = "licokit-journal@1"


class ConfigMismatchError(RuntimeError):
    """Resume attempted with a different configuration."""


class Journal:
    def __init__(self, path: str | Path, header: dict):
        self.path = Path(path)
        self.header = header
        self._lock = threading.Lock()
        self._handle = None

    # -- creation / resume ---------------------------------------------------

    @classmethod
    def create(cls, path: str | Path, config: dict, config_hash: str) -> "Journal":
        header = {"kind": "header", "schema": SCHEMA, "config_hash": config_hash, "config": config}
        journal = cls(path, header)
        journal.path.parent.mkdir(parents=True, exist_ok=True)
        journal._handle = journal.path.open("w", encoding="utf-8")
        journal._write_line(header)
        return journal

    @classmethod
    def resume(cls, path: str | Path, config: dict, config_hash: str) -> tuple["Journal", list[dict]]:
        """Open an existing journal for appending; returns prior records.

        A missing file degrades to create().  A config-hash mismatch is an
        error: rerun against a fresh journal path, or use the original
        configuration.
        """
        path = Path(path)
        if not path.exists():
            return cls.create(path, config, config_hash), []
        header, records = read_journal(path)
        if header.get("config_hash") != config_hash:
            raise ConfigMismatchError(
                f"journal {path} was produced under config {header.get('config_hash')!r}, "
                f"current config is {config_hash!r}; resume with the original configuration "
                "or point --journal at a new file"
            )
        journal = cls(path, header)
        journal._handle = path.open("a", encoding="utf-8")
        return journal, records

    # -- writing ---------------------------------------------------------------

    def append(self, record: dict) -> None:
        self._write_line({"kind": "record", **record})

    def _write_line(self, obj: dict) -> None:
        data = json.dumps(obj, sort_keys=True, ensure_ascii=False)
        with self._lock:
            assert self._handle is not None, "journal is closed"
            self._handle.write(data + "\n")
            self._handle.flush()

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_journal(path: str | Path) -> tuple[dict, list[dict]]:
    """Header and records of a journal; tolerates a truncated last line."""
    path = Path(path)
    header: dict | None = None
    records: list[dict] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError:
                if line.endswith("\n"):
                    raise ValueError(f"{path}:{lineno}: corrupt journal line")
                break  # interrupted mid-write; drop the partial tail
            if obj.get("kind") == "header":
                if header is not None:
                    raise ValueError(f"{path}:{lineno}: second header line")
                header = obj
            elif obj.get("kind") == "record":
                records.append(obj)
            else:
                raise ValueError(f"{path}:{lineno}: unknown journal line kind {obj.get('kind')!r}")
    if header is None:
        raise ValueError(f"{path}: journal has no header line")
    return header, records
