"""Model transports: live chat endpoint, replay file, and a caching shim.

Every transport implements ``chat(messages, temperature=0.0) -> str`` and
carries the model identity it answers for.  Requests are cached/replayed
by a canonical hash of the message list so repeated runs never re-bill.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Mapping, Protocol, Sequence, runtime_checkable

import requests

API_KEY_ENV = "LICOKIT_API_KEY"

Message = Mapping[str, str]


class TransportError(RuntimeError):
    """A chat request failed after exhausting its retry budget."""


class ReplayMissError(KeyError):
    """The replay file has no reply recorded for a message-list hash."""


def message_hash(messages: Sequence[Message]) -> str:
    canonical = json.dumps(
        [{"role": m["role"], "content": m["content"]} for m in messages],
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@runtime_checkable
class ModelClient(Protocol):
    model: str

    def chat(self, messages: Sequence[Message], temperature: float = 0.0) -> str: ...


class HttpChatClient:
    """Chat-completions-style HTTP transport.

    POSTs ``{"model", "messages", "temperature"}`` to
    ``<base_url>/chat/completions`` with an optional bearer token from
    the LICOKIT_API_KEY environment variable.
    """

    def __init__(self, base_url: str, model: str, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self._session = requests.Session()
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            self._session.headers["Authorization"] = f"Bearer {api_key}"

    def chat(self, messages: Sequence[Message], temperature: float = 0.0) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m["role"], "content": m["content"]} for m in messages],
            "temperature": temperature,
        }
        try:
            response = self._session.post(
                f"{self.base_url}/chat/completions", json=payload, timeout=self.timeout
            )
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"chat request failed: {exc}") from exc


class ReplayClient:
    """Deterministic transport answering from a recorded mapping.

    The replay file is JSON-Lines of ``{"key": <message-list hash>,
    "reply": <text>}``.  Unknown hashes raise ReplayMissError.
    """

    def __init__(self, replies: Mapping[str, str], model: str = "replay"):
        self.model = model
        self._replies = dict(replies)

    @classmethod
    def from_file(cls, path: str | Path, model: str = "replay") -> "ReplayClient":
        replies = {}
        with Path(path).open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "key" not in obj or "reply" not in obj:
                    raise ValueError(f"{path}:{lineno}: replay record needs 'key' and 'reply'")
                replies[obj["key"]] = obj["reply"]
        return cls(replies, model=model)

    def chat(self, messages: Sequence[Message], temperature: float = 0.0) -> str:
        key = message_hash(messages)
        try:
            return self._replies[key]
        except KeyError:
            raise ReplayMissError(f"no recorded reply for message hash {key}") from None


def write_replay_file(path: str | Path, replies: Mapping[str, str]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for key in sorted(replies):
            handle.write(json.dumps({"key": key, "reply": replies[key]}, ensure_ascii=False) + "\n")


class CachingClient:
    """Wraps a live client with an append-only (model, message-hash) cache."""

    def __init__(self, inner: ModelClient, cache_path: str | Path):
        self.inner = inner
        self.model = inner.model
        self.cache_path = Path(cache_path)
        self._lock = threading.Lock()
        self._cache: dict[str, str] = {}
        if self.cache_path.exists():
            with self.cache_path.open(encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    obj = json.loads(line)
                    self._cache[obj["key"]] = obj["reply"]

    def _cache_key(self, messages: Sequence[Message]) -> str:
        return f"{self.model}:{message_hash(messages)}"

    def chat(self, messages: Sequence[Message], temperature: float = 0.0) -> str:
        key = self._cache_key(messages)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        reply = self.inner.chat(messages, temperature=temperature)
        with self._lock:
            self._cache[key] = reply
            self.cache_path.parent.mkdir(parents=True, exist_ok=True)
            with self.cache_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps({"key": key, "reply": reply}, ensure_ascii=False) + "\n")
        return reply
