"""Shared builders for synthetic corpora, fabricated snippets, and replay files."""

from __future__ import annotations

import random
from pathlib import Path

from licokit.bench import BenchmarkItem
from licokit.clients import message_hash
from licokit.extract import FunctionSnippet, SnippetMetrics
from licokit.harness import PromptTemplates, build_completion_prompt, load_templates

LICENSE_HEADERS = {
    "Apache-2.0": (
        '# Licensed under the Apache License, Version 2.0 (the "License");\n'
        "# you may not use this file except in compliance with the License.\n"
    ),
    "MIT": (
        "# Permission is hereby granted, free of charge, to any person obtaining\n"
        "# a copy of this software and associated documentation files.\n"
    ),
    "GPL-3.0-or-later": (
        "# This program is free software: you can redistribute it and/or modify\n"
        "# it under the terms of the GNU General Public License as published by\n"
        "# the Free Software Foundation, either version 3 of the License, or\n"
        "# (at your option) any later version.\n"
    ),
    "MPL-2.0": (
        "# This Source Code Form is subject to the terms of the Mozilla Public\n"
        "# License, v. 2.0. If a copy of the MPL was not distributed with this\n"
        "# file, You can obtain one at http://mozilla.org/MPL/2.0/.\n"
    ),
}


def synth_body(uid: str, rng: random.Random) -> str:
    """A function body that meets every benchmark precondition: more than
    ten non-blank lines, complexity above three, two comments."""
    c1, c2, c3 = rng.randint(2, 9), rng.randint(10, 99), rng.randint(3, 7)
    return f"""    # seed work for {uid}
    total_{uid} = {c1}
    if alpha_{uid} and beta_{uid}:
        total_{uid} = alpha_{uid} + beta_{uid}
    for step_{uid} in range(alpha_{uid}):
        # accumulate {uid} terms
        total_{uid} += step_{uid} * {c3}
        if step_{uid} % 2:
            total_{uid} -= 1
    while total_{uid} > {c2}:
        total_{uid} //= 2
    result_{uid} = total_{uid} + len(str(beta_{uid}))
    return result_{uid}
"""


def synth_file(uid: str, license_id: str | None, rng: random.Random) -> str:
    header = LICENSE_HEADERS[license_id] if license_id else "# internal helpers\n"
    return (
        header
        + "\nimport math\n\n"
        + f"SCALE_{uid.upper()} = {rng.randint(2, 40)}\n\n\n"
        + f"def calc_{uid}(alpha_{uid}, beta_{uid}):\n"
        + f'    """Combine counters for the {uid} series."""\n'
        + synth_body(uid, rng)
    )


def uid_stream(prefix: str):
    letters = "abcdefghijklmnopqrstuvwxyz"
    for a in letters:
        for b in letters:
            yield f"{prefix}{a}{b}"


def write_corpus_dir(
    root: Path,
    count: int,
    seed: int,
    uid_prefix: str,
    licenses: list[str] | None = None,
) -> list[str]:
    """Materialize ``count`` one-function files under ``root``; returns uids."""
    rng = random.Random(seed)
    uids = []
    stream = uid_stream(uid_prefix)
    for i in range(count):
        uid = next(stream)
        license_id = licenses[i % len(licenses)] if licenses else None
        project = root / f"proj_{uid}"
        project.mkdir(parents=True, exist_ok=True)
        (project / f"mod_{uid}.py").write_text(synth_file(uid, license_id, rng), encoding="utf-8")
        uids.append(uid)
    return uids


def snippet_from_tokens(snippet_id: str, tokens: list[str], **metric_overrides) -> FunctionSnippet:
    """Fabricated snippet whose body tokenizes to exactly ``tokens``."""
    body = " ".join(tokens) + "\n"
    metrics = SnippetMetrics(
        body_lines=metric_overrides.get("body_lines", 1),
        cyclomatic_complexity=metric_overrides.get("cyclomatic_complexity", 1),
        comment_count=metric_overrides.get("comment_count", 0),
        prompt_lines=1,
        prompt_tokens=1,
        body_tokens=len(tokens),
    )
    return FunctionSnippet(
        id=snippet_id,
        header_comments="",
        imports_globals="",
        signature=f"def {snippet_id}():\n    ",
        docstring='"""stub."""',
        body=body,
        source_path=f"{snippet_id}.py",
        metrics=metrics,
    )


def fence(text: str) -> str:
    if not text.endswith("\n"):
        text += "\n"
    return "```python\n" + text + "```"


def build_replay(
    items: list[BenchmarkItem],
    body_for_item,
    inquiry_for_item=None,
    use_exemplar: bool = True,
    templates: PromptTemplates | None = None,
) -> dict[str, str]:
    """Replay mapping for a benchmark run.

    ``body_for_item(item) -> str`` produces the first-turn reply (fenced
    automatically); ``inquiry_for_item(item) -> str`` the second-turn
    reply, scripted for every item since striking classification happens
    at run time.
    """
    templates = templates or load_templates()
    replies: dict[str, str] = {}
    for item in items:
        messages = build_completion_prompt(item, templates, use_exemplar)
        first_reply = fence(body_for_item(item))
        replies[message_hash(messages)] = first_reply
        if inquiry_for_item is not None:
            follow_up = messages + [
                {"role": "assistant", "content": first_reply},
                {"role": "user", "content": templates.inquiry},
            ]
            replies[message_hash(follow_up)] = inquiry_for_item(item)
    return replies
