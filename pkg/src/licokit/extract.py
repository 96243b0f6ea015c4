"""Function-level snippet extraction.

Source files are split into five-part snippets: file header comments,
imports and module-level globals, the function signature, the docstring,
and the function body.  Every part is a byte-exact slice of the original
file, so signature + docstring + body always reconstructs the function's
source region verbatim and parts 1-4 concatenate directly into a
completion prompt.

Region rules (fixed):

* header = all lines before the first module-level code statement
  (comments, blank lines and the module docstring);
* imports/globals = full-line spans of top-level import statements and
  simple assignments appearing before the snippet's top-level ancestor;
* signature starts at column 0 of the ``def`` line (decorators are not
  part of any snippet) and runs to the first token of the docstring;
  without a docstring it runs to column 0 of the first body line, so the
  body keeps its indentation (one-line defs split at the statement);
* body runs to the end of the last physical line of the function, which
  keeps trailing same-line comments; comment lines after the final
  statement are outside the region.

Functions whose only statement is their docstring are not emitted (the
body part would be empty).
"""

from __future__ import annotations

import ast
import hashlib
import logging
from dataclasses import dataclass, field, replace

from licokit.lexing import comment_multiset, tokenize_code

logger = logging.getLogger(__name__)

_IMPORT_GLOBAL_NODES = (ast.Import, ast.ImportFrom, ast.Assign, ast.AnnAssign)


@dataclass(frozen=True)
class SnippetMetrics:
    """Structural measurements of one snippet."""

    body_lines: int
    cyclomatic_complexity: int
    comment_count: int
    prompt_lines: int
    prompt_tokens: int
    body_tokens: int

    def to_dict(self) -> dict:
        return {
            "body_lines": self.body_lines,
            "cyclomatic_complexity": self.cyclomatic_complexity,
            "comment_count": self.comment_count,
            "prompt_lines": self.prompt_lines,
            "prompt_tokens": self.prompt_tokens,
            "body_tokens": self.body_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SnippetMetrics":
        return cls(**{k: int(data[k]) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class FunctionSnippet:
    """One five-part function-level code unit plus provenance."""

    id: str
    header_comments: str
    imports_globals: str
    signature: str
    docstring: str
    body: str
    source_path: str
    metrics: SnippetMetrics
    reuse_count: int = 1
    is_class_method: bool = False
    # provenance beyond the serialized schema
    name: str = ""
    parent_id: str | None = field(default=None, compare=False)
    start_line: int = field(default=0, compare=False)
    end_line: int = field(default=0, compare=False)

    @property
    def prompt_text(self) -> str:
        """Parts 1-4 concatenated: the completion prompt for this snippet."""
        return self.header_comments + self.imports_globals + self.signature + self.docstring

    @property
    def region_text(self) -> str:
        """The function's contiguous source region (parts 3+4+5)."""
        return self.signature + self.docstring + self.body

    def with_reuse_count(self, reuse_count: int) -> "FunctionSnippet":
        return replace(self, reuse_count=reuse_count)


@dataclass(frozen=True)
class EligibilityRules:
    """Sampling preconditions for the empirical-study groups."""

    min_body_lines: int = 6


class BodyParseError(ValueError):
    """A function body could not be parsed standalone."""


# ---------------------------------------------------------------------------
# Cyclomatic complexity
# ---------------------------------------------------------------------------

def _count_decision_points(nodes: list[ast.AST]) -> int:
    """Decision points under the fixed rule set.

    Counted: if/elif, for, while, except handlers, ternary conditionals,
    and/or operators (n-ary chains count n-1), comprehension ``if``
    clauses, assert.  Not counted: else, finally, with, match/case.
    Nested function and class definitions inside the body count too: the
    metric describes the body text as a whole.
    """
    count = 0
    for root in nodes:
        for node in ast.walk(root):
            if isinstance(node, (ast.If, ast.IfExp, ast.While, ast.For, ast.AsyncFor, ast.Assert)):
                count += 1
            elif isinstance(node, ast.Try):
                count += len(node.handlers)
            elif isinstance(node, ast.BoolOp):
                count += len(node.values) - 1
            elif isinstance(node, ast.comprehension):
                count += len(node.ifs)
    return count


def cyclomatic_complexity(body: str) -> int:
    """1 + number of decision points in a function body.

    ``body`` is parsed inside a synthetic function shell (a plain one,
    then an async one so that ``await`` parses).  Raises BodyParseError
    when neither parses.
    """
    import textwrap

    dedented = textwrap.indent(textwrap.dedent(body), "    ")
    last_error: SyntaxError | None = None
    for shell in ("def _shell_():\n", "async def _shell_():\n"):
        try:
            tree = ast.parse(shell + dedented)
        except (SyntaxError, ValueError) as exc:
            last_error = exc if isinstance(exc, SyntaxError) else None
            continue
        func = tree.body[0]
        assert isinstance(func, (ast.FunctionDef, ast.AsyncFunctionDef))
        return 1 + _count_decision_points(list(func.body))
    raise BodyParseError(f"body does not parse as a function body: {last_error}")


def _complexity_from_node(func: ast.FunctionDef | ast.AsyncFunctionDef) -> int:
    stmts = list(func.body)
    if stmts and _is_docstring_stmt(stmts[0]):
        stmts = stmts[1:]
    return 1 + _count_decision_points(stmts)


# ---------------------------------------------------------------------------
# Comments
# ---------------------------------------------------------------------------

def extract_body_comments(body: str) -> dict[str, int]:
    """Multiset of normalized comment strings in a function body.

    Comment leaders are stripped, surrounding whitespace trimmed and
    internal whitespace runs collapsed; comments that normalize to the
    empty string are dropped.  Docstrings are not comments and bodies
    produced by parse_source never include their own docstring.
    """
    return dict(comment_multiset(body))


# ---------------------------------------------------------------------------
# Eligibility
# ---------------------------------------------------------------------------

def eligibility_filter(snippet: FunctionSnippet, rules: EligibilityRules | None = None) -> bool:
    """Study-sampling eligibility: docstring present, body strictly longer
    than ``rules.min_body_lines`` non-blank lines, not a class method.

    Snippets from parse_source are syntactically clean by construction;
    benchmark-specific preconditions are applied separately.
    """
    rules = rules or EligibilityRules()
    return (
        bool(snippet.docstring.strip())
        and snippet.metrics.body_lines > rules.min_body_lines
        and not snippet.is_class_method
    )


# ---------------------------------------------------------------------------
# Source slicing
# ---------------------------------------------------------------------------

class _SourceMap:
    """Byte-exact slicing of source text by (line, utf-8 column) positions."""

    def __init__(self, text: str):
        self.lines = text.splitlines(keepends=True)
        self._line_bytes = [line.encode("utf-8") for line in self.lines]

    def slice(self, start: tuple[int, int], end: tuple[int, int]) -> str:
        """Text between two (1-based line, utf-8 byte col) positions."""
        (sl, sc), (el, ec) = start, end
        if sl > len(self._line_bytes):
            return ""
        if sl == el:
            return self._line_bytes[sl - 1][sc:ec].decode("utf-8", errors="replace")
        parts = [self._line_bytes[sl - 1][sc:]]
        parts.extend(self._line_bytes[sl : el - 1])
        if el <= len(self._line_bytes):
            parts.append(self._line_bytes[el - 1][:ec])
        return b"".join(parts).decode("utf-8", errors="replace")

    def line_span(self, start_line: int, end_line: int) -> str:
        """Full lines start..end inclusive, with their line endings."""
        return "".join(self.lines[start_line - 1 : end_line])

    def line_end_col(self, line: int) -> int:
        if line > len(self._line_bytes):
            return 0
        return len(self._line_bytes[line - 1])


def _is_docstring_stmt(stmt: ast.stmt) -> bool:
    return (
        isinstance(stmt, ast.Expr)
        and isinstance(stmt.value, ast.Constant)
        and isinstance(stmt.value.value, str)
    )


def count_nonblank_lines(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip())


def _snippet_id(parts: tuple[str, str, str, str, str]) -> str:
    digest = hashlib.sha256("\x00".join(parts).encode("utf-8")).hexdigest()
    return digest[:16]


def _first_code_line(module: ast.Module) -> int | None:
    """First line of the first non-docstring top-level statement."""
    stmts = list(module.body)
    if stmts and _is_docstring_stmt(stmts[0]):
        stmts = stmts[1:]
    if not stmts:
        return None
    first = stmts[0]
    lines = [first.lineno]
    lines.extend(d.lineno for d in getattr(first, "decorator_list", []))
    return min(lines)


# ---------------------------------------------------------------------------
# parse_source
# ---------------------------------------------------------------------------

def parse_source(file_text: str, source_path: str, reuse_count: int = 1) -> list[FunctionSnippet]:
    """Extract one FunctionSnippet per function definition in a source file.

    Emits snippets in source order, outer functions before the functions
    nested inside them.  Class methods are emitted and flagged; filtering
    happens downstream.  Files with syntax errors yield an empty list and
    a logged diagnostic, never an exception.
    """
    try:
        module = ast.parse(file_text)
    except (SyntaxError, ValueError) as exc:
        logger.warning("skipping %s: %s", source_path, exc)
        return []

    source = _SourceMap(file_text)

    first_code = _first_code_line(module)
    if first_code is None:
        header = ""
    else:
        header = source.line_span(1, first_code - 1)

    # Top-level import/global statements keyed by line so each snippet can
    # take only the context that precedes its own top-level ancestor.
    context_stmts = [
        (stmt.lineno, source.line_span(stmt.lineno, stmt.end_lineno))
        for stmt in module.body
        if isinstance(stmt, _IMPORT_GLOBAL_NODES)
    ]

    snippets: list[FunctionSnippet] = []

    def visit(nodes: list[ast.stmt], parent_func_id: str | None, in_class: bool, top_line: int | None) -> None:
        for stmt in nodes:
            anchor = top_line if top_line is not None else min(
                [stmt.lineno] + [d.lineno for d in getattr(stmt, "decorator_list", [])]
            )
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                snippet = _build_snippet(
                    stmt, source, header, context_stmts, anchor,
                    source_path, reuse_count, parent_func_id, in_class,
                )
                if snippet is not None:
                    snippets.append(snippet)
                    visit(stmt.body, snippet.id, False, anchor)
                else:
                    visit(stmt.body, parent_func_id, False, anchor)
            elif isinstance(stmt, ast.ClassDef):
                visit(stmt.body, parent_func_id, True, anchor)

    visit(list(module.body), None, False, None)
    return snippets


def _build_snippet(
    func: ast.FunctionDef | ast.AsyncFunctionDef,
    source: _SourceMap,
    header: str,
    context_stmts: list[tuple[int, str]],
    top_line: int,
    source_path: str,
    reuse_count: int,
    parent_func_id: str | None,
    in_class: bool,
) -> FunctionSnippet | None:
    stmts = list(func.body)
    if not stmts:
        return None

    docstring_node = stmts[0] if _is_docstring_stmt(stmts[0]) else None
    body_stmts = stmts[1:] if docstring_node is not None else stmts
    if not body_stmts:
        return None  # docstring-only function: body part would be empty

    end = (func.end_lineno, source.line_end_col(func.end_lineno))

    if docstring_node is not None:
        sig_end = (docstring_node.lineno, docstring_node.col_offset)
        doc_end = (docstring_node.end_lineno, docstring_node.end_col_offset)
        signature = source.slice((func.lineno, 0), sig_end)
        docstring = source.slice(sig_end, doc_end)
        body = source.slice(doc_end, end)
    else:
        # Without a docstring the body starts at column 0 of its first
        # line, keeping the line's indentation so the body text parses
        # standalone after a dedent; one-line defs split mid-line.
        first = body_stmts[0]
        sig_end = (first.lineno, 0) if first.lineno > func.lineno else (first.lineno, first.col_offset)
        signature = source.slice((func.lineno, 0), sig_end)
        docstring = ""
        body = source.slice(sig_end, end)

    imports_globals = "".join(text for lineno, text in context_stmts if lineno < top_line)

    parts = (header, imports_globals, signature, docstring, body)
    prompt = header + imports_globals + signature + docstring
    metrics = SnippetMetrics(
        body_lines=count_nonblank_lines(body),
        cyclomatic_complexity=_complexity_from_node(func),
        comment_count=sum(comment_multiset(body).values()),
        prompt_lines=count_nonblank_lines(prompt),
        prompt_tokens=len(tokenize_code(prompt)),
        body_tokens=len(tokenize_code(body)),
    )

    return FunctionSnippet(
        id=_snippet_id(parts),
        header_comments=header,
        imports_globals=imports_globals,
        signature=signature,
        docstring=docstring,
        body=body,
        source_path=source_path,
        metrics=metrics,
        reuse_count=reuse_count,
        is_class_method=in_class,
        name=func.name,
        parent_id=parent_func_id,
        start_line=func.lineno,
        end_line=func.end_lineno or func.lineno,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def snippet_to_dict(snippet: FunctionSnippet) -> dict:
    return {
        "id": snippet.id,
        "header_comments": snippet.header_comments,
        "imports_globals": snippet.imports_globals,
        "signature": snippet.signature,
        "docstring": snippet.docstring,
        "body": snippet.body,
        "source_path": snippet.source_path,
        "metrics": snippet.metrics.to_dict(),
        "reuse_count": snippet.reuse_count,
        "is_class_method": snippet.is_class_method,
        "name": snippet.name,
        "parent_id": snippet.parent_id,
        "start_line": snippet.start_line,
        "end_line": snippet.end_line,
    }


def snippet_from_dict(data: dict) -> FunctionSnippet:
    return FunctionSnippet(
        id=data["id"],
        header_comments=data["header_comments"],
        imports_globals=data["imports_globals"],
        signature=data["signature"],
        docstring=data["docstring"],
        body=data["body"],
        source_path=data["source_path"],
        metrics=SnippetMetrics.from_dict(data["metrics"]),
        reuse_count=int(data.get("reuse_count", 1)),
        is_class_method=bool(data.get("is_class_method", False)),
        name=data.get("name", ""),
        parent_id=data.get("parent_id"),
        start_line=int(data.get("start_line", 0)),
        end_line=int(data.get("end_line", 0)),
    )
