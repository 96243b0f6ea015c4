import json
import logging
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from licokit.extract import (
    BodyParseError,
    EligibilityRules,
    cyclomatic_complexity,
    eligibility_filter,
    extract_body_comments,
    parse_source,
    snippet_from_dict,
    snippet_to_dict,
)

DATA = Path(__file__).parent / "data"
SRC = Path(__file__).parent.parent / "src" / "licokit"


def _fixture_text() -> str:
    return (DATA / "five_part_fixture.py").read_text(encoding="utf-8")


def test_five_part_fixture_regions():
    expected = json.loads((DATA / "five_part_expected.json").read_text(encoding="utf-8"))
    snippets = parse_source(_fixture_text(), "five_part_fixture.py")
    assert len(snippets) == 1
    s = snippets[0]
    assert s.header_comments == expected["header_comments"]
    assert s.imports_globals == expected["imports_globals"]
    assert s.signature == expected["signature"]
    assert s.docstring == expected["docstring"]
    assert s.body == expected["body"]
    assert s.name == expected["name"]
    assert s.is_class_method is expected["is_class_method"]
    assert s.metrics.body_lines == expected["metrics"]["body_lines"]
    assert s.metrics.cyclomatic_complexity == expected["metrics"]["cyclomatic_complexity"]
    assert s.metrics.comment_count == expected["metrics"]["comment_count"]


def test_two_functions_and_a_method():
    src = (
        "def first():\n"
        '    """One."""\n'
        "    return 1\n"
        "\n"
        "class Box:\n"
        "    def method(self):\n"
        '        """Two."""\n'
        "        return 2\n"
        "\n"
        "def second():\n"
        '    """Three."""\n'
        "    return 3\n"
    )
    snippets = parse_source(src, "three.py")
    assert [s.name for s in snippets] == ["first", "method", "second"]
    assert [s.is_class_method for s in snippets] == [False, True, False]


def test_syntax_error_yields_empty_list_and_diagnostic(caplog):
    with caplog.at_level(logging.WARNING, logger="licokit.extract"):
        result = parse_source("def broken(:\n    pass\n", "broken.py")
    assert result == []
    assert any("broken.py" in message for message in caplog.messages)


def test_round_trip_region_on_package_sources():
    for path in sorted(SRC.glob("*.py")):
        text = path.read_text(encoding="utf-8")
        lines = text.splitlines(keepends=True)
        for snippet in parse_source(text, path.name):
            region = "".join(lines[snippet.start_line - 1 : snippet.end_line])
            assert snippet.region_text == region, f"{path.name}:{snippet.name}"
            for line in snippet.header_comments.splitlines(keepends=True):
                assert line in lines
            for line in snippet.imports_globals.splitlines(keepends=True):
                assert line in lines
            # the two complexity paths (AST node vs body text) agree
            assert cyclomatic_complexity(snippet.body) == snippet.metrics.cyclomatic_complexity


def test_docstring_less_body_keeps_indentation():
    src = "def plain(x):\n    if x:\n        return 1\n    return 0\n"
    snippet = parse_source(src, "p.py")[0]
    assert snippet.signature == "def plain(x):\n"
    assert snippet.body == "    if x:\n        return 1\n    return 0\n"
    assert snippet.region_text == src
    assert cyclomatic_complexity(snippet.body) == 2 == snippet.metrics.cyclomatic_complexity


def test_round_trip_fixture_region():
    text = _fixture_text()
    snippet = parse_source(text, "f.py")[0]
    start = text.index("def walk_tree")
    assert snippet.region_text == text[start:]


def test_determinism():
    text = _fixture_text()
    first = parse_source(text, "a.py")
    second = parse_source(text, "a.py")
    assert [s.id for s in first] == [s.id for s in second]
    assert first == second


def test_id_ignores_source_path():
    text = _fixture_text()
    a = parse_source(text, "one.py")[0]
    b = parse_source(text, "two/nested.py")[0]
    assert a.id == b.id


def test_nested_function_has_parent_id():
    src = (
        "def outer(x):\n"
        '    """Outer."""\n'
        "    def inner(y):\n"
        "        return y + 1\n"
        "    return inner(x)\n"
    )
    snippets = parse_source(src, "nested.py")
    assert [s.name for s in snippets] == ["outer", "inner"]
    outer, inner = snippets
    assert outer.parent_id is None
    assert inner.parent_id == outer.id


def test_decorated_function_region_starts_at_def():
    src = "import functools\n\n@functools.cache\ndef cached(n):\n    return n * 2\n"
    snippet = parse_source(src, "d.py")[0]
    assert snippet.signature.startswith("def cached")
    assert "@functools.cache" not in snippet.region_text


def test_single_line_def_round_trips():
    src = "def tiny(): return 42\n"
    snippet = parse_source(src, "tiny.py")[0]
    assert snippet.signature == "def tiny(): "
    assert snippet.body == "return 42\n"
    assert snippet.region_text == src


def test_docstring_only_function_not_emitted():
    src = 'def doc_only():\n    """Nothing else."""\n'
    assert parse_source(src, "d.py") == []


def test_module_docstring_counts_as_header():
    src = '"""Module docstring."""\n# a comment\nimport os\n\ndef f():\n    return os\n'
    snippet = parse_source(src, "m.py")[0]
    assert snippet.header_comments == '"""Module docstring."""\n# a comment\n'
    assert snippet.imports_globals == "import os\n"


def test_imports_limited_to_preceding_context():
    src = (
        "import os\n"
        "\n"
        "def first():\n"
        "    return os\n"
        "\n"
        "import sys\n"
        "\n"
        "def second():\n"
        "    return sys\n"
    )
    first, second = parse_source(src, "ctx.py")
    assert first.imports_globals == "import os\n"
    assert second.imports_globals == "import os\nimport sys\n"


def test_async_function_extracted():
    src = "async def fetch(url):\n    \"\"\"Get.\"\"\"\n    data = await url.read()\n    return data\n"
    snippet = parse_source(src, "a.py")[0]
    assert snippet.name == "fetch"
    assert snippet.metrics.body_lines == 2


# ---------------------------------------------------------------------------
# cyclomatic_complexity
# ---------------------------------------------------------------------------

def test_cc_straight_line_is_one():
    assert cyclomatic_complexity("x = 1\ny = x + 2\nz = [y]\n") == 1


def test_cc_if_elif_for():
    body = "if a:\n    pass\nelif b:\n    pass\nfor i in r:\n    pass\n"
    assert cyclomatic_complexity(body) == 4


def test_cc_while_if_and():
    assert cyclomatic_complexity("while x:\n    if a and b:\n        pass\n") == 4


def test_cc_except_ternary_assert_comprehension():
    body = (
        "try:\n"
        "    x = 1 if flag else 2\n"
        "except ValueError:\n"
        "    pass\n"
        "except KeyError:\n"
        "    pass\n"
        "assert x\n"
        "ys = [y for y in xs if y]\n"
    )
    # 2 handlers + ternary + assert + comprehension-if
    assert cyclomatic_complexity(body) == 6


def test_cc_with_else_finally_not_counted():
    body = (
        "with open(p) as f:\n"
        "    data = f.read()\n"
        "try:\n"
        "    pass\n"
        "finally:\n"
        "    pass\n"
        "if x:\n"
        "    pass\n"
        "else:\n"
        "    pass\n"
    )
    assert cyclomatic_complexity(body) == 2


def test_cc_await_body_parses():
    assert cyclomatic_complexity("data = await source.read()\nreturn data\n") == 1


def test_cc_unparsable_raises():
    with pytest.raises(BodyParseError):
        cyclomatic_complexity("def broken(:\n")


def test_cc_agrees_with_extraction_metrics():
    text = _fixture_text()
    snippet = parse_source(text, "f.py")[0]
    assert cyclomatic_complexity(snippet.body) == snippet.metrics.cyclomatic_complexity


@settings(max_examples=40)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["alpha", "beta", "gamma", "delta"]),
            st.integers(min_value=0, max_value=999),
        ),
        min_size=1,
        max_size=12,
    )
)
def test_cc_property_straight_line_assignments(assignments):
    body = "".join(f"{name}_{i} = {value}\n" for i, (name, value) in enumerate(assignments))
    assert cyclomatic_complexity(body) == 1


# ---------------------------------------------------------------------------
# extract_body_comments
# ---------------------------------------------------------------------------

def test_comments_normalized_multiset():
    body = "# Compute  hash\nx = 1  #  Compute hash\n"
    assert extract_body_comments(body) == {"Compute hash": 2}


def test_comments_empty_body():
    assert extract_body_comments("x = 1\nreturn x\n") == {}


def test_bare_hash_dropped():
    assert extract_body_comments("#\nx = 1\n") == {}


def test_comments_exclude_string_literals():
    body = 's = "# not a comment"\n# real one\n'
    assert extract_body_comments(body) == {"real one": 1}


def test_comments_fallback_on_unlexable_text():
    body = 'x = """unterminated\n# visible comment\n'
    assert "visible comment" in extract_body_comments(body)


@settings(max_examples=40)
@given(
    pads=st.lists(st.integers(min_value=1, max_value=6), min_size=4, max_size=4),
    trail=st.integers(min_value=0, max_value=5),
)
def test_comment_whitespace_invariance(pads, trail):
    base = "x = 1\n# fall back to slow path\ny = 2  # tune the cache\n"
    noisy = (
        f"x = 1\n#{' ' * pads[0]}fall{' ' * pads[1]}back to slow{' ' * pads[2]}path{' ' * trail}\n"
        f"y = 2  #{' ' * pads[3]}tune the cache\n"
    )
    assert extract_body_comments(noisy) == extract_body_comments(base)


# ---------------------------------------------------------------------------
# eligibility_filter
# ---------------------------------------------------------------------------

def _make_snippet(body_lines: int, docstring: bool = True, method: bool = False):
    body = "".join(f"    x{i} = {i}\n" for i in range(body_lines - 1)) + "    return x0\n"
    doc = '    """Doc."""\n' if docstring else ""
    indent = "    " if method else ""
    shell = f"class C:\n{indent}" if method else ""
    src = f"{shell}def f(a):\n{doc}{body}" if not method else (
        "class C:\n    def f(self):\n" + ("        \"\"\"Doc.\"\"\"\n" if docstring else "")
        + "".join(f"        x{i} = {i}\n" for i in range(body_lines - 1)) + "        return x0\n"
    )
    snippets = parse_source(src, "elig.py")
    assert len(snippets) == 1
    return snippets[0]


def test_eligibility_seven_lines_passes():
    assert eligibility_filter(_make_snippet(7), EligibilityRules(min_body_lines=6))


def test_eligibility_six_lines_fails_strictly():
    assert not eligibility_filter(_make_snippet(6), EligibilityRules(min_body_lines=6))


def test_eligibility_class_method_fails():
    snippet = _make_snippet(7, method=True)
    assert snippet.is_class_method
    assert not eligibility_filter(snippet)


def test_eligibility_requires_docstring():
    assert not eligibility_filter(_make_snippet(7, docstring=False))


def test_snippet_dict_round_trip():
    snippet = parse_source(_fixture_text(), "f.py")[0]
    assert snippet_from_dict(snippet_to_dict(snippet)) == snippet
