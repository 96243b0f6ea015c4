import csv
import io
import random

import pytest

from licokit.extract import SnippetMetrics
from licokit.harness import EvalRecord
from licokit.licenses import GradeResult
from licokit.scoring import (
    aggregate,
    emit_report,
    lico,
    render_csv,
    render_markdown,
    score_row,
)
from licokit.similarity import SimilarityScores, StrikingStandard, StrikingVerdict


def _record(
    snippet_id: str,
    striking: bool,
    category: str | None = "permissive",
    correct: bool | None = None,
    error: str | None = None,
    max_sim: float = 0.9,
) -> EvalRecord:
    scores = SimilarityScores(bleu4=max_sim, jaccard=0.1, edit_sim=0.1, identical_comments=2)
    metrics = SnippetMetrics(
        body_lines=12, cyclomatic_complexity=5, comment_count=2,
        prompt_lines=5, prompt_tokens=40, body_tokens=80,
    )
    verdict = StrikingVerdict(
        is_striking=striking,
        scores=scores,
        reference_metrics=metrics,
        standard=StrikingStandard(),
    )
    grade = None
    if striking and correct is not None:
        grade = GradeResult(("MIT",), correct, "family")
    return EvalRecord(
        snippet_id=snippet_id,
        model="test-model",
        scores=None if error else scores,
        verdict=None if error else verdict,
        grade=grade,
        truth_license="MIT",
        truth_category=category,
        error=error,
    )


# ---------------------------------------------------------------------------
# lico
# ---------------------------------------------------------------------------

def test_lico_reference_scores_reproduce():
    assert lico(84, 4187, 56 / 79, 2 / 5).lico == pytest.approx(0.571, abs=1e-3)
    assert lico(20, 4187, 19 / 20, None).lico == pytest.approx(0.985, abs=1e-3)
    assert lico(0, 4187, None, None).lico == pytest.approx(1.000, abs=1e-3)
    assert lico(1, 4187, 0.0, None).lico == pytest.approx(0.714, abs=1e-3)
    assert lico(37, 4187, 0.0, 0.0).lico == pytest.approx(0.142, abs=1e-3)


def test_lico_missing_accuracy_substitutes_one():
    assert lico(0, 100).lico == 1.0
    assert lico(10, 100, None, None).lico == pytest.approx((0.9 + 2 + 4) / 7)


def test_lico_zero_total_rejected():
    with pytest.raises(ValueError):
        lico(0, 0)


def test_lico_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        lico(5, 4, None, None)
    with pytest.raises(ValueError):
        lico(1, 10, 1.5, None)


def test_lico_is_one_iff_no_striking():
    assert lico(0, 50).lico == 1.0
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 50)
        score = lico(n, 50, rng.random(), rng.random())
        assert score.lico < 1.0


def test_lico_bounds_and_monotonicity():
    rng = random.Random(9)
    for _ in range(300):
        total = rng.randint(1, 5000)
        n = rng.randint(0, total)
        acc_p = rng.random()
        acc_c = rng.random()
        base = lico(n, total, acc_p, acc_c).lico
        assert 0.0 <= base <= 1.0
        if n < total:
            assert lico(n + 1, total, acc_p, acc_c).lico < base
        if acc_p < 0.999:
            assert lico(n, total, acc_p + 0.001, acc_c).lico > base
        if acc_c < 0.999:
            assert lico(n, total, acc_p, acc_c + 0.001).lico > base


def test_lico_custom_weights():
    score = lico(0, 10, 0.5, 0.5, weights=(1.0, 1.0, 1.0))
    assert score.lico == pytest.approx((1.0 + 0.5 + 0.5) / 3)


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

def test_aggregate_gpt4o_style_counts():
    records = []
    for i in range(41):
        records.append(_record(f"p{i:03d}", True, "permissive", correct=i < 35))
    for i in range(6):
        records.append(_record(f"c{i:03d}", True, "strong-copyleft", correct=False))
    for i in range(100):
        records.append(_record(f"n{i:03d}", False))
    score = aggregate(records, total_items=4187)
    assert score.n_striking == 47
    assert score.n_permissive == 41 and score.n_copyleft == 6
    assert f"{score.acc_overall:.2f}" == "0.74"
    assert f"{score.lico:.3f}" == "0.385"


def test_aggregate_reproduces_reference_scores_from_counts():
    # (n_permissive, correct_p, n_copyleft, correct_c, expected 3-decimal score)
    rows = [
        (79, 56, 5, 2, 0.571),
        (20, 19, 0, 0, 0.985),
        (0, 0, 0, 0, 1.000),
        (1, 0, 0, 0, 0.714),
        (36, 0, 1, 0, 0.142),
    ]
    for n_p, ok_p, n_c, ok_c, expected in rows:
        records = [
            _record(f"p{i:03d}", True, "permissive", correct=i < ok_p) for i in range(n_p)
        ]
        records += [
            _record(f"c{i:03d}", True, "strong-copyleft", correct=i < ok_c) for i in range(n_c)
        ]
        score = aggregate(records, total_items=4187)
        assert score.lico == pytest.approx(expected, abs=1e-3), (n_p, n_c)


def test_aggregate_zero_records_degenerate():
    score = aggregate([], total_items=4187)
    assert score.n_striking == 0
    assert score.lico == 1.0
    assert score.acc_p is None and score.acc_c is None and score.acc_overall is None


def test_aggregate_weak_copyleft_counts_as_copyleft():
    records = [_record("w1", True, "weak-copyleft", correct=True)]
    score = aggregate(records, total_items=10)
    assert score.n_copyleft == 1 and score.n_permissive == 0
    assert score.acc_c == 1.0


def test_aggregate_excludes_error_records():
    records = [
        _record("ok1", True, "permissive", correct=True),
        _record("bad", True, "permissive", correct=None, error="inquiry turn failed"),
        _record("no", False),
    ]
    score = aggregate(records, total_items=10)
    assert score.n_striking == 1
    assert score.n_errors == 1
    assert score.acc_p == 1.0


def test_aggregate_counts_consistent():
    rng = random.Random(4)
    records = []
    for i in range(60):
        striking = rng.random() < 0.4
        category = rng.choice(["permissive", "weak-copyleft", "strong-copyleft"])
        records.append(
            _record(f"r{i:03d}", striking, category, correct=rng.random() < 0.5 if striking else None)
        )
    score = aggregate(records, total_items=100)
    assert score.n_permissive + score.n_copyleft == score.n_striking


def test_aggregate_rejects_ungraded_striking_record():
    record = _record("x", True, category=None, correct=None)
    with pytest.raises(ValueError):
        aggregate([record], total_items=5)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def test_score_row_formatting():
    score = aggregate(
        [_record("a", True, "permissive", correct=True), _record("b", False)], total_items=400
    )
    row = score_row("m1", score)
    assert row["striking_pct"] == "0.25%"
    assert row["acc"] == "1.00"
    assert row["acc_c"] == "-"
    assert row["lico"] == f"{score.lico:.3f}"


def test_csv_round_trip_parseable():
    score = lico(0, 100)
    text = render_csv([score_row("solo", score)])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 1
    assert rows[0]["model"] == "solo"
    assert rows[0]["lico"] == "1.000"
    assert rows[0]["acc_p"] == "-"


def test_markdown_contains_all_rows():
    text = render_markdown([score_row("alpha", lico(0, 10)), score_row("beta", lico(1, 10, 0.5))])
    assert "| alpha |" in text
    assert "| beta |" in text


def test_emit_report_writes_three_files(tmp_path):
    records = [_record("a", True, "permissive", correct=True)]
    score = aggregate(records, total_items=50)
    paths = emit_report([("m1", score, records)], tmp_path)
    assert paths["csv"].exists() and paths["md"].exists() and paths["distributions"].exists()
    dist = paths["distributions"].read_text(encoding="utf-8")
    assert "snippet_id" in dist and "a" in dist


def test_emit_report_golden_bytes(tmp_path):
    # hand-computed: 2 striking of 40 -> N=0.05; acc_p=1/2; acc_c absent
    # lico = (1*0.95 + 2*0.5 + 4*1)/7 = 5.95/7 = 0.850
    records = [
        _record("s1", True, "permissive", correct=True),
        _record("s2", True, "permissive", correct=False),
        _record("s3", False),
    ]
    score = aggregate(records, total_items=40)
    paths = emit_report([("demo-model", score, records)], tmp_path)
    expected = (
        "model,n_striking,striking_pct,acc,n_permissive,acc_p,n_copyleft,acc_c,lico,errors\n"
        "demo-model,2,5.00%,0.50,2,0.50,0,-,0.850,0\n"
    )
    assert paths["csv"].read_text(encoding="utf-8") == expected


def test_emit_report_requires_rows(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path)


def test_lico_score_dict_shape():
    data = lico(5, 100, 0.4, 0.2).to_dict()
    assert data["n_striking"] == 5
    assert data["striking_rate"] == pytest.approx(0.05)
    assert data["weights"] == [1.0, 2.0, 4.0]
