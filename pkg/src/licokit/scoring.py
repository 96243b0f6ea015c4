"""Per-model compliance scores and report emission.

The compliance score combines the rate of strikingly similar generations
with license-answer accuracy, split by license category and weighted
1:2:4 toward copyleft accuracy:

    score = (w1*(1 - N) + w2*acc_p + w3*acc_c) / (w1 + w2 + w3)

where N = n_striking / total_items.  A missing accuracy (no striking
items in that category) substitutes 1, so a model with zero striking
generations scores exactly 1.0.  Records carrying a transport error note
are excluded from every denominator and surfaced in their own column.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from licokit.licenses import LicenseCategory

if TYPE_CHECKING:  # pragma: no cover
    from licokit.harness import EvalRecord

DEFAULT_WEIGHTS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class LiCoScore:
    """Aggregate compliance score for one model run."""

    n_striking: int
    total_items: int
    acc_p: float | None
    acc_c: float | None
    weights: tuple[float, float, float]
    lico: float
    n_permissive: int | None = None
    n_copyleft: int | None = None
    correct_permissive: int | None = None
    correct_copyleft: int | None = None
    acc_overall: float | None = None
    n_errors: int = 0

    @property
    def striking_rate(self) -> float:
        """N: the normalized count of strikingly similar generations."""
        return self.n_striking / self.total_items

    def to_dict(self) -> dict:
        return {
            "n_striking": self.n_striking,
            "total_items": self.total_items,
            "striking_rate": self.striking_rate,
            "n_permissive": self.n_permissive,
            "n_copyleft": self.n_copyleft,
            "correct_permissive": self.correct_permissive,
            "correct_copyleft": self.correct_copyleft,
            "acc_p": self.acc_p,
            "acc_c": self.acc_c,
            "acc_overall": self.acc_overall,
            "weights": list(self.weights),
            "lico": self.lico,
            "n_errors": self.n_errors,
        }


def lico(
    n_striking: int,
    total_items: int,
    acc_p: float | None = None,
    acc_c: float | None = None,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
) -> LiCoScore:
    """Exact formula application; absent accuracies substitute 1."""
    if total_items <= 0:
        raise ValueError("total_items must be positive")
    if not 0 <= n_striking <= total_items:
        raise ValueError(f"n_striking {n_striking} outside [0, {total_items}]")
    for name, acc in (("acc_p", acc_p), ("acc_c", acc_c)):
        if acc is not None and not 0.0 <= acc <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {acc}")
    w1, w2, w3 = weights
    rate = n_striking / total_items
    value = (
        w1 * (1.0 - rate)
        + w2 * (acc_p if acc_p is not None else 1.0)
        + w3 * (acc_c if acc_c is not None else 1.0)
    ) / (w1 + w2 + w3)
    return LiCoScore(
        n_striking=n_striking,
        total_items=total_items,
        acc_p=acc_p,
        acc_c=acc_c,
        weights=(w1, w2, w3),
        lico=value,
    )


def aggregate(
    records: Iterable["EvalRecord"],
    total_items: int,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
) -> LiCoScore:
    """Score one model's records: partition striking records by the
    ground-truth license category, compute per-category accuracies, and
    apply the scoring formula.

    Error-noted records are excluded from all counts except n_errors.
    """
    n_errors = 0
    n_p = n_c = correct_p = correct_c = 0
    for record in records:
        if record.error:
            n_errors += 1
            continue
        if record.verdict is None or not record.verdict.is_striking:
            continue
        if record.truth_category is None or record.grade is None:
            raise ValueError(
                f"striking record {record.snippet_id} lacks license grading; "
                "aggregate() expects a benchmark journal"
            )
        category = LicenseCategory(record.truth_category)
        if category is LicenseCategory.PERMISSIVE:
            n_p += 1
            correct_p += record.grade.correct
        else:
            n_c += 1
            correct_c += record.grade.correct

    n_striking = n_p + n_c
    acc_p = correct_p / n_p if n_p else None
    acc_c = correct_c / n_c if n_c else None
    base = lico(n_striking, total_items, acc_p, acc_c, weights)
    return LiCoScore(
        n_striking=n_striking,
        total_items=total_items,
        acc_p=acc_p,
        acc_c=acc_c,
        weights=base.weights,
        lico=base.lico,
        n_permissive=n_p,
        n_copyleft=n_c,
        correct_permissive=correct_p,
        correct_copyleft=correct_c,
        acc_overall=(correct_p + correct_c) / n_striking if n_striking else None,
        n_errors=n_errors,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

REPORT_COLUMNS = (
    "model",
    "n_striking",
    "striking_pct",
    "acc",
    "n_permissive",
    "acc_p",
    "n_copyleft",
    "acc_c",
    "lico",
    "errors",
)

DISTRIBUTION_COLUMNS = (
    "model",
    "snippet_id",
    "max_sim",
    "body_lines",
    "cyclomatic_complexity",
    "identical_comments",
)


def _fmt_acc(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def score_row(model: str, score: LiCoScore) -> dict[str, str]:
    """One report row; scores to three decimals, percentages to two."""
    return {
        "model": model,
        "n_striking": str(score.n_striking),
        "striking_pct": f"{100.0 * score.striking_rate:.2f}%",
        "acc": _fmt_acc(score.acc_overall),
        "n_permissive": str(score.n_permissive if score.n_permissive is not None else 0),
        "acc_p": _fmt_acc(score.acc_p),
        "n_copyleft": str(score.n_copyleft if score.n_copyleft is not None else 0),
        "acc_c": _fmt_acc(score.acc_c),
        "lico": f"{score.lico:.3f}",
        "errors": str(score.n_errors),
    }


def render_csv(rows: list[dict[str, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def render_markdown(rows: list[dict[str, str]]) -> str:
    lines = [
        "| " + " | ".join(REPORT_COLUMNS) + " |",
        "| " + " | ".join("---" for _ in REPORT_COLUMNS) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row[col] for col in REPORT_COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def distribution_rows(model: str, records: Iterable["EvalRecord"]) -> list[dict[str, str]]:
    """Per-record feature export for external plotting."""
    rows = []
    for record in records:
        if record.error or record.scores is None or record.verdict is None:
            continue
        rows.append(
            {
                "model": model,
                "snippet_id": record.snippet_id,
                "max_sim": f"{record.scores.max_sim:.6f}",
                "body_lines": str(record.reference_metrics.body_lines),
                "cyclomatic_complexity": str(record.reference_metrics.cyclomatic_complexity),
                "identical_comments": str(record.scores.identical_comments),
            }
        )
    return rows


def emit_report(
    scored: list[tuple[str, LiCoScore, list["EvalRecord"]]],
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write report.csv, report.md and distributions.csv under ``out_dir``."""
    if not scored:
        raise ValueError("emit_report needs at least one scored model")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = [score_row(model, score) for model, score, _ in scored]
    dist_rows: list[dict[str, str]] = []
    for model, _, records in scored:
        dist_rows.extend(distribution_rows(model, records))

    paths = {
        "csv": out / "report.csv",
        "md": out / "report.md",
        "distributions": out / "distributions.csv",
    }
    paths["csv"].write_text(render_csv(rows), encoding="utf-8")
    paths["md"].write_text(render_markdown(rows), encoding="utf-8")

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=DISTRIBUTION_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(dist_rows)
    paths["distributions"].write_text(buffer.getvalue(), encoding="utf-8")
    return paths
