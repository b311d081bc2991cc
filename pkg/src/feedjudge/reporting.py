"""Render the feedback table and the judge table as CSV and aligned text.

All floats print with two decimals, half-up. The judge table shows the SAG
value followed by the signed GAG delta in parentheses; cells that are
undefined (a jury never judges its own feedback) print as "/". Rendering is
a pure function of its inputs: same scorecards, same bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .errors import ConfigError
from .metrics import ScoreCard, grouped_proportion
from .rubric import CRITERION_CODES, RubricVerdicts

INDIVIDUAL_COLUMNS: tuple[str, ...] = CRITERION_CODES + ("RC",)

DEFAULT_GROUPS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("EA,ES,EC", ("EA", "ES", "EC")),
    ("FA,FS,FC", ("FA", "FS", "FC")),
    ("FA,FS,FC,RC", ("FA", "FS", "FC", "RC")),
    ("ALL", ("EA", "ES", "EC", "FA", "FS", "FC", "RC")),
    ("EA,ES,FA,FS", ("EA", "ES", "FA", "FS")),
)


def round2(x: float) -> Decimal:
    d = Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return Decimal("0.00") if d == 0 else d


def fmt2(x: float | None) -> str:
    return "/" if x is None else str(round2(x))


def fmt_delta(sag: float | None, gag: float | None) -> str:
    """SAG score with the GAG difference in parentheses, e.g. "0.09 (+0.31)"."""
    if sag is None and gag is None:
        return "/"
    if sag is None:
        return f"/ (gag {fmt2(gag)})"
    if gag is None:
        return f"{fmt2(sag)} (/)"
    delta = round2(gag - sag)
    return f"{fmt2(sag)} ({delta:+.2f})"


@dataclass(frozen=True)
class FeedbackTableRow:
    model_id: str
    individual: dict[str, float]
    grouped: dict[str, float]


def feedback_table_rows(
    model_ids: Sequence[str],
    gold_by_model: dict[str, list[RubricVerdicts]],
    groups: Iterable[tuple[str, tuple[str, ...]]] = DEFAULT_GROUPS,
) -> list[FeedbackTableRow]:
    """Per-model yes-proportions for each criterion and each criteria group.

    gold_by_model maps model id to that model's gold-annotated verdicts with
    the rc flag already filled from repair evaluation.
    """
    rows = []
    for model in model_ids:
        assessments = gold_by_model.get(model, [])
        if not assessments:
            raise ConfigError(f"no gold annotations for model {model!r}")
        individual = {code: grouped_proportion(assessments, [code]) for code in CRITERION_CODES}
        individual["RC"] = grouped_proportion(assessments, ["RC"])
        grouped = {name: grouped_proportion(assessments, members) for name, members in groups}
        rows.append(FeedbackTableRow(model_id=model, individual=individual, grouped=grouped))
    return rows


@dataclass(frozen=True)
class RenderedTable:
    csv_text: str
    txt_text: str


def _to_csv(header_comment: str, rows: list[list[str]]) -> str:
    buf = io.StringIO()
    buf.write(header_comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _to_aligned(header_comment: str, rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = [header_comment]
    for row in rows:
        cells = [cell.ljust(widths[i]) for i, cell in enumerate(row)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def render_feedback_table(
    rows: Sequence[FeedbackTableRow],
    *,
    manifest_digest: str = "",
) -> RenderedTable:
    if not rows:
        raise ConfigError("no feedback rows to render")
    known = [name for name, _ in DEFAULT_GROUPS if name in rows[0].grouped]
    group_names = known + sorted(set(rows[0].grouped) - set(known))
    table = [["feedback model", *INDIVIDUAL_COLUMNS, *group_names]]
    for row in rows:
        table.append(
            [row.model_id]
            + [fmt2(row.individual[c]) for c in INDIVIDUAL_COLUMNS]
            + [fmt2(row.grouped[g]) for g in group_names]
        )
    comment = f"# manifest: {manifest_digest}"
    return RenderedTable(csv_text=_to_csv(comment, table), txt_text=_to_aligned(comment, table))


def render_judge_table(
    sag_cards: Sequence[ScoreCard],
    gag_cards: Sequence[ScoreCard],
    *,
    manifest_digest: str = "",
) -> RenderedTable:
    sag_by_judge = {c.judge_id: c for c in sag_cards}
    gag_by_judge = {c.judge_id: c for c in gag_cards}
    if set(sag_by_judge) != set(gag_by_judge):
        raise ConfigError(
            f"judge sets differ between strategies: {sorted(set(sag_by_judge) ^ set(gag_by_judge))}"
        )
    table = [["judge", *CRITERION_CODES, "AVGO", "AVGS", "kappa", "excluded"]]
    for judge in sag_by_judge:
        sag, gag = sag_by_judge[judge], gag_by_judge[judge]
        cells = [judge]
        for code in CRITERION_CODES:
            cells.append(fmt_delta(sag.per_criterion_f05[code], gag.per_criterion_f05[code]))
        cells.append(fmt_delta(sag.avgo, gag.avgo))
        cells.append(fmt_delta(sag.avgs, gag.avgs))
        cells.append(fmt_delta(sag.kappa, gag.kappa))
        cells.append(str(sag.excluded_count + gag.excluded_count))
        table.append(cells)
    comment = f"# manifest: {manifest_digest}"
    return RenderedTable(csv_text=_to_csv(comment, table), txt_text=_to_aligned(comment, table))
