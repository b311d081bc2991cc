"""The six-criterion feedback rubric and verdict containers.

Criterion descriptions are the exact wording shown to judges and annotators;
the grading prompt, the annotation UI, and the reports all render them from
this module so they can never drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

Verdict = Literal["yes", "no"]

CRITERION_CODES: tuple[str, ...] = ("EA", "ES", "EC", "FA", "FS", "FC")

CRITERION_NAMES: dict[str, str] = {
    "EA": "Explanation Accurate",
    "ES": "Explanation Selective",
    "EC": "Explanation Clear",
    "FA": "Fixes Accurate",
    "FS": "Fixes Selective",
    "FC": "Fixes Clear",
}

CRITERION_DESCRIPTIONS: dict[str, str] = {
    "EA": "the explanation identifies and mentions all ground truth bugs in the student program.",
    "ES": "the explanation does not mention non-existent (or non-relevant) bugs or issues.",
    "EC": (
        "the generated explanation is easy to understand by a novice programmer, presented in a "
        "readable format, and does not contain redundant or too little information (i.e., it is "
        "not vague about the cause of the issue). Note: this criterion is independent of the "
        "correctness of the explanations."
    ),
    "FA": "all required bug fixes are explained.",
    "FS": "no unnecessary changes are outlined.",
    "FC": "fixes are succinct and mention the unique changes to perform in the code.",
}


def criteria_block() -> str:
    """Rubric rendered as a bullet list for grading prompts and the UI."""
    return "\n".join(
        f"- {code} - {CRITERION_NAMES[code]}: {CRITERION_DESCRIPTIONS[code]}"
        for code in CRITERION_CODES
    )


@dataclass(frozen=True)
class RubricVerdicts:
    """A complete yes/no verdict for every criterion.

    rc (repair correct) is filled by test execution, never by a judge or an
    annotator, so it is optional and excluded from parsing/rendering.
    """

    values: dict[str, Verdict]
    rc: bool | None = None

    def __post_init__(self) -> None:
        missing = [c for c in CRITERION_CODES if c not in self.values]
        if missing:
            raise ValueError(f"incomplete verdicts, missing: {missing}")
        extra = [c for c in self.values if c not in CRITERION_CODES]
        if extra:
            raise ValueError(f"unknown criteria: {extra}")
        bad = {c: v for c, v in self.values.items() if v not in ("yes", "no")}
        if bad:
            raise ValueError(f"verdicts must be yes/no: {bad}")

    def __getitem__(self, code: str) -> Verdict:
        return self.values[code]

    def as_dict(self) -> dict[str, Verdict]:
        return {code: self.values[code] for code in CRITERION_CODES}


@dataclass(frozen=True)
class ParseFailure:
    """A judge output that did not yield all six verdicts.

    `partial` keeps whatever criteria did parse so a jury can still count
    those votes; `missing` criteria had no matching line at all, `ambiguous`
    ones matched a line whose answer was not yes/no.
    """

    missing: frozenset[str] = frozenset()
    ambiguous: frozenset[str] = frozenset()
    partial: dict[str, Verdict] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.missing and not self.ambiguous:
            raise ValueError("ParseFailure requires at least one missing or ambiguous criterion")


def render_verdicts(verdicts: RubricVerdicts) -> str:
    """Canonical one-line-per-criterion rendering, the parser's round-trip partner."""
    return "\n".join(f"{code}: {verdicts[code]}" for code in CRITERION_CODES)


def verdicts_to_json(v: RubricVerdicts | ParseFailure) -> dict:
    if isinstance(v, RubricVerdicts):
        out: dict = {"verdicts": v.as_dict()}
        if v.rc is not None:
            out["rc"] = v.rc
        return out
    return {
        "parse_failure": {
            "missing": sorted(v.missing),
            "ambiguous": sorted(v.ambiguous),
            "partial": {c: v.partial[c] for c in CRITERION_CODES if c in v.partial},
        }
    }


def verdicts_from_json(obj: dict) -> RubricVerdicts | ParseFailure:
    if "parse_failure" in obj:
        pf = obj["parse_failure"]
        return ParseFailure(
            missing=frozenset(pf.get("missing", [])),
            ambiguous=frozenset(pf.get("ambiguous", [])),
            partial=dict(pf.get("partial", {})),
        )
    return RubricVerdicts(values=dict(obj["verdicts"]), rc=obj.get("rc"))
