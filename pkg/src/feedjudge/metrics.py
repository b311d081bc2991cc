"""Agreement and quality metrics for verdicts.

Conventions for degenerate cases: precision or recall with an empty
denominator is 0; a class with zero support contributes nothing to the
weighted sum; chance agreement of 1 yields kappa 1 when observed agreement
is also 1, else 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ConfigError
from .rubric import CRITERION_CODES, ParseFailure, RubricVerdicts

if TYPE_CHECKING:
    from .judging import JudgementRecord

_CLASSES = ("yes", "no")


@dataclass(frozen=True)
class FBetaConfig:
    beta: float = 0.5
    averaging: str = "weighted"

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.averaging != "weighted":
            raise ValueError(f"unsupported averaging: {self.averaging}")


def f_beta(pred: Sequence[str], truth: Sequence[str], cfg: FBetaConfig = FBetaConfig()) -> float:
    """Class-support weighted F-beta over the yes/no label pair."""
    if not pred or len(pred) != len(truth):
        raise ValueError("pred and truth must be equal-length and non-empty")
    bad = {label for label in (*pred, *truth) if label not in _CLASSES}
    if bad:
        raise ValueError(f"labels must be yes/no, got: {sorted(bad)}")
    beta_sq = cfg.beta * cfg.beta
    weighted_sum = 0.0
    total_support = 0
    for cls in _CLASSES:
        tp = sum(1 for p, t in zip(pred, truth) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(pred, truth) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(pred, truth) if p != cls and t == cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        denom = beta_sq * precision + recall
        score = (1 + beta_sq) * precision * recall / denom if denom else 0.0
        weighted_sum += support * score
        total_support += support
    return weighted_sum / total_support


def _kappa_components(a: Sequence[str], b: Sequence[str]) -> tuple[float, float, float]:
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = set(a) | set(b)
    p_e = sum((a.count(label) / n) * (b.count(label) / n) for label in labels)
    if p_e >= 1.0:
        return p_o, 1.0, 1.0 if p_o == 1.0 else 0.0
    return p_o, p_e, (p_o - p_e) / (1.0 - p_e)


def cohen_kappa(a: Sequence[str], b: Sequence[str]) -> float:
    """Chance-corrected agreement between two raters' label sequences."""
    if not a or len(a) != len(b):
        raise ValueError("rater sequences must be equal-length and non-empty")
    return _kappa_components(list(a), list(b))[2]


def grouped_proportion(
    assessments: Iterable[RubricVerdicts],
    group: Iterable[str],
) -> float:
    """Fraction of assessments where every criterion in the group is yes.

    "RC" may appear in the group; it counts as yes iff the assessment's rc
    flag is true, and assessments lacking an rc flag are a caller error.
    """
    group = list(group)
    rubric_part = [c for c in group if c != "RC"]
    needs_rc = "RC" in group
    unknown = [c for c in rubric_part if c not in CRITERION_CODES]
    if unknown:
        raise ValueError(f"unknown criteria in group: {unknown}")
    items = list(assessments)
    if not items:
        raise ValueError("no assessments in scope")
    hits = 0
    for item in items:
        if needs_rc and item.rc is None:
            raise ConfigError("assessment lacks an rc flag but the group includes RC")
        ok = all(item[c] == "yes" for c in rubric_part)
        if needs_rc:
            ok = ok and bool(item.rc)
        hits += 1 if ok else 0
    return hits / len(items)


@dataclass(frozen=True)
class AgreementReport:
    """Two-rater agreement over flattened criterion-by-item pairs."""

    p_o: float
    p_e: float
    kappa: float
    per_criterion_kappa: dict[str, float]
    n_items: int


def agreement_between(
    first: dict[str, RubricVerdicts],
    second: dict[str, RubricVerdicts],
    item_ids: Sequence[str],
) -> AgreementReport:
    """Agreement of two annotators over a shared item set."""
    if not item_ids:
        raise ValueError("no items to compare")
    flat_a: list[str] = []
    flat_b: list[str] = []
    per_criterion: dict[str, float] = {}
    for code in CRITERION_CODES:
        col_a = [first[i][code] for i in item_ids]
        col_b = [second[i][code] for i in item_ids]
        per_criterion[code] = _kappa_components(col_a, col_b)[2]
        flat_a.extend(col_a)
        flat_b.extend(col_b)
    p_o, p_e, kappa = _kappa_components(flat_a, flat_b)
    return AgreementReport(
        p_o=p_o,
        p_e=p_e,
        kappa=kappa,
        per_criterion_kappa=per_criterion,
        n_items=len(item_ids),
    )


@dataclass(frozen=True)
class ScoreCard:
    """One judge's quality against gold labels under one strategy."""

    judge_id: str
    strategy: str
    per_criterion_f05: dict[str, float | None]
    kappa: float | None
    avgo: float | None
    avgs: float | None
    excluded_count: int
    included_count: int = 0


def _mean_criterion_f05(
    pairs: list[tuple[RubricVerdicts, RubricVerdicts]],
    cfg: FBetaConfig,
) -> float | None:
    if not pairs:
        return None
    scores = []
    for code in CRITERION_CODES:
        pred = [p[code] for p, _ in pairs]
        truth = [g[code] for _, g in pairs]
        scores.append(f_beta(pred, truth, cfg))
    return sum(scores) / len(scores)


def judge_scorecard(
    judgements: Sequence["JudgementRecord"],
    gold: dict[str, RubricVerdicts],
    strategy: str,
    cfg: FBetaConfig = FBetaConfig(),
) -> ScoreCard:
    """Score one judge's verdicts against gold annotations.

    Judgements whose verdicts failed to parse are excluded and counted, never
    silently dropped. AVGO/AVGS restrict to feedback written by other models
    vs the judge's own.
    """
    scoped = [j for j in judgements if j.strategy == strategy]
    if not scoped:
        raise ValueError(f"no judgements for strategy {strategy!r}")
    judge_ids = {j.judge_model_id for j in scoped}
    if len(judge_ids) != 1:
        raise ValueError(f"judgements span several judges: {sorted(judge_ids)}")
    included: list["JudgementRecord"] = []
    excluded = 0
    for j in scoped:
        if isinstance(j.verdicts, ParseFailure) or j.error is not None:
            excluded += 1
        else:
            included.append(j)
    pairs: list[tuple[RubricVerdicts, RubricVerdicts]] = []
    other_pairs: list[tuple[RubricVerdicts, RubricVerdicts]] = []
    self_pairs: list[tuple[RubricVerdicts, RubricVerdicts]] = []
    any_self = any(j.self_judgement for j in scoped)
    for j in included:
        if j.feedback_record_id not in gold:
            raise ConfigError(f"no gold annotation for feedback {j.feedback_record_id}")
        pair = (j.verdicts, gold[j.feedback_record_id])
        pairs.append(pair)
        (self_pairs if j.self_judgement else other_pairs).append(pair)

    per_criterion: dict[str, float | None] = {}
    for code in CRITERION_CODES:
        if pairs:
            per_criterion[code] = f_beta(
                [p[code] for p, _ in pairs], [g[code] for _, g in pairs], cfg
            )
        else:
            per_criterion[code] = None
    if pairs:
        flat_pred = [p[code] for p, _ in pairs for code in CRITERION_CODES]
        flat_gold = [g[code] for _, g in pairs for code in CRITERION_CODES]
        kappa = cohen_kappa(flat_pred, flat_gold)
    else:
        kappa = None
    return ScoreCard(
        judge_id=next(iter(judge_ids)),
        strategy=strategy,
        per_criterion_f05=per_criterion,
        kappa=kappa,
        avgo=_mean_criterion_f05(other_pairs, cfg),
        avgs=_mean_criterion_f05(self_pairs, cfg) if any_self else None,
        excluded_count=excluded,
        included_count=len(included),
    )
