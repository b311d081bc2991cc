"""Combine several judges into one ensemble verdict by per-criterion majority.

A member abstains on a criterion when its output did not parse there; the
remaining votes decide by strict majority, a tie falls to no (the scoring
metric punishes false positives, so the conservative default is negative),
and a criterion nobody answered stays unresolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError
from .judging import JudgementRecord, judgement_record_id
from .rubric import CRITERION_CODES, ParseFailure, RubricVerdicts

ENSEMBLE_ID = "ensemble"


@dataclass(frozen=True)
class JuryConfig:
    member_judge_ids: tuple[str, ...]
    strategy: str
    abstention_policy: str = "exclude_then_majority_tie_no"

    def __post_init__(self) -> None:
        if len(self.member_judge_ids) < 3 or len(self.member_judge_ids) % 2 == 0:
            raise ConfigError("jury needs an odd number of members, at least 3")
        if len(set(self.member_judge_ids)) != len(self.member_judge_ids):
            raise ConfigError("jury members must be distinct")
        if self.abstention_policy != "exclude_then_majority_tie_no":
            raise ConfigError(f"unknown abstention policy: {self.abstention_policy!r}")


def _vote(verdicts: RubricVerdicts | ParseFailure, code: str) -> str | None:
    if isinstance(verdicts, RubricVerdicts):
        return verdicts[code]
    return verdicts.partial.get(code)


def majority_vote(
    member_verdicts: Sequence[RubricVerdicts | ParseFailure],
) -> RubricVerdicts | ParseFailure:
    """Per-criterion strict majority over the members that produced a verdict."""
    if not member_verdicts:
        raise ValueError("no member verdicts")
    resolved: dict[str, str] = {}
    unresolved: set[str] = set()
    for code in CRITERION_CODES:
        votes = [v for m in member_verdicts if (v := _vote(m, code)) is not None]
        if not votes:
            unresolved.add(code)
            continue
        yes = votes.count("yes")
        no = votes.count("no")
        resolved[code] = "yes" if yes > no else "no"
    if unresolved:
        return ParseFailure(missing=frozenset(unresolved), partial=resolved)
    return RubricVerdicts(values=resolved)


def run_jury(cfg: JuryConfig, judgements: Sequence[JudgementRecord]) -> list[JudgementRecord]:
    """One synthetic ensemble judgement per feedback covered by all members."""
    members = {
        (j.judge_model_id, j.feedback_record_id): j
        for j in judgements
        if j.strategy == cfg.strategy and j.judge_model_id in cfg.member_judge_ids
    }
    feedback_ids = sorted({fid for _, fid in members})
    if not feedback_ids:
        raise ConfigError(f"no member judgements found for strategy {cfg.strategy}")
    out: list[JudgementRecord] = []
    for fid in feedback_ids:
        votes: list[RubricVerdicts | ParseFailure] = []
        for member in cfg.member_judge_ids:
            record = members.get((member, fid))
            if record is None:
                raise ConfigError(f"member {member!r} has no judgement for feedback {fid!r}")
            votes.append(record.verdicts)
        # feedback key: kind/assignment/model/discriminator
        _, assignment_id, feedback_model, _ = fid.split("/")
        out.append(
            JudgementRecord(
                record_id=judgement_record_id(assignment_id, ENSEMBLE_ID, cfg.strategy, feedback_model),
                feedback_record_id=fid,
                judge_model_id=ENSEMBLE_ID,
                strategy=cfg.strategy,
                raw_output="",
                verdicts=majority_vote(votes),
                self_judgement=False,
            )
        )
    return out
