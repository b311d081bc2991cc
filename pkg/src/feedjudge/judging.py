"""Grade feedback with a judge model under SAG or GAG and parse the verdicts.

SAG (single-answer grading) is a two-step conversation: the judge first
solves the bug-finding task itself, then grades the target feedback against
its own analysis. GAG (reference grading) supplies the benchmark's ground
truth instead, in one request. Both share the grading block byte-for-byte:
same criteria text, same verdict-format instruction.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

from .benchmark import Assignment
from .errors import ConfigError, GatewayError
from .gateway import DEFAULT_MAX_TOKENS, BackendConfig, ChatMessage, ChatRequest, Gateway
from .generation import FeedbackRecord, build_generation_prompt
from .records import RecordId
from .rubric import CRITERION_CODES, CRITERION_NAMES, ParseFailure, RubricVerdicts, criteria_block
from .templates import load_template, render, render_numbered, render_test_cases

SAG = "SAG"
GAG = "GAG"
STRATEGIES = (SAG, GAG)

FORMAT_REMINDER = (
    "Reminder: for each grading criterion, provide your answer on a separate line "
    'using the format "criteria_name: yes/no".'
)


@dataclass(frozen=True)
class SagPlan:
    """Two sequential requests; step2 embeds the judge's own step1 answer."""

    step1: ChatRequest
    step2: Callable[[str], ChatRequest]


@dataclass(frozen=True)
class JudgementRecord:
    record_id: RecordId
    feedback_record_id: str
    judge_model_id: str
    strategy: str
    raw_output: str
    verdicts: RubricVerdicts | ParseFailure
    self_judgement: bool
    error: str | None = None

    def as_dict(self) -> dict:
        from .rubric import verdicts_to_json

        return {
            "record_id": self.record_id.as_dict(),
            "feedback_record_id": self.feedback_record_id,
            "judge_model_id": self.judge_model_id,
            "strategy": self.strategy,
            "raw_output": self.raw_output,
            **verdicts_to_json(self.verdicts),
            "self_judgement": self.self_judgement,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "JudgementRecord":
        from .rubric import verdicts_from_json

        return cls(
            record_id=RecordId.from_dict(obj["record_id"]),
            feedback_record_id=obj["feedback_record_id"],
            judge_model_id=obj["judge_model_id"],
            strategy=obj["strategy"],
            raw_output=obj["raw_output"],
            verdicts=verdicts_from_json(obj),
            self_judgement=obj["self_judgement"],
            error=obj.get("error"),
        )


def grading_block(feedback_text: str) -> str:
    return render("grade", feedback=feedback_text, criteria=criteria_block())


def build_sag_conversation(
    a: Assignment,
    f: FeedbackRecord,
    *,
    judge_model_id: str = "",
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> SagPlan:
    step1 = build_generation_prompt(a, model_id=judge_model_id, max_tokens=max_tokens)

    def step2(step1_output: str) -> ChatRequest:
        return ChatRequest(
            model_id=judge_model_id,
            messages=step1.messages
            + (
                ChatMessage(role="assistant", content=step1_output),
                ChatMessage(role="user", content=grading_block(f.raw_text)),
            ),
            max_tokens=max_tokens,
        )

    return SagPlan(step1=step1, step2=step2)


def build_gag_prompt(
    a: Assignment,
    f: FeedbackRecord,
    *,
    judge_model_id: str = "",
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> ChatRequest:
    if not a.ground_truth_bugs or not a.ground_truth_fixes:
        raise ConfigError(
            f"assignment {a.id!r} lacks ground truth; reference grading needs bugs and fixes"
        )
    user = render(
        "reference_grade",
        problem_description=a.problem_description,
        test_cases=render_test_cases(a),
        student_code=a.buggy_program,
        ground_truth_bugs=render_numbered(a.ground_truth_bugs),
        ground_truth_fixes=render_numbered(a.ground_truth_fixes),
        grading_block=grading_block(f.raw_text),
    )
    return ChatRequest(
        model_id=judge_model_id,
        messages=(
            ChatMessage(role="system", content=load_template("system")),
            ChatMessage(role="user", content=user),
        ),
        max_tokens=max_tokens,
    )


def _criterion_regexes() -> dict[str, re.Pattern]:
    patterns: dict[str, re.Pattern] = {}
    for code in CRITERION_CODES:
        full = re.escape(CRITERION_NAMES[code])
        name = rf"(?:{code}(?:\s*[-–—]\s*{full})?|{full})"
        patterns[code] = re.compile(
            rf"^[\s*_`#>]*{name}[\s*_`]*:[\s]*(.*)$",
            re.IGNORECASE,
        )
    return patterns


_CRITERION_RES = _criterion_regexes()
_LIST_MARKER_RE = re.compile(r"^\s*(?:[-*+•]\s+|\d+[.)]\s+)?")
_ANSWER_RE = re.compile(r"(yes|no)\b", re.IGNORECASE)


def parse_verdicts(raw: str) -> RubricVerdicts | ParseFailure:
    """Total parser: scans for `criterion: yes/no` lines; the last match wins.

    A criterion whose only matching lines carry a non-yes/no answer is
    reported as ambiguous; one that never matches is missing.
    """
    found: dict[str, str] = {}
    name_seen: set[str] = set()
    for line in raw.splitlines():
        clean = _LIST_MARKER_RE.sub("", line, count=1)
        for code in CRITERION_CODES:
            match = _CRITERION_RES[code].match(clean)
            if not match:
                continue
            answer_text = match.group(1).strip().lstrip("*_` ").strip()
            answer = _ANSWER_RE.match(answer_text)
            if answer:
                found[code] = answer.group(1).lower()
            else:
                name_seen.add(code)
    if len(found) == len(CRITERION_CODES):
        return RubricVerdicts(values=found)
    missing = frozenset(c for c in CRITERION_CODES if c not in found and c not in name_seen)
    ambiguous = frozenset(c for c in CRITERION_CODES if c not in found and c in name_seen)
    return ParseFailure(missing=missing, ambiguous=ambiguous, partial=found)


def _with_reminder(req: ChatRequest) -> ChatRequest:
    messages = list(req.messages)
    last = messages[-1]
    messages[-1] = ChatMessage(role=last.role, content=last.content + "\n\n" + FORMAT_REMINDER)
    return replace(req, messages=tuple(messages))


def judgement_record_id(a_id: str, judge_model_id: str, strategy: str, feedback_model: str) -> RecordId:
    return RecordId(
        assignment_id=a_id,
        actor_id=judge_model_id,
        kind="judgement",
        discriminator=f"{strategy}:{feedback_model}",
    )


def judge_feedback(
    gateway: Gateway,
    backend: BackendConfig,
    judge_model_id: str,
    strategy: str,
    a: Assignment,
    f: FeedbackRecord,
    *,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> JudgementRecord:
    """Run the one- or two-step grading plan; one format-reminder retry on parse failure."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    rid = judgement_record_id(a.id, judge_model_id, strategy, f.model_id)
    self_judgement = judge_model_id == f.model_id
    try:
        if strategy == SAG:
            plan = build_sag_conversation(a, f, judge_model_id=judge_model_id, max_tokens=max_tokens)
            step1_output = gateway.complete(plan.step1, backend).text
            grading_req = plan.step2(step1_output)
        else:
            grading_req = build_gag_prompt(a, f, judge_model_id=judge_model_id, max_tokens=max_tokens)
        raw = gateway.complete(grading_req, backend).text
        verdicts = parse_verdicts(raw)
        if isinstance(verdicts, ParseFailure):
            raw = gateway.complete(_with_reminder(grading_req), backend).text
            verdicts = parse_verdicts(raw)
    except GatewayError as exc:
        return JudgementRecord(
            record_id=rid,
            feedback_record_id=f.record_id.key(),
            judge_model_id=judge_model_id,
            strategy=strategy,
            raw_output="",
            verdicts=ParseFailure(missing=frozenset(CRITERION_CODES)),
            self_judgement=self_judgement,
            error=str(exc),
        )
    return JudgementRecord(
        record_id=rid,
        feedback_record_id=f.record_id.key(),
        judge_model_id=judge_model_id,
        strategy=strategy,
        raw_output=raw,
        verdicts=verdicts,
        self_judgement=self_judgement,
    )


def run_judging(
    assignments: list[Assignment],
    feedback: list[FeedbackRecord],
    judge_model_ids: list[str],
    strategies: list[str],
    gateway: Gateway,
    backend: BackendConfig,
    *,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    parallelism: int = 1,
) -> list[JudgementRecord]:
    """Judge every successfully generated feedback with every judge under every strategy."""
    by_id = {a.id: a for a in assignments}
    feedback = [f for f in feedback if f.error is None]
    orphans = sorted({f.assignment_id for f in feedback} - set(by_id))
    if orphans:
        raise ConfigError(f"feedback references unknown assignments: {orphans}")
    jobs = [
        (strategy, judge, f)
        for strategy in strategies
        for judge in judge_model_ids
        for f in feedback
    ]
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = [
            pool.submit(
                judge_feedback,
                gateway,
                backend,
                judge,
                strategy,
                by_id[f.assignment_id],
                f,
                max_tokens=max_tokens,
            )
            for strategy, judge, f in jobs
        ]
        return [fut.result() for fut in futures]
