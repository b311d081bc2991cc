"""Feedback generation: build the prompt, call the model, keep the record.

Failed generations are kept as records with an error tag rather than dropped,
so downstream reports can state exactly how many items were excluded.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

from .benchmark import Assignment
from .errors import GatewayError
from .gateway import DEFAULT_MAX_TOKENS, BackendConfig, ChatMessage, ChatRequest, Gateway, cache_key
from .records import RecordId
from .repair import extract_code_blocks
from .templates import load_template, render, render_test_cases


@dataclass(frozen=True)
class FeedbackRecord:
    record_id: RecordId
    assignment_id: str
    model_id: str
    prompt_digest: str
    raw_text: str
    extracted_code_blocks: tuple[str, ...]
    created_at: str
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "record_id": self.record_id.as_dict(),
            "assignment_id": self.assignment_id,
            "model_id": self.model_id,
            "prompt_digest": self.prompt_digest,
            "raw_text": self.raw_text,
            "extracted_code_blocks": list(self.extracted_code_blocks),
            "created_at": self.created_at,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeedbackRecord":
        return cls(
            record_id=RecordId.from_dict(obj["record_id"]),
            assignment_id=obj["assignment_id"],
            model_id=obj["model_id"],
            prompt_digest=obj["prompt_digest"],
            raw_text=obj["raw_text"],
            extracted_code_blocks=tuple(obj.get("extracted_code_blocks", [])),
            created_at=obj["created_at"],
            error=obj.get("error"),
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def build_generation_prompt(
    a: Assignment,
    *,
    model_id: str = "",
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> ChatRequest:
    """System prompt plus the task description with the assignment interpolated."""
    user = render(
        "generate",
        problem_description=a.problem_description,
        test_cases=render_test_cases(a),
        student_code=a.buggy_program,
    )
    return ChatRequest(
        model_id=model_id,
        messages=(
            ChatMessage(role="system", content=load_template("system")),
            ChatMessage(role="user", content=user),
        ),
        max_tokens=max_tokens,
    )


def feedback_record_id(a_id: str, model_id: str) -> RecordId:
    return RecordId(assignment_id=a_id, actor_id=model_id, kind="feedback", discriminator="0")


def generate_feedback(
    a: Assignment,
    gateway: Gateway,
    backend: BackendConfig,
    model_id: str,
    *,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> FeedbackRecord:
    """One feedback record per (assignment, model); gateway failures become error entries."""
    req = build_generation_prompt(a, model_id=model_id, max_tokens=max_tokens)
    digest = cache_key(req, backend.name)
    rid = feedback_record_id(a.id, model_id)
    try:
        result = gateway.complete(req, backend)
    except GatewayError as exc:
        return FeedbackRecord(
            record_id=rid,
            assignment_id=a.id,
            model_id=model_id,
            prompt_digest=digest,
            raw_text="",
            extracted_code_blocks=(),
            created_at=_now(),
            error=str(exc),
        )
    return FeedbackRecord(
        record_id=rid,
        assignment_id=a.id,
        model_id=model_id,
        prompt_digest=digest,
        raw_text=result.text,
        extracted_code_blocks=tuple(extract_code_blocks(result.text)),
        created_at=_now(),
    )


def run_generation(
    assignments: list[Assignment],
    model_ids: list[str],
    gateway: Gateway,
    backend: BackendConfig,
    *,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    parallelism: int = 1,
) -> list[FeedbackRecord]:
    """Every (model, assignment) pair, in roster-then-file order."""
    jobs = [(model, a) for model in model_ids for a in assignments]
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = [
            pool.submit(generate_feedback, a, gateway, backend, model, max_tokens=max_tokens)
            for model, a in jobs
        ]
        return [f.result() for f in futures]
