"""Benchmark loading, validation, and serialization.

The benchmark file is UTF-8 JSONL, one assignment per line:

    {"id": ..., "problem_description": ..., "test_cases": [...],
     "buggy_program": ..., "ground_truth_bugs": [...], "ground_truth_fixes": [...]}

Each test case is either {"id", "invocation", "expected"} or {"id", "assertion"}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import BenchmarkFormatError, ConfigError

if TYPE_CHECKING:
    from .repair import SandboxConfig, TestOutcome


@dataclass(frozen=True)
class TestCase:
    """One unit test: an invocation/expected pair or a self-contained assertion."""

    __test__ = False  # keep pytest from collecting this dataclass

    id: str
    invocation: str | None = None
    expected: str | None = None
    assertion: str | None = None

    def __post_init__(self) -> None:
        pair = self.invocation is not None and self.expected is not None
        lone = self.assertion is not None
        if pair == lone:
            raise ValueError(
                f"test case {self.id!r} needs exactly one of invocation+expected or assertion"
            )

    def as_dict(self) -> dict:
        if self.assertion is not None:
            return {"id": self.id, "assertion": self.assertion}
        return {"id": self.id, "invocation": self.invocation, "expected": self.expected}


@dataclass(frozen=True)
class Assignment:
    """One benchmark item: a buggy student program plus its ground truth."""

    id: str
    problem_description: str
    test_cases: tuple[TestCase, ...]
    buggy_program: str
    ground_truth_bugs: tuple[str, ...]
    ground_truth_fixes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.test_cases:
            raise ValueError(f"assignment {self.id!r} has no test cases")
        if not self.ground_truth_bugs:
            raise ValueError(f"assignment {self.id!r} has no ground truth bugs")

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "problem_description": self.problem_description,
            "test_cases": [t.as_dict() for t in self.test_cases],
            "buggy_program": self.buggy_program,
            "ground_truth_bugs": list(self.ground_truth_bugs),
            "ground_truth_fixes": list(self.ground_truth_fixes),
        }


_REQUIRED_FIELDS = (
    "id",
    "problem_description",
    "test_cases",
    "buggy_program",
    "ground_truth_bugs",
    "ground_truth_fixes",
)


def _parse_test_case(obj: dict, *, index: int) -> TestCase:
    if not isinstance(obj, dict) or "id" not in obj:
        raise BenchmarkFormatError("test case without id", record_index=index, field="test_cases")
    has_pair = "invocation" in obj and "expected" in obj
    has_assert = "assertion" in obj
    if has_pair == has_assert:
        raise BenchmarkFormatError(
            f"test case {obj.get('id')!r} must have exactly one of invocation+expected or assertion",
            record_index=index,
            field="test_cases",
        )
    if has_assert:
        return TestCase(id=str(obj["id"]), assertion=str(obj["assertion"]))
    return TestCase(id=str(obj["id"]), invocation=str(obj["invocation"]), expected=str(obj["expected"]))


def _parse_assignment(obj: dict, *, index: int) -> Assignment:
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise BenchmarkFormatError("missing field", record_index=index, field=name)
    for name in ("id", "problem_description", "buggy_program"):
        if not isinstance(obj[name], str):
            raise BenchmarkFormatError("expected a string", record_index=index, field=name)
    for name in ("test_cases", "ground_truth_bugs", "ground_truth_fixes"):
        if not isinstance(obj[name], list):
            raise BenchmarkFormatError("expected an array", record_index=index, field=name)
    if not obj["test_cases"]:
        raise BenchmarkFormatError("must not be empty", record_index=index, field="test_cases")
    if not obj["ground_truth_bugs"]:
        raise BenchmarkFormatError("must not be empty", record_index=index, field="ground_truth_bugs")
    if not obj["ground_truth_fixes"]:
        raise BenchmarkFormatError("must not be empty", record_index=index, field="ground_truth_fixes")
    return Assignment(
        id=obj["id"],
        problem_description=obj["problem_description"],
        test_cases=tuple(_parse_test_case(t, index=index) for t in obj["test_cases"]),
        buggy_program=obj["buggy_program"],
        ground_truth_bugs=tuple(str(b) for b in obj["ground_truth_bugs"]),
        ground_truth_fixes=tuple(str(f) for f in obj["ground_truth_fixes"]),
    )


def load_benchmark(path: str | Path) -> list[Assignment]:
    """Load all assignments in file order; duplicate ids are rejected."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"benchmark file not found: {path}")
    assignments: list[Assignment] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BenchmarkFormatError(f"invalid JSON: {exc}", record_index=index) from exc
            assignment = _parse_assignment(obj, index=index)
            if assignment.id in seen:
                raise ConfigError(f"duplicate assignment id {assignment.id!r} at record {index}")
            seen.add(assignment.id)
            assignments.append(assignment)
    return assignments


def save_benchmark(assignments: list[Assignment], path: str | Path) -> None:
    """Write assignments back out in the benchmark file schema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for a in assignments:
            fh.write(json.dumps(a.as_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class ValidationReport:
    """Per-test behavior of the buggy program; defect means it passed everything."""

    assignment_id: str
    per_test: tuple["TestOutcome", ...]
    fails: tuple[str, ...]
    defect: bool


def validate_assignment(a: Assignment, runner: "SandboxConfig") -> ValidationReport:
    """Run the buggy program against its own tests and flag benchmark defects."""
    from .repair import run_test_suite  # local import, repair builds on this module

    outcomes = run_test_suite(a.buggy_program, a, runner)
    fails = tuple(o.test_id for o in outcomes if o.outcome != "pass")
    return ValidationReport(
        assignment_id=a.id,
        per_test=tuple(outcomes),
        fails=fails,
        defect=not fails,
    )
