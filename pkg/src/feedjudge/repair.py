"""Extract repaired programs from feedback text and verify them by execution.

Candidate programs are untrusted student-facing model output, so every test
runs in its own child process built from a throwaway script (candidate source
plus one test), killed on timeout, with socket creation disabled by default.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .benchmark import Assignment, TestCase
from .errors import SandboxUnavailableError

if TYPE_CHECKING:
    from .generation import FeedbackRecord

DEFAULT_RUNNER = f"{sys.executable} {{file}}"

Outcome = str  # pass | fail | timeout | crash


@dataclass(frozen=True)
class SandboxConfig:
    """How candidate programs get executed."""

    runner_command_template: str = DEFAULT_RUNNER
    per_test_timeout_s: float = 10.0
    working_dir: str | None = None
    network_disabled: bool = True

    def __post_init__(self) -> None:
        if self.per_test_timeout_s <= 0:
            raise ValueError("per_test_timeout_s must be positive")
        if "{file}" not in self.runner_command_template:
            raise ValueError("runner_command_template needs a {file} placeholder")


@dataclass(frozen=True)
class TestOutcome:
    test_id: str
    outcome: Outcome


@dataclass(frozen=True)
class RepairResult:
    feedback_record_id: str
    candidate_found: bool
    per_test: tuple[TestOutcome, ...]
    rc: bool

    def as_dict(self) -> dict:
        return {
            "feedback_record_id": self.feedback_record_id,
            "candidate_found": self.candidate_found,
            "per_test": [{"test_id": t.test_id, "outcome": t.outcome} for t in self.per_test],
            "rc": self.rc,
        }


_FENCE_RE = re.compile(r"```([^\n`]*)\n(.*?)```", re.DOTALL)
_DEF_RE = re.compile(r"^\s*def\s+\w+\s*\(", re.MULTILINE)


def _looks_like_diff(lang: str, body: str) -> bool:
    if lang.strip().lower() == "diff":
        return True
    lines = [ln for ln in body.splitlines() if ln.strip()]
    if not lines:
        return False
    markers = sum(1 for ln in lines if ln.startswith(("+", "-", "@@")))
    return markers >= max(1, len(lines) // 2)


def extract_code_blocks(raw_text: str) -> list[str]:
    """All fenced blocks that define a function, skipping diff-style snippets."""
    blocks: list[str] = []
    for match in _FENCE_RE.finditer(raw_text):
        lang, body = match.group(1), match.group(2)
        if _looks_like_diff(lang, body):
            continue
        if _DEF_RE.search(body):
            blocks.append(body.strip("\n"))
    return blocks


def extract_candidate_repair(raw_text: str) -> str | None:
    """Last fenced code block that defines a function; diffs and fragments are skipped."""
    blocks = extract_code_blocks(raw_text)
    return blocks[-1] if blocks else None


_NETWORK_GUARD = """\
import socket as _socket

def _no_network(*args, **kwargs):
    raise OSError("network access is disabled in the sandbox")

_socket.socket = _no_network
_socket.create_connection = _no_network
"""


def _indent(text: str, prefix: str = "    ") -> str:
    return "\n".join(prefix + line if line.strip() else line for line in text.splitlines())


def build_test_script(source: str, test: TestCase, cfg: SandboxConfig) -> str:
    """One self-contained script: candidate source plus a single test.

    The child reports its verdict by writing pass/fail/crash into the file
    named by argv[1]; a missing report (early exit, import crash) reads as
    crash, and the parent maps a timeout kill to timeout.
    """
    if test.assertion is not None:
        test_body = _indent(test.assertion)
    else:
        test_body = _indent(
            f"_result = ({test.invocation})\n"
            f"_expected = ({test.expected})\n"
            f"assert _result == _expected, f\"expected {{_expected!r}}, got {{_result!r}}\""
        )
    guard = _NETWORK_GUARD if cfg.network_disabled else ""
    return (
        "import sys as _sys\n"
        "_outcome_path = _sys.argv[1]\n"
        "\n"
        "def _report(status):\n"
        "    with open(_outcome_path, 'w') as _fh:\n"
        "        _fh.write(status)\n"
        "\n"
        f"{guard}"
        "\n"
        f"{source}\n"
        "\n"
        "try:\n"
        f"{test_body}\n"
        "except AssertionError:\n"
        "    _report('fail')\n"
        "except BaseException:\n"
        "    _report('crash')\n"
        "else:\n"
        "    _report('pass')\n"
    )


def run_single_test(source: str, test: TestCase, cfg: SandboxConfig) -> TestOutcome:
    with tempfile.TemporaryDirectory(dir=cfg.working_dir) as tmp:
        script = Path(tmp) / "candidate_test.py"
        outcome_file = Path(tmp) / "outcome.txt"
        script.write_text(build_test_script(source, test, cfg), encoding="utf-8")
        cmd = shlex.split(cfg.runner_command_template.format(file=str(script)))
        cmd.append(str(outcome_file))
        try:
            subprocess.run(
                cmd,
                cwd=tmp,
                timeout=cfg.per_test_timeout_s,
                capture_output=True,
            )
        except subprocess.TimeoutExpired:
            return TestOutcome(test.id, "timeout")
        except FileNotFoundError as exc:
            raise SandboxUnavailableError(f"sandbox runner not executable: {cmd[0]}") from exc
        if outcome_file.exists():
            status = outcome_file.read_text(encoding="utf-8").strip()
            if status in ("pass", "fail", "crash"):
                return TestOutcome(test.id, status)
        return TestOutcome(test.id, "crash")


def run_test_suite(source: str, a: Assignment, cfg: SandboxConfig) -> list[TestOutcome]:
    """Run every test case of the assignment against the given source."""
    return [run_single_test(source, test, cfg) for test in a.test_cases]


def evaluate_repair(
    candidate: str,
    a: Assignment,
    cfg: SandboxConfig,
    *,
    feedback_record_id: str = "",
) -> RepairResult:
    if not candidate.strip():
        raise ValueError("candidate source must be non-empty")
    per_test = tuple(run_test_suite(candidate, a, cfg))
    rc = all(t.outcome == "pass" for t in per_test)
    return RepairResult(
        feedback_record_id=feedback_record_id,
        candidate_found=True,
        per_test=per_test,
        rc=rc,
    )


def evaluate_feedback_repair(
    record: "FeedbackRecord",
    a: Assignment,
    cfg: SandboxConfig,
) -> RepairResult:
    """Extraction plus execution; no extractable candidate means rc is false."""
    candidate = extract_candidate_repair(record.raw_text)
    if candidate is None:
        return RepairResult(
            feedback_record_id=record.record_id.key(),
            candidate_found=False,
            per_test=(),
            rc=False,
        )
    return evaluate_repair(candidate, a, cfg, feedback_record_id=record.record_id.key())


def rc_column(
    feedback_records: Iterable["FeedbackRecord"],
    benchmark: list[Assignment],
    cfg: SandboxConfig,
    *,
    parallelism: int = 1,
) -> tuple[dict[str, float], list[RepairResult]]:
    """Per-model fraction of feedback whose embedded repair passes all tests."""
    by_id = {a.id: a for a in benchmark}
    records = list(feedback_records)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(
            pool.map(lambda r: evaluate_feedback_repair(r, by_id[r.assignment_id], cfg), records)
        )
    totals: dict[str, int] = {}
    correct: dict[str, int] = {}
    for record, result in zip(records, results):
        totals[record.model_id] = totals.get(record.model_id, 0) + 1
        correct[record.model_id] = correct.get(record.model_id, 0) + (1 if result.rc else 0)
    proportions = {model: correct[model] / totals[model] for model in totals}
    return proportions, results
