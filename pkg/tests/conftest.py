from __future__ import annotations

from pathlib import Path

import pytest

from feedjudge.benchmark import Assignment, TestCase, save_benchmark
from feedjudge.gateway import BackendConfig, Gateway

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def make_assignment(
    aid: str = "p01",
    *,
    buggy: str = "def add(a, b):\n    return a - b",
    tests: tuple[TestCase, ...] | None = None,
    bugs: tuple[str, ...] = ("The function subtracts b instead of adding it.",),
    fixes: tuple[str, ...] = ("Replace the subtraction with an addition.",),
) -> Assignment:
    if tests is None:
        tests = (
            TestCase(id="t1", invocation="add(1, 2)", expected="3"),
            TestCase(id="t2", invocation="add(0, 0)", expected="0"),
            TestCase(id="t3", assertion="assert add(-1, 1) == 0"),
        )
    return Assignment(
        id=aid,
        problem_description="Write a function add(a, b) that returns the sum of a and b.",
        test_cases=tests,
        buggy_program=buggy,
        ground_truth_bugs=bugs,
        ground_truth_fixes=fixes,
    )


@pytest.fixture
def assignment() -> Assignment:
    return make_assignment()


@pytest.fixture
def benchmark_file(tmp_path: Path) -> Path:
    path = tmp_path / "benchmark.jsonl"
    save_benchmark([make_assignment(), make_assignment("p02")], path)
    return path


@pytest.fixture
def gateway(tmp_path: Path) -> Gateway:
    return Gateway(cache_dir=tmp_path / "cache")


@pytest.fixture
def mock_backend() -> BackendConfig:
    return BackendConfig(name="mock", base_url="mock://")
