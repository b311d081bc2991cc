"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Everything runs against the deterministic mock backend except the optional
live smoke test, which needs real credentials in the environment.
"""

from __future__ import annotations

import functools
import itertools
import json
import os
import random
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from feedjudge.cli import cli, load_feedback
from feedjudge.gateway import BackendConfig, Gateway
from feedjudge.generation import generate_feedback
from feedjudge.judging import SAG, judge_feedback, parse_verdicts
from feedjudge.jury import majority_vote
from feedjudge.metrics import cohen_kappa, f_beta, judge_scorecard
from feedjudge.repair import SandboxConfig, evaluate_repair, run_single_test
from feedjudge.reporting import round2
from feedjudge.rubric import CRITERION_CODES, ParseFailure, RubricVerdicts, render_verdicts

from .conftest import FIXTURES, GOLDEN, make_assignment
from .oracles import fbeta_weighted_oracle, kappa_oracle, majority_oracle
from .test_judging import PARSER_CORPUS
from .test_metrics import random_labels

Y, N = "yes", "no"


def criterion(name: str):
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")
            return result

        return wrapper

    return decorator


@criterion("metrics oracle equivalence (1000 vectors, <5s, 1e-9)")
def test_metrics_match_brute_force_oracles() -> None:
    rng = random.Random(20_26)
    start = time.monotonic()
    for _ in range(1000):
        n = rng.randint(1, 50)
        pred, truth = random_labels(rng, n), random_labels(rng, n)
        assert abs(f_beta(pred, truth) - fbeta_weighted_oracle(pred, truth)) < 1e-9
        assert abs(cohen_kappa(pred, truth) - kappa_oracle(pred, truth)) < 1e-9
    assert time.monotonic() - start < 5.0


@criterion("kappa anchors (1.0 exact, 0.5 exact, |k|<0.05 on 10k)")
def test_kappa_anchors() -> None:
    rng = random.Random(8)
    identical = [rng.choice((Y, N)) for _ in range(100)]
    assert len(set(identical)) == 2  # non-constant
    assert cohen_kappa(identical, identical) == 1.0
    assert cohen_kappa([Y, Y, N, N], [Y, N, N, N]) == 0.5
    a = random_labels(rng, 10_000)
    b = random_labels(rng, 10_000)
    assert abs(cohen_kappa(a, b)) < 0.05


def _member(vote: str | None) -> RubricVerdicts | ParseFailure:
    if vote is None:
        return ParseFailure(
            missing=frozenset({"EA"}), partial={c: Y for c in CRITERION_CODES if c != "EA"}
        )
    return RubricVerdicts(values={c: (vote if c == "EA" else Y) for c in CRITERION_CODES})


@criterion("jury equivalence (2^3 votes, abstentions, tie->no)")
def test_jury_matches_exhaustive_enumeration() -> None:
    example = majority_vote([_member(Y), _member(Y), _member(N)])
    assert isinstance(example, RubricVerdicts) and example["EA"] == Y
    for votes in itertools.product((Y, N), repeat=3):
        result = majority_vote([_member(v) for v in votes])
        assert isinstance(result, RubricVerdicts)
        assert result["EA"] == majority_oracle(votes)
    for votes in itertools.product((Y, N, None), repeat=3):
        result = majority_vote([_member(v) for v in votes])
        expected = majority_oracle(votes)
        if expected is None:
            assert isinstance(result, ParseFailure) and "EA" in result.missing
        else:
            assert isinstance(result, RubricVerdicts) and result["EA"] == expected


@criterion("parser corpus (>=20 fixtures) and 1000-verdict round-trip")
def test_parser_corpus_and_round_trip() -> None:
    assert len(PARSER_CORPUS) >= 20
    for text, expected in PARSER_CORPUS:
        assert parse_verdicts(text) == expected
    rng = random.Random(14)
    for _ in range(1000):
        verdicts = RubricVerdicts(values={c: rng.choice((Y, N)) for c in CRITERION_CODES})
        assert parse_verdicts(render_verdicts(verdicts)) == verdicts


def _gemma_style_fixture() -> list[RubricVerdicts]:
    """57 annotations with EA yes on 18, ES yes on 1, EC yes on 38, one all-three item."""
    items = []
    for i in range(57):
        values = {
            "EA": Y if i < 18 else N,
            "ES": Y if i == 0 else N,
            "EC": Y if i < 38 else N,
            "FA": N,
            "FS": N,
            "FC": N,
        }
        items.append(RubricVerdicts(values=values, rc=False))
    return items


@criterion("grouped columns (singleton, monotone, 0.02 marginal fixture)")
def test_grouped_columns() -> None:
    from feedjudge.metrics import grouped_proportion

    rng = random.Random(21)
    items = [
        RubricVerdicts(values={c: rng.choice((Y, N)) for c in CRITERION_CODES}, rc=rng.random() < 0.5)
        for _ in range(80)
    ]
    assert grouped_proportion(items, ["EA"]) == sum(1 for v in items if v["EA"] == Y) / len(items)
    for group in (["EA", "ES"], ["EA", "ES", "EC"], ["FA", "FS", "FC", "RC"]):
        assert grouped_proportion(items, group) <= min(
            grouped_proportion(items, [c]) for c in group
        )
    gemma = _gemma_style_fixture()
    assert str(round2(grouped_proportion(gemma, ["EA", "ES", "EC"]))) == "0.02"
    assert str(round2(grouped_proportion(gemma, ["EA"]))) == "0.32"
    assert str(round2(grouped_proportion(gemma, ["ES"]))) == "0.02"
    assert str(round2(grouped_proportion(gemma, ["EC"]))) == "0.67"


@criterion("repair sandbox (rc truth table, timeout grace, hermetic)")
def test_repair_sandbox() -> None:
    a = make_assignment()
    cfg = SandboxConfig(per_test_timeout_s=1.0)
    correct = evaluate_repair("def add(a, b):\n    return a + b", a, cfg)
    assert correct.rc is True
    buggy = evaluate_repair(a.buggy_program, a, cfg)
    assert buggy.rc is False
    start = time.monotonic()
    looping = run_single_test("def add(a, b):\n    while True:\n        pass", a.test_cases[0], cfg)
    elapsed = time.monotonic() - start
    assert looping.outcome == "timeout"
    assert elapsed <= cfg.per_test_timeout_s + 2.0
    again = evaluate_repair("def add(a, b):\n    return a + b", a, cfg)
    assert again.per_test == correct.per_test


@criterion("end-to-end golden run (byte-identical tables, <30s, offline)")
def test_end_to_end_golden_run(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    import feedjudge.gateway as gateway_module

    def no_network(*args, **kwargs):
        raise AssertionError("the golden run must not touch the network")

    monkeypatch.setattr(gateway_module.requests, "post", no_network)
    run_dir = tmp_path / "run"
    runner = CliRunner()
    start = time.monotonic()
    steps = (
        ["generate", "--benchmark", str(FIXTURES / "benchmark3.jsonl"),
         "--models", "m-alpha,m-beta", "--out", str(run_dir)],
        ["judge", "--run", str(run_dir),
         "--judges", "j-one,j-two,juror-a,juror-b,juror-c", "--strategy", "both"],
        ["jury", "--run", str(run_dir), "--members", "juror-a,juror-b,juror-c", "--strategy", "both"],
        ["repair-eval", "--run", str(run_dir)],
        ["score", "--run", str(run_dir), "--gold", str(FIXTURES / "e2e_gold.jsonl")],
        ["report", "--run", str(run_dir)],
    )
    for args in steps:
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, (args, result.output, result.exception)
    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    for name in ("feedback_table.csv", "feedback_table.txt", "judge_table.csv", "judge_table.txt"):
        produced = (run_dir / "reports" / name).read_bytes()
        expected = (GOLDEN / "e2e" / name).read_bytes()
        assert produced == expected, f"{name} differs from the committed golden file"
    judge_txt = (run_dir / "reports" / "judge_table.txt").read_text()
    assert "(+" in judge_txt and "(-" in judge_txt  # SAG value with signed GAG delta


@criterion("exclusion accounting (29 of 399 excluded, 370 scored)")
def test_exclusion_accounting_mirrors_judge_subset() -> None:
    rng = random.Random(370)

    class Judgement:
        def __init__(self, fid: str, verdicts) -> None:
            self.feedback_record_id = fid
            self.verdicts = verdicts
            self.judge_model_id = "judge-under-test"
            self.strategy = SAG
            self.self_judgement = False
            self.error = None

    gold: dict[str, RubricVerdicts] = {}
    judgements = []
    for i in range(399):
        fid = f"feedback/p{i % 57:02d}/m{i // 57}/0"
        gold[fid] = RubricVerdicts(values={c: rng.choice((Y, N)) for c in CRITERION_CODES})
        judgements.append(
            Judgement(fid, RubricVerdicts(values={c: rng.choice((Y, N)) for c in CRITERION_CODES}))
        )
    for index in rng.sample(range(399), 29):
        judgements[index] = Judgement(
            judgements[index].feedback_record_id, ParseFailure(missing=frozenset(CRITERION_CODES))
        )
    card = judge_scorecard(judgements, gold, SAG)
    assert card.excluded_count == 29
    assert card.included_count == 370


LIVE_URL = os.environ.get("FEEDJUDGE_LIVE_BASE_URL")


@pytest.mark.skipif(not LIVE_URL, reason="set FEEDJUDGE_LIVE_BASE_URL (and credentials) to run")
@criterion("live smoke (generation + SAG judging on 3 assignments)")
def test_live_smoke(tmp_path: Path) -> None:
    model = os.environ.get("FEEDJUDGE_LIVE_MODEL", "gpt-4o-mini")
    backend = BackendConfig(
        name="live",
        base_url=LIVE_URL,
        auth_env_var=os.environ.get("FEEDJUDGE_LIVE_AUTH_ENV", "OPENAI_API_KEY"),
        timeout_s=120.0,
    )
    gateway = Gateway(cache_dir=tmp_path / "cache")
    from feedjudge.benchmark import load_benchmark

    assignments = load_benchmark(FIXTURES / "benchmark3.jsonl")[:3]
    records = [generate_feedback(a, gateway, backend, model) for a in assignments]
    assert all(r.error is None for r in records)
    judgements = [
        judge_feedback(gateway, backend, model, SAG, a, f)
        for a, f in zip(assignments, records)
    ]
    parsed = sum(1 for j in judgements if isinstance(j.verdicts, RubricVerdicts))
    assert parsed >= 2
    rerun = [generate_feedback(a, gateway, backend, model) for a in assignments]
    assert [r.raw_text for r in rerun] == [r.raw_text for r in records]  # served from cache


@criterion("[secondary backend] annotation round-trip via scripted HTTP session")
def test_annotation_round_trip_session(tmp_path: Path) -> None:
    from fastapi.testclient import TestClient

    from feedjudge.annotation import AnnotationStore, make_plan
    from feedjudge.generation import FeedbackRecord
    from feedjudge.records import RecordId
    from feedjudge.server import AnnotationService, create_app

    assignments = {f"p{i:02d}": make_assignment(f"p{i:02d}") for i in range(1, 6)}
    feedback = {}
    for aid in assignments:
        rid = RecordId(aid, "m-alpha", "feedback")
        feedback[rid.key()] = FeedbackRecord(
            record_id=rid, assignment_id=aid, model_id="m-alpha", prompt_digest="d",
            raw_text=f"Feedback for {aid}.", extracted_code_blocks=(),
            created_at="2026-01-01T00:00:00+00:00",
        )
    plan = make_plan(sorted(feedback), ["ann-1", "ann-2"], 5, seed=3)
    service = AnnotationService(
        assignments=assignments, feedback=feedback, plan=plan,
        store=AnnotationStore(tmp_path / "annotations.jsonl"),
        gold_path=tmp_path / "gold.jsonl",
    )
    client = TestClient(create_app(service))
    items = sorted(feedback)
    conflict_item = items[2]
    labels: dict[str, dict[str, dict[str, str]]] = {}
    for annotator in ("ann-1", "ann-2"):
        labels[annotator] = {}
        for item in items:
            values = {c: Y for c in CRITERION_CODES}
            if annotator == "ann-2" and item == conflict_item:
                values["FS"] = N  # the engineered disagreement
            labels[annotator][item] = values
            resp = client.post(
                "/api/annotations",
                json={"annotator_id": annotator, "feedback_record_id": item, "verdicts": values},
                headers={"X-Annotator-Id": annotator},
            )
            assert resp.status_code == 200
    agreement = client.get("/api/agreement").json()
    flat_a = [labels["ann-1"][i][c] for i in items for c in CRITERION_CODES]
    flat_b = [labels["ann-2"][i][c] for i in items for c in CRITERION_CODES]
    assert agreement["report"]["kappa"] == pytest.approx(kappa_oracle(flat_a, flat_b), abs=1e-12)
    assert len(agreement["conflicts"]) == 1
    assert agreement["conflicts"][0]["criterion"] == "FS"
    resolved = client.post(
        "/api/resolutions",
        json={"resolutions": [
            {"feedback_record_id": conflict_item, "criterion": "FS", "verdict": N}
        ]},
    )
    assert resolved.status_code == 200
    assert resolved.json()["items"] == 5
    gold_rows = [json.loads(line) for line in (tmp_path / "gold.jsonl").read_text().splitlines()[1:]]
    assert len(gold_rows) == 5
    by_id = {r["feedback_record_id"]: r for r in gold_rows}
    assert by_id[conflict_item]["verdicts"]["FS"] == N
    assert by_id[conflict_item]["provenance"] == "resolved_conflict"
