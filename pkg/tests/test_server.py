from __future__ import annotations

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from feedjudge.annotation import AnnotationStore, make_plan
from feedjudge.generation import FeedbackRecord
from feedjudge.records import RecordId, read_jsonl
from feedjudge.rubric import CRITERION_CODES, CRITERION_DESCRIPTIONS
from feedjudge.server import AnnotationService, create_app

from .conftest import make_assignment

Y, N = "yes", "no"


def _service(tmp_path: Path, n_items: int = 5, calibration: int = 5) -> AnnotationService:
    assignments = {f"p{i:02d}": make_assignment(f"p{i:02d}") for i in range(1, n_items + 1)}
    feedback = {}
    for aid in assignments:
        rid = RecordId(aid, "m-alpha", "feedback")
        feedback[rid.key()] = FeedbackRecord(
            record_id=rid,
            assignment_id=aid,
            model_id="m-alpha",
            prompt_digest="d",
            raw_text=f"Feedback for {aid}.",
            extracted_code_blocks=(),
            created_at="2026-01-01T00:00:00+00:00",
        )
    plan = make_plan(sorted(feedback), ["ann-1", "ann-2"], calibration, seed=11)
    return AnnotationService(
        assignments=assignments,
        feedback=feedback,
        plan=plan,
        store=AnnotationStore(tmp_path / "annotations.jsonl"),
        gold_path=tmp_path / "gold.jsonl",
        manifest_digest="test-digest",
    )


@pytest.fixture
def client(tmp_path: Path) -> TestClient:
    return TestClient(create_app(_service(tmp_path)))


def body_for(item: str, annotator: str = "ann-1", **overrides: str) -> dict:
    values = {c: Y for c in CRITERION_CODES}
    values.update(overrides)
    return {"annotator_id": annotator, "feedback_record_id": item, "verdicts": values}


def test_plan_endpoint_lists_items_with_completion(client: TestClient) -> None:
    resp = client.get("/api/plan", params={"annotator": "ann-1"})
    assert resp.status_code == 200
    items = resp.json()["items"]
    assert len(items) == 5
    assert all(item["completed"] is False for item in items)
    first = items[0]["feedback_id"]
    assert client.post("/api/annotations", json=body_for(first)).status_code == 200
    resp = client.get("/api/plan", params={"annotator": "ann-1"})
    done = {i["feedback_id"]: i["completed"] for i in resp.json()["items"]}
    assert done[first] is True


def test_plan_unknown_annotator_is_404(client: TestClient) -> None:
    assert client.get("/api/plan", params={"annotator": "nobody"}).status_code == 404


def test_task_endpoint_serves_everything_the_ui_needs(client: TestClient) -> None:
    item = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"][0]["feedback_id"]
    resp = client.get(f"/api/task/{item}")
    assert resp.status_code == 200
    task = resp.json()
    assert task["problem_description"].startswith("Write a function add")
    assert task["buggy_program"].startswith("def add")
    assert task["feedback_text"].startswith("Feedback for")
    assert task["ground_truth_bugs"]
    assert [c["code"] for c in task["criteria"]] == list(CRITERION_CODES)
    assert task["criteria"][0]["description"] == CRITERION_DESCRIPTIONS["EA"]


def test_task_unknown_item_is_404(client: TestClient) -> None:
    assert client.get("/api/task/feedback/p99/m-alpha/0").status_code == 404


def test_annotation_post_sets_revision_and_timestamp(client: TestClient) -> None:
    item = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"][0]["feedback_id"]
    first = client.post("/api/annotations", json=body_for(item)).json()
    assert first["revision"] == 1
    assert first["submitted_at"]
    second = client.post("/api/annotations", json=body_for(item, ES=N)).json()
    assert second["revision"] == 2


def test_annotation_post_rejects_incomplete_verdicts(client: TestClient) -> None:
    item = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"][0]["feedback_id"]
    body = body_for(item)
    del body["verdicts"]["FS"]
    resp = client.post("/api/annotations", json=body)
    assert resp.status_code == 400
    assert "FS" in resp.json()["detail"]


def test_annotation_post_enforces_plan(tmp_path: Path) -> None:
    service = _service(tmp_path, n_items=4, calibration=0)
    client = TestClient(create_app(service))
    foreign = service.plan.exclusive_sets["ann-2"][0]
    resp = client.post("/api/annotations", json=body_for(foreign, annotator="ann-1"))
    assert resp.status_code == 403


def test_header_mismatch_is_403(client: TestClient) -> None:
    item = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"][0]["feedback_id"]
    resp = client.post(
        "/api/annotations", json=body_for(item), headers={"X-Annotator-Id": "ann-2"}
    )
    assert resp.status_code == 403


def test_agreement_before_coverage_is_409(client: TestClient) -> None:
    resp = client.get("/api/agreement")
    assert resp.status_code == 409


def test_scripted_two_annotator_session_reaches_kappa_one(tmp_path: Path) -> None:
    service = _service(tmp_path)
    client = TestClient(create_app(service))
    for annotator in ("ann-1", "ann-2"):
        items = client.get("/api/plan", params={"annotator": annotator}).json()["items"]
        for entry in items:
            resp = client.post(
                "/api/annotations",
                json=body_for(entry["feedback_id"], annotator=annotator, ES=N),
                headers={"X-Annotator-Id": annotator},
            )
            assert resp.status_code == 200
    agreement = client.get("/api/agreement").json()
    assert agreement["report"]["kappa"] == 1.0
    assert agreement["conflicts"] == []
    resolved = client.post("/api/resolutions", json={"resolutions": []})
    assert resolved.status_code == 200
    assert resolved.json()["items"] == 5
    header, rows = read_jsonl(service.gold_path)
    assert header["manifest_digest"] == "test-digest"
    assert len(rows) == 5


def test_conflict_resolution_round_trip(tmp_path: Path) -> None:
    service = _service(tmp_path)
    client = TestClient(create_app(service))
    items = [e["feedback_id"] for e in client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"]]
    conflict_item = items[0]
    for annotator in ("ann-1", "ann-2"):
        for item in items:
            overrides = {}
            if annotator == "ann-2" and item == conflict_item:
                overrides = {"EA": N}
            client.post("/api/annotations", json=body_for(item, annotator=annotator, **overrides))
    conflicts = client.get("/api/agreement").json()["conflicts"]
    assert len(conflicts) == 1
    assert conflicts[0] == {
        "feedback_record_id": conflict_item,
        "criterion": "EA",
        "verdicts": {"ann-1": Y, "ann-2": N},
    }
    # a stale/superfluous resolution is rejected
    bad = client.post(
        "/api/resolutions",
        json={"resolutions": [{"feedback_record_id": items[1], "criterion": "ES", "verdict": N}]},
    )
    assert bad.status_code == 400
    good = client.post(
        "/api/resolutions",
        json={"resolutions": [{"feedback_record_id": conflict_item, "criterion": "EA", "verdict": N}]},
    )
    assert good.status_code == 200
    assert good.json()["provenance"] == {"resolved_conflict": 1, "single_annotator": 4}


def test_plan_returns_prior_verdicts_for_completed_items(client: TestClient) -> None:
    item = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"][0]["feedback_id"]
    client.post("/api/annotations", json=body_for(item, ES=N))
    entries = client.get("/api/plan", params={"annotator": "ann-1"}).json()["items"]
    completed = next(e for e in entries if e["feedback_id"] == item)
    assert completed["verdicts"]["ES"] == N
    pending = next(e for e in entries if e["feedback_id"] != item)
    assert "verdicts" not in pending


def test_built_ui_bundle_is_served(tmp_path: Path) -> None:
    dist = Path(__file__).parent.parent / "frontend" / "dist"
    if not (dist / "index.html").exists():
        pytest.skip("frontend not built (run npm run build in frontend/)")
    client = TestClient(create_app(_service(tmp_path), ui_dir=dist))
    index = client.get("/")
    assert index.status_code == 200
    assert '<div id="app">' in index.text
    bundle = client.get("/app.js")
    assert bundle.status_code == 200
    assert "ApiClient" in bundle.text


def test_static_ui_is_served_when_present(tmp_path: Path) -> None:
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>annotate</title>", encoding="utf-8")
    client = TestClient(create_app(_service(tmp_path), ui_dir=ui))
    resp = client.get("/")
    assert resp.status_code == 200
    assert "annotate" in resp.text
    assert client.get("/api/plan", params={"annotator": "ann-1"}).status_code == 200
