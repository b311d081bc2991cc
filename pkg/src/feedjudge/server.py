"""HTTP API for the human annotation workflow, consumed by the browser UI.

Identification is an annotator id (header or explicit field); deployments are
expected to sit behind course infrastructure, so there is no further auth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import AnnotationStore, AssignmentPlan, agreement_report, resolve_gold
from .benchmark import Assignment
from .errors import ConfigError
from .generation import FeedbackRecord
from .records import write_jsonl
from .rubric import CRITERION_CODES, CRITERION_DESCRIPTIONS, CRITERION_NAMES, RubricVerdicts


@dataclass
class AnnotationService:
    assignments: dict[str, Assignment]
    feedback: dict[str, FeedbackRecord]
    plan: AssignmentPlan
    store: AnnotationStore
    gold_path: Path
    manifest_digest: str = ""


class AnnotationIn(BaseModel):
    annotator_id: str
    feedback_record_id: str
    verdicts: dict[str, str]
    notes: str | None = None


class ResolutionIn(BaseModel):
    feedback_record_id: str
    criterion: str
    verdict: str


class ResolutionsIn(BaseModel):
    resolutions: list[ResolutionIn]


def _check_header(annotator: str, header_value: str | None) -> None:
    if header_value is not None and header_value != annotator:
        raise HTTPException(status_code=403, detail="annotator id does not match X-Annotator-Id header")


def create_app(service: AnnotationService, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="feedjudge annotation service")

    @app.get("/api/plan")
    def get_plan(
        annotator: str = Query(...),
        x_annotator_id: str | None = Header(default=None),
    ) -> dict:
        _check_header(annotator, x_annotator_id)
        if annotator not in service.plan.exclusive_sets:
            raise HTTPException(status_code=404, detail=f"unknown annotator: {annotator}")
        latest = service.store.latest()
        items = []
        for item in service.plan.items_for(annotator):
            record = latest.get((annotator, item))
            entry: dict = {"feedback_id": item, "completed": record is not None}
            if record is not None:
                # lets the UI reload prior verdicts purely from the API
                entry["verdicts"] = record.verdicts.as_dict()
                entry["notes"] = record.notes
            items.append(entry)
        return {"annotator": annotator, "items": items}

    @app.get("/api/task/{feedback_id:path}")
    def get_task(feedback_id: str) -> dict:
        record = service.feedback.get(feedback_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown feedback item: {feedback_id}")
        assignment = service.assignments[record.assignment_id]
        return {
            "feedback_id": feedback_id,
            "problem_description": assignment.problem_description,
            "test_cases": [t.as_dict() for t in assignment.test_cases],
            "buggy_program": assignment.buggy_program,
            "ground_truth_bugs": list(assignment.ground_truth_bugs),
            "ground_truth_fixes": list(assignment.ground_truth_fixes),
            "feedback_text": record.raw_text,
            "criteria": [
                {"code": c, "name": CRITERION_NAMES[c], "description": CRITERION_DESCRIPTIONS[c]}
                for c in CRITERION_CODES
            ],
        }

    @app.post("/api/annotations")
    def post_annotation(
        body: AnnotationIn,
        x_annotator_id: str | None = Header(default=None),
    ) -> dict:
        _check_header(body.annotator_id, x_annotator_id)
        try:
            verdicts = RubricVerdicts(values=dict(body.verdicts))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            record = service.store.submit(
                body.annotator_id, body.feedback_record_id, verdicts, service.plan, notes=body.notes
            )
        except ConfigError as exc:
            status = 403 if "not assigned" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc)) from exc
        return record.as_dict()

    @app.get("/api/agreement")
    def get_agreement() -> dict:
        try:
            report, conflicts = agreement_report(service.store, service.plan)
        except ConfigError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {
            "report": {
                "p_o": report.p_o,
                "p_e": report.p_e,
                "kappa": report.kappa,
                "per_criterion_kappa": report.per_criterion_kappa,
                "n_items": report.n_items,
            },
            "conflicts": [c.as_dict() for c in conflicts],
        }

    @app.post("/api/resolutions")
    def post_resolutions(body: ResolutionsIn) -> dict:
        resolutions: dict[tuple[str, str], str] = {}
        for r in body.resolutions:
            if r.verdict not in ("yes", "no"):
                raise HTTPException(status_code=400, detail=f"verdict must be yes/no: {r.verdict!r}")
            resolutions[(r.feedback_record_id, r.criterion)] = r.verdict
        try:
            gold = resolve_gold(service.store, service.plan, resolutions)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        write_jsonl(
            service.gold_path,
            gold.as_records(),
            header={"store": "gold", "manifest_digest": service.manifest_digest},
        )
        provenance_counts: dict[str, int] = {}
        for value in gold.provenance.values():
            provenance_counts[value] = provenance_counts.get(value, 0) + 1
        return {"items": len(gold.labels), "provenance": provenance_counts}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
