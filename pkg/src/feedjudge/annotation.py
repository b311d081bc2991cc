"""Human gold-labeling workflow: task plans, verdict storage, agreement, gold.

Annotators share a calibration subset (everyone labels it, agreement is
measured there) and split the remainder into disjoint exclusive sets. The
store is append-only and revisioned; the latest revision per (annotator,
item) wins.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError
from .metrics import AgreementReport, agreement_between
from .records import RecordId, append_jsonl, read_jsonl
from .rubric import CRITERION_CODES, RubricVerdicts, Verdict


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    feedback_record_id: str
    verdicts: RubricVerdicts  # six criteria, never rc
    notes: str | None
    submitted_at: str
    revision: int

    @property
    def record_id(self) -> RecordId:
        assignment_id = self.feedback_record_id.split("/")[1]
        return RecordId(
            assignment_id=assignment_id,
            actor_id=self.annotator_id,
            kind="annotation",
            discriminator=str(self.revision),
        )

    def as_dict(self) -> dict:
        return {
            "record_id": self.record_id.as_dict(),
            "annotator_id": self.annotator_id,
            "feedback_record_id": self.feedback_record_id,
            "verdicts": self.verdicts.as_dict(),
            "notes": self.notes,
            "submitted_at": self.submitted_at,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AnnotationRecord":
        return cls(
            annotator_id=obj["annotator_id"],
            feedback_record_id=obj["feedback_record_id"],
            verdicts=RubricVerdicts(values=dict(obj["verdicts"])),
            notes=obj.get("notes"),
            submitted_at=obj["submitted_at"],
            revision=obj["revision"],
        )


@dataclass(frozen=True)
class AssignmentPlan:
    """Who labels what: a shared calibration set plus disjoint exclusive sets."""

    calibration_set: tuple[str, ...]
    exclusive_sets: dict[str, tuple[str, ...]]

    @property
    def annotators(self) -> tuple[str, ...]:
        return tuple(self.exclusive_sets)

    def all_items(self) -> set[str]:
        items = set(self.calibration_set)
        for ids in self.exclusive_sets.values():
            items.update(ids)
        return items

    def items_for(self, annotator: str) -> tuple[str, ...]:
        if annotator not in self.exclusive_sets:
            raise ConfigError(f"unknown annotator: {annotator!r}")
        return self.calibration_set + self.exclusive_sets[annotator]

    def as_dict(self) -> dict:
        return {
            "calibration_set": list(self.calibration_set),
            "exclusive_sets": {a: list(ids) for a, ids in self.exclusive_sets.items()},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AssignmentPlan":
        return cls(
            calibration_set=tuple(obj["calibration_set"]),
            exclusive_sets={a: tuple(ids) for a, ids in obj["exclusive_sets"].items()},
        )


def _split_sizes(n: int, weights: list[float]) -> list[int]:
    """Largest-remainder allocation of n items over the given weights."""
    total = sum(weights)
    raw = [n * w / total for w in weights]
    sizes = [int(r) for r in raw]
    leftover = n - sum(sizes)
    by_fraction = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in by_fraction[:leftover]:
        sizes[i] += 1
    return sizes


def make_plan(
    feedback_ids: list[str],
    annotators: list[str],
    calibration_size: int,
    seed: int,
    split_weights: list[float] | None = None,
) -> AssignmentPlan:
    """Deterministic under seed; calibration shared, remainder split by weights."""
    if not annotators:
        raise ConfigError("need at least one annotator")
    if len(set(annotators)) != len(annotators):
        raise ConfigError("annotator ids must be distinct")
    if len(set(feedback_ids)) != len(feedback_ids):
        raise ConfigError("feedback ids must be distinct")
    if not 0 <= calibration_size <= len(feedback_ids):
        raise ConfigError(
            f"calibration size {calibration_size} out of range for {len(feedback_ids)} items"
        )
    if split_weights is None:
        split_weights = [1.0] * len(annotators)
    if len(split_weights) != len(annotators):
        raise ConfigError("one split weight per annotator")
    shuffled = list(feedback_ids)
    random.Random(seed).shuffle(shuffled)
    calibration = tuple(sorted(shuffled[:calibration_size]))
    remainder = shuffled[calibration_size:]
    sizes = _split_sizes(len(remainder), split_weights)
    exclusive: dict[str, tuple[str, ...]] = {}
    start = 0
    for annotator, size in zip(annotators, sizes):
        exclusive[annotator] = tuple(sorted(remainder[start : start + size]))
        start += size
    return AssignmentPlan(calibration_set=calibration, exclusive_sets=exclusive)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class AnnotationStore:
    """Append-only revisioned verdict store backed by one JSONL file."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def load_all(self) -> list[AnnotationRecord]:
        if not self.path.exists():
            return []
        _, rows = read_jsonl(self.path)
        return [AnnotationRecord.from_dict(r) for r in rows]

    def latest(self) -> dict[tuple[str, str], AnnotationRecord]:
        """Latest revision per (annotator, feedback item)."""
        current: dict[tuple[str, str], AnnotationRecord] = {}
        for rec in self.load_all():
            key = (rec.annotator_id, rec.feedback_record_id)
            if key not in current or rec.revision > current[key].revision:
                current[key] = rec
        return current

    def submit(
        self,
        annotator_id: str,
        feedback_record_id: str,
        verdicts: RubricVerdicts,
        plan: AssignmentPlan,
        notes: str | None = None,
    ) -> AnnotationRecord:
        """Validate against the plan, assign the next revision, append."""
        if annotator_id not in plan.exclusive_sets:
            raise ConfigError(f"unknown annotator: {annotator_id!r}")
        if feedback_record_id not in plan.items_for(annotator_id):
            raise ConfigError(
                f"item {feedback_record_id!r} is not assigned to annotator {annotator_id!r}"
            )
        if verdicts.rc is not None:
            raise ConfigError("annotators never set rc; it comes from repair evaluation")
        with self._lock:
            key = (annotator_id, feedback_record_id)
            prior = self.latest().get(key)
            record = AnnotationRecord(
                annotator_id=annotator_id,
                feedback_record_id=feedback_record_id,
                verdicts=verdicts,
                notes=notes,
                submitted_at=_now(),
                revision=(prior.revision + 1) if prior else 1,
            )
            append_jsonl(self.path, record.as_dict())
        return record


@dataclass(frozen=True)
class Conflict:
    feedback_record_id: str
    criterion: str
    verdicts: dict[str, Verdict]  # annotator -> verdict

    def as_dict(self) -> dict:
        return {
            "feedback_record_id": self.feedback_record_id,
            "criterion": self.criterion,
            "verdicts": dict(self.verdicts),
        }


def _calibration_verdicts(
    store: AnnotationStore, plan: AssignmentPlan
) -> dict[str, dict[str, RubricVerdicts]]:
    """Per annotator, the latest calibration verdicts; errors list missing items."""
    latest = store.latest()
    per_annotator: dict[str, dict[str, RubricVerdicts]] = {}
    missing: list[str] = []
    for annotator in plan.annotators:
        verdicts: dict[str, RubricVerdicts] = {}
        for item in plan.calibration_set:
            rec = latest.get((annotator, item))
            if rec is None:
                missing.append(f"{annotator}:{item}")
            else:
                verdicts[item] = rec.verdicts
        per_annotator[annotator] = verdicts
    if missing:
        raise ConfigError("calibration items not yet annotated: " + ", ".join(sorted(missing)))
    return per_annotator


def conflict_list(store: AnnotationStore, plan: AssignmentPlan) -> list[Conflict]:
    per_annotator = _calibration_verdicts(store, plan)
    annotators = plan.annotators
    conflicts: list[Conflict] = []
    for item in plan.calibration_set:
        for code in CRITERION_CODES:
            values = {a: per_annotator[a][item][code] for a in annotators}
            if len(set(values.values())) > 1:
                conflicts.append(Conflict(feedback_record_id=item, criterion=code, verdicts=values))
    return conflicts


def agreement_report(
    store: AnnotationStore, plan: AssignmentPlan
) -> tuple[AgreementReport, list[Conflict]]:
    """Kappa over the calibration set plus the explicit disagreement list."""
    if len(plan.annotators) != 2:
        raise ConfigError("agreement is defined for exactly two annotators")
    per_annotator = _calibration_verdicts(store, plan)
    first, second = plan.annotators
    report = agreement_between(
        per_annotator[first], per_annotator[second], list(plan.calibration_set)
    )
    return report, conflict_list(store, plan)


@dataclass(frozen=True)
class GoldLabelSet:
    labels: dict[str, RubricVerdicts]
    provenance: dict[str, str]  # single_annotator | resolved_conflict

    def as_records(self) -> list[dict]:
        return [
            {
                "feedback_record_id": fid,
                "verdicts": self.labels[fid].as_dict(),
                "provenance": self.provenance[fid],
            }
            for fid in sorted(self.labels)
        ]


def resolve_gold(
    store: AnnotationStore,
    plan: AssignmentPlan,
    resolutions: dict[tuple[str, str], Verdict],
) -> GoldLabelSet:
    """Fold annotations plus conflict resolutions into one gold label per item.

    Resolutions must cover exactly the conflict list: unresolved conflicts and
    resolutions for non-conflicts are both errors.
    """
    conflicts = conflict_list(store, plan)
    conflict_keys = {(c.feedback_record_id, c.criterion) for c in conflicts}
    provided = set(resolutions)
    if conflict_keys - provided:
        raise ConfigError(f"unresolved conflicts: {sorted(conflict_keys - provided)}")
    if provided - conflict_keys:
        raise ConfigError(f"resolutions for non-conflicting pairs: {sorted(provided - conflict_keys)}")

    latest = store.latest()
    labels: dict[str, RubricVerdicts] = {}
    provenance: dict[str, str] = {}
    per_annotator = _calibration_verdicts(store, plan)
    first = plan.annotators[0]
    for item in plan.calibration_set:
        values: dict[str, Verdict] = {}
        resolved = False
        for code in CRITERION_CODES:
            if (item, code) in resolutions:
                values[code] = resolutions[(item, code)]
                resolved = True
            else:
                values[code] = per_annotator[first][item][code]
        labels[item] = RubricVerdicts(values=values)
        provenance[item] = "resolved_conflict" if resolved else "single_annotator"

    missing: list[str] = []
    for annotator, items in plan.exclusive_sets.items():
        for item in items:
            rec = latest.get((annotator, item))
            if rec is None:
                missing.append(f"{annotator}:{item}")
                continue
            labels[item] = rec.verdicts
            provenance[item] = "single_annotator"
    if missing:
        raise ConfigError("exclusive items not yet annotated: " + ", ".join(sorted(missing)))
    return GoldLabelSet(labels=labels, provenance=provenance)
