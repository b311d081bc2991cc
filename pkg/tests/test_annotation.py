from __future__ import annotations

import random
from pathlib import Path

import pytest

from feedjudge.annotation import (
    AnnotationStore,
    agreement_report,
    conflict_list,
    make_plan,
    resolve_gold,
)
from feedjudge.errors import ConfigError
from feedjudge.rubric import CRITERION_CODES, RubricVerdicts

from .oracles import kappa_oracle

Y, N = "yes", "no"


def verdicts(value: str = Y, **overrides: str) -> RubricVerdicts:
    values = {c: value for c in CRITERION_CODES}
    values.update(overrides)
    return RubricVerdicts(values=values)


def fids(n: int) -> list[str]:
    return [f"feedback/p{i:03d}/m-alpha/0" for i in range(n)]


def test_make_plan_is_deterministic_and_partitions() -> None:
    ids = fids(399)
    plan_a = make_plan(ids, ["ann-1", "ann-2"], 79, seed=7)
    plan_b = make_plan(ids, ["ann-1", "ann-2"], 79, seed=7)
    assert plan_a == plan_b
    assert len(plan_a.calibration_set) == 79
    exclusive = [set(v) for v in plan_a.exclusive_sets.values()]
    assert [len(s) for s in exclusive] == [160, 160]  # even split of the 320 remainder
    assert not exclusive[0] & exclusive[1]
    assert set(plan_a.calibration_set) | exclusive[0] | exclusive[1] == set(ids)


def test_make_plan_uneven_split_via_weights() -> None:
    plan = make_plan(fids(399), ["ann-1", "ann-2"], 79, seed=7, split_weights=[169, 151])
    sizes = sorted(len(v) for v in plan.exclusive_sets.values())
    assert sizes == [151, 169]


def test_make_plan_all_calibration_leaves_empty_exclusive_sets() -> None:
    plan = make_plan(fids(10), ["a", "b"], 10, seed=1)
    assert len(plan.calibration_set) == 10
    assert all(len(v) == 0 for v in plan.exclusive_sets.values())


def test_make_plan_guards() -> None:
    with pytest.raises(ConfigError):
        make_plan(fids(5), [], 2, seed=0)
    with pytest.raises(ConfigError):
        make_plan(fids(5), ["a", "a"], 2, seed=0)
    with pytest.raises(ConfigError):
        make_plan(fids(5), ["a"], 9, seed=0)


def test_submit_assigns_revisions_and_latest_wins(tmp_path: Path) -> None:
    plan = make_plan(fids(4), ["ann-1"], 2, seed=0)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    item = plan.items_for("ann-1")[0]
    first = store.submit("ann-1", item, verdicts(Y), plan)
    assert first.revision == 1
    second = store.submit("ann-1", item, verdicts(Y, ES=N), plan)
    assert second.revision == 2
    latest = store.latest()[("ann-1", item)]
    assert latest.verdicts["ES"] == N
    # append-only: both revisions remain readable
    assert len(store.load_all()) == 2


def test_submit_rejects_unassigned_item(tmp_path: Path) -> None:
    plan = make_plan(fids(4), ["ann-1", "ann-2"], 0, seed=0)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    foreign = plan.exclusive_sets["ann-2"][0]
    with pytest.raises(ConfigError, match="not assigned"):
        store.submit("ann-1", foreign, verdicts(), plan)


def test_submit_rejects_rc_bearing_verdicts(tmp_path: Path) -> None:
    plan = make_plan(fids(2), ["ann-1"], 1, seed=0)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    with_rc = RubricVerdicts(values={c: Y for c in CRITERION_CODES}, rc=True)
    with pytest.raises(ConfigError, match="rc"):
        store.submit("ann-1", plan.calibration_set[0], with_rc, plan)


def _fill_calibration(store, plan, first_labels, second_labels) -> None:
    a1, a2 = plan.annotators
    for item, v in zip(plan.calibration_set, first_labels):
        store.submit(a1, item, v, plan)
    for item, v in zip(plan.calibration_set, second_labels):
        store.submit(a2, item, v, plan)


def test_agreement_identical_annotators_is_one(tmp_path: Path) -> None:
    plan = make_plan(fids(6), ["ann-1", "ann-2"], 5, seed=1)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    rng = random.Random(8)
    labels = [
        RubricVerdicts(values={c: rng.choice((Y, N)) for c in CRITERION_CODES}) for _ in range(5)
    ]
    _fill_calibration(store, plan, labels, labels)
    report, conflicts = agreement_report(store, plan)
    assert report.kappa == 1.0
    assert conflicts == []


def test_agreement_paper_scale_engineered_kappa(tmp_path: Path) -> None:
    # 79 items x 6 criteria = 474 pairs built from fixed agreement counts:
    # 177 (y,y) + 177 (n,n) + 60 (y,n) + 60 (n,y) gives balanced marginals,
    # p_o = 354/474, p_e = 0.5, kappa ~ 0.4937
    pairs = [(Y, Y)] * 177 + [(N, N)] * 177 + [(Y, N)] * 60 + [(N, Y)] * 60
    random.Random(13).shuffle(pairs)
    plan = make_plan(fids(399), ["ann-1", "ann-2"], 79, seed=7)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    first_labels, second_labels = [], []
    for i in range(79):
        chunk = pairs[i * 6 : (i + 1) * 6]
        first_labels.append(RubricVerdicts(values=dict(zip(CRITERION_CODES, (p[0] for p in chunk)))))
        second_labels.append(RubricVerdicts(values=dict(zip(CRITERION_CODES, (p[1] for p in chunk)))))
    _fill_calibration(store, plan, first_labels, second_labels)
    report, conflicts = agreement_report(store, plan)
    assert report.kappa == pytest.approx(0.49, abs=0.01)
    assert report.n_items == 79
    assert len(conflicts) == 120
    flat_first = [p[0] for p in pairs]
    flat_second = [p[1] for p in pairs]
    assert report.kappa == pytest.approx(kappa_oracle(flat_first, flat_second), abs=1e-9)


def test_agreement_requires_complete_calibration_coverage(tmp_path: Path) -> None:
    plan = make_plan(fids(4), ["ann-1", "ann-2"], 3, seed=2)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    store.submit("ann-1", plan.calibration_set[0], verdicts(), plan)
    with pytest.raises(ConfigError, match=plan.calibration_set[1]):
        agreement_report(store, plan)


def test_resolve_gold_without_conflicts_is_union(tmp_path: Path) -> None:
    plan = make_plan(fids(4), ["ann-1", "ann-2"], 2, seed=3)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    _fill_calibration(store, plan, [verdicts(), verdicts()], [verdicts(), verdicts()])
    for annotator, items in plan.exclusive_sets.items():
        for item in items:
            store.submit(annotator, item, verdicts(Y, FC=N), plan)
    gold = resolve_gold(store, plan, {})
    assert set(gold.labels) == plan.all_items()
    assert all(p == "single_annotator" for p in gold.provenance.values())
    exclusive_item = plan.exclusive_sets["ann-1"][0]
    assert gold.labels[exclusive_item]["FC"] == N


def test_resolve_gold_applies_resolutions_with_provenance(tmp_path: Path) -> None:
    plan = make_plan(fids(2), ["ann-1", "ann-2"], 2, seed=4)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    item = plan.calibration_set[0]
    other = plan.calibration_set[1]
    _fill_calibration(store, plan, [verdicts(), verdicts()], [verdicts(Y, EA=N), verdicts()])
    conflicts = conflict_list(store, plan)
    assert [c.criterion for c in conflicts] == ["EA"]
    gold = resolve_gold(store, plan, {(item, "EA"): N})
    assert gold.labels[item]["EA"] == N
    assert gold.provenance[item] == "resolved_conflict"
    assert gold.provenance[other] == "single_annotator"


def test_resolve_gold_rejects_superfluous_and_missing_resolutions(tmp_path: Path) -> None:
    plan = make_plan(fids(2), ["ann-1", "ann-2"], 2, seed=5)
    store = AnnotationStore(tmp_path / "annotations.jsonl")
    item = plan.calibration_set[0]
    _fill_calibration(store, plan, [verdicts(), verdicts()], [verdicts(Y, EA=N), verdicts()])
    with pytest.raises(ConfigError, match="unresolved"):
        resolve_gold(store, plan, {})
    with pytest.raises(ConfigError, match="non-conflicting"):
        resolve_gold(store, plan, {(item, "EA"): N, (item, "ES"): N})
