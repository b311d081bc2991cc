"""Pipeline commands over a run directory.

Each stage reads and writes plain files under --out/--run so intermediate
state stays inspectable and diffable. Exit codes: 0 success, 1 user/config
error, 2 infrastructure error.
"""

from __future__ import annotations

import json
import os
import re
import sys
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import click

from .annotation import AnnotationStore, AssignmentPlan, make_plan
from .benchmark import load_benchmark, validate_assignment
from .errors import ConfigError, FeedjudgeError, InfrastructureError
from .gateway import DEFAULT_MAX_TOKENS, BackendConfig, Gateway
from .generation import FeedbackRecord, run_generation
from .judging import GAG, SAG, JudgementRecord, run_judging
from .jury import ENSEMBLE_ID, JuryConfig, run_jury
from .manifest import RunManifest, ensure_manifest, file_digest, load_manifest
from .metrics import ScoreCard, judge_scorecard
from .repair import SandboxConfig, rc_column
from .reporting import (
    FeedbackTableRow,
    feedback_table_rows,
    render_feedback_table,
    render_judge_table,
)
from .records import check_unique_keys, read_jsonl, write_jsonl
from .rubric import RubricVerdicts
from .server import AnnotationService, create_app


@contextmanager
def run_lock(run_dir: Path):
    """One command at a time per run directory."""
    run_dir.mkdir(parents=True, exist_ok=True)
    lock = run_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"run directory is locked by another command: {lock}") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _parse_roster(value: str, what: str) -> list[str]:
    items = [item.strip() for item in value.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"empty {what} roster")
    if len(set(items)) != len(items):
        raise ConfigError(f"duplicate entries in {what} roster")
    return items


def _backend(url: str, name: str | None, auth_env: str, timeout: float, max_retries: int, parallelism: int) -> BackendConfig:
    if name is None:
        name = "mock" if url.startswith("mock:") else re.sub(r"^https?://", "", url).split("/")[0]
    return BackendConfig(
        name=name,
        base_url=url,
        auth_env_var=auth_env,
        timeout_s=timeout,
        max_retries=max_retries,
        parallelism=parallelism,
    )


def _safe_name(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", model_id)


def feedback_path(run_dir: Path) -> Path:
    return run_dir / "feedback.jsonl"


def judgement_path(run_dir: Path, judge: str, strategy: str) -> Path:
    return run_dir / "judgements" / f"{_safe_name(judge)}.{strategy.lower()}.jsonl"


def repairs_path(run_dir: Path) -> Path:
    return run_dir / "repairs.jsonl"


def scores_path(run_dir: Path) -> Path:
    return run_dir / "scores.json"


def load_feedback(run_dir: Path) -> list[FeedbackRecord]:
    path = feedback_path(run_dir)
    if not path.exists():
        raise ConfigError(f"no feedback store in {run_dir} (run generate first)")
    _, rows = read_jsonl(path)
    check_unique_keys(rows, "feedback")
    return [FeedbackRecord.from_dict(r) for r in rows]


def load_judgements(run_dir: Path) -> list[JudgementRecord]:
    directory = run_dir / "judgements"
    if not directory.is_dir():
        raise ConfigError(f"no judgements in {run_dir} (run judge first)")
    rows: list[dict] = []
    for path in sorted(directory.glob("*.jsonl")):
        _, file_rows = read_jsonl(path)
        rows.extend(file_rows)
    check_unique_keys(rows, "judgement")
    return [JudgementRecord.from_dict(r) for r in rows]


def load_gold(path: Path) -> dict[str, RubricVerdicts]:
    _, rows = read_jsonl(path)
    gold: dict[str, RubricVerdicts] = {}
    for row in rows:
        gold[row["feedback_record_id"]] = RubricVerdicts(values=dict(row["verdicts"]))
    if not gold:
        raise ConfigError(f"gold label file is empty: {path}")
    return gold


def load_repairs(run_dir: Path) -> dict[str, bool]:
    path = repairs_path(run_dir)
    if not path.exists():
        raise ConfigError(f"no repair results in {run_dir} (run repair-eval first)")
    _, rows = read_jsonl(path)
    return {row["feedback_record_id"]: bool(row["rc"]) for row in rows}


def _load_run_benchmark(manifest: RunManifest):
    path = Path(manifest.benchmark_path)
    if not path.exists():
        raise ConfigError(f"benchmark file moved or deleted: {path}")
    if file_digest(path) != manifest.benchmark_digest:
        raise ConfigError(f"benchmark file changed since the run started: {path}")
    return load_benchmark(path)


_backend_options = [
    click.option("--backend-url", default="mock://", show_default=True, help="chat-completions base URL or mock://[fixture.json]"),
    click.option("--backend-name", default=None, help="cache/semaphore identity of the backend"),
    click.option("--auth-env", default="", help="environment variable holding the bearer token"),
    click.option("--timeout", default=60.0, show_default=True, help="request timeout in seconds"),
    click.option("--max-retries", default=3, show_default=True),
    click.option("--parallelism", default=4, show_default=True),
    click.option("--max-tokens", default=DEFAULT_MAX_TOKENS, show_default=True),
]


def backend_options(fn):
    for option in reversed(_backend_options):
        fn = option(fn)
    return fn


@click.group()
def cli() -> None:
    """Generate, judge, and score programming feedback."""


@cli.command("generate")
@click.option("--benchmark", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--models", required=True, help="comma-separated feedback model ids")
@click.option("--out", "run_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", default=0, show_default=True)
@backend_options
def cmd_generate(
    benchmark: Path,
    models: str,
    run_dir: Path,
    seed: int,
    backend_url: str,
    backend_name: str | None,
    auth_env: str,
    timeout: float,
    max_retries: int,
    parallelism: int,
    max_tokens: int,
) -> None:
    """Generate feedback for every (model, assignment) pair."""
    roster = _parse_roster(models, "model")
    assignments = load_benchmark(benchmark)
    if not assignments:
        raise ConfigError(f"benchmark is empty: {benchmark}")
    manifest = ensure_manifest(
        run_dir,
        RunManifest(
            benchmark_path=str(benchmark),
            benchmark_digest=file_digest(benchmark),
            seed=seed,
            feedback_models=tuple(roster),
        ),
    )
    backend = _backend(backend_url, backend_name, auth_env, timeout, max_retries, parallelism)
    with run_lock(run_dir):
        gateway = Gateway(cache_dir=run_dir / "cache")
        records = run_generation(
            assignments, roster, gateway, backend, max_tokens=max_tokens, parallelism=parallelism
        )
        write_jsonl(
            feedback_path(run_dir),
            [r.as_dict() for r in records],
            header={"store": "feedback", "manifest_digest": manifest.digest},
        )
    failed = sum(1 for r in records if r.error is not None)
    click.echo(
        f"generated {len(records)} feedback records "
        f"({len(records) - failed} ok, {failed} failed) -> {feedback_path(run_dir)}"
    )


@cli.command("judge")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--judges", required=True, help="comma-separated judge model ids")
@click.option("--strategy", type=click.Choice(["sag", "gag", "both"]), default="both", show_default=True)
@backend_options
def cmd_judge(
    run_dir: Path,
    judges: str,
    strategy: str,
    backend_url: str,
    backend_name: str | None,
    auth_env: str,
    timeout: float,
    max_retries: int,
    parallelism: int,
    max_tokens: int,
) -> None:
    """Grade every stored feedback with each judge under SAG and/or GAG."""
    roster = _parse_roster(judges, "judge")
    strategies = [SAG, GAG] if strategy == "both" else [strategy.upper()]
    manifest = load_manifest(run_dir)
    assignments = _load_run_benchmark(manifest)
    feedback = load_feedback(run_dir)
    backend = _backend(backend_url, backend_name, auth_env, timeout, max_retries, parallelism)
    manifest = ensure_manifest(
        run_dir,
        RunManifest(
            benchmark_path=manifest.benchmark_path,
            benchmark_digest=manifest.benchmark_digest,
            seed=manifest.seed,
            judge_models=tuple(roster),
            strategies=tuple(strategies),
        ),
    )
    with run_lock(run_dir):
        gateway = Gateway(cache_dir=run_dir / "cache")
        for judge in roster:
            for strat in strategies:
                records = run_judging(
                    assignments,
                    feedback,
                    [judge],
                    [strat],
                    gateway,
                    backend,
                    max_tokens=max_tokens,
                    parallelism=parallelism,
                )
                write_jsonl(
                    judgement_path(run_dir, judge, strat),
                    [r.as_dict() for r in records],
                    header={"store": "judgement", "manifest_digest": manifest.digest},
                )
                click.echo(f"judged {len(records)} items: {judgement_path(run_dir, judge, strat)}")


@cli.command("jury")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--members", "--jury", "members", required=True, help="comma-separated member judge ids (odd count)")
@click.option("--strategy", type=click.Choice(["sag", "gag", "both"]), default="both", show_default=True)
def cmd_jury(run_dir: Path, members: str, strategy: str) -> None:
    """Majority-vote the members' stored judgements into ensemble records."""
    roster = _parse_roster(members, "jury member")
    strategies = [SAG, GAG] if strategy == "both" else [strategy.upper()]
    configs = {strat: JuryConfig(member_judge_ids=tuple(roster), strategy=strat) for strat in strategies}
    manifest = load_manifest(run_dir)
    judgements = load_judgements(run_dir)
    manifest = ensure_manifest(
        run_dir,
        RunManifest(
            benchmark_path=manifest.benchmark_path,
            benchmark_digest=manifest.benchmark_digest,
            seed=manifest.seed,
            jury_members=tuple(roster),
        ),
    )
    with run_lock(run_dir):
        for strat in strategies:
            ensemble = run_jury(configs[strat], judgements)
            write_jsonl(
                judgement_path(run_dir, ENSEMBLE_ID, strat),
                [r.as_dict() for r in ensemble],
                header={"store": "judgement", "manifest_digest": manifest.digest},
            )
            click.echo(f"ensemble of {len(roster)} members: {judgement_path(run_dir, ENSEMBLE_ID, strat)}")


@cli.command("repair-eval")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--timeout", "per_test_timeout", default=10.0, show_default=True, help="per-test timeout in seconds")
@click.option("--parallelism", default=4, show_default=True, help="concurrent sandbox processes")
@click.option("--runner", default=None, help="runner command template with a {file} placeholder")
@click.option("--allow-network", is_flag=True, default=False)
def cmd_repair_eval(
    run_dir: Path, per_test_timeout: float, parallelism: int, runner: str | None, allow_network: bool
) -> None:
    """Extract embedded repairs from feedback and run them against the unit tests."""
    manifest = load_manifest(run_dir)
    assignments = _load_run_benchmark(manifest)
    feedback = load_feedback(run_dir)
    kwargs = {"per_test_timeout_s": per_test_timeout, "network_disabled": not allow_network}
    if runner is not None:
        kwargs["runner_command_template"] = runner
    cfg = SandboxConfig(**kwargs)
    with run_lock(run_dir):
        proportions, results = rc_column(feedback, assignments, cfg, parallelism=parallelism)
        write_jsonl(
            repairs_path(run_dir),
            [r.as_dict() for r in results],
            header={"store": "repairs", "manifest_digest": manifest.digest},
        )
    for model in sorted(proportions):
        click.echo(f"rc[{model}] = {proportions[model]:.2f}")
    click.echo(f"repair results -> {repairs_path(run_dir)}")


def _card_to_dict(card: ScoreCard) -> dict:
    return asdict(card)


def _card_from_dict(obj: dict) -> ScoreCard:
    return ScoreCard(**obj)


@cli.command("score")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
def cmd_score(run_dir: Path, gold: Path) -> None:
    """Score feedback models and judges against gold annotations."""
    manifest = load_manifest(run_dir)
    feedback = [f for f in load_feedback(run_dir) if f.error is None]
    gold_labels = load_gold(gold)
    rc_by_feedback = load_repairs(run_dir)
    judgements = load_judgements(run_dir)

    gold_by_model: dict[str, list[RubricVerdicts]] = {}
    for record in feedback:
        key = record.record_id.key()
        if key not in gold_labels:
            raise ConfigError(f"gold labels missing for feedback {key}")
        verdicts = gold_labels[key]
        gold_by_model.setdefault(record.model_id, []).append(
            RubricVerdicts(values=verdicts.as_dict(), rc=rc_by_feedback.get(key, False))
        )
    model_order = [m for m in manifest.feedback_models if m in gold_by_model]
    model_order += sorted(set(gold_by_model) - set(model_order))
    rows = feedback_table_rows(model_order, gold_by_model)

    judges_seen = {j.judge_model_id for j in judgements}
    judge_order = [j for j in manifest.judge_models if j in judges_seen]
    judge_order += sorted(judges_seen - set(judge_order) - {ENSEMBLE_ID})
    if ENSEMBLE_ID in judges_seen:
        judge_order.append(ENSEMBLE_ID)
    cards: dict[str, list[ScoreCard]] = {}
    for strat in (SAG, GAG):
        strat_cards = []
        for judge in judge_order:
            scoped = [j for j in judgements if j.judge_model_id == judge and j.strategy == strat]
            if scoped:
                strat_cards.append(judge_scorecard(scoped, gold_labels, strat))
        if strat_cards:
            cards[strat] = strat_cards
    payload = {
        "manifest_digest": manifest.digest,
        "feedback_rows": [asdict(r) for r in rows],
        "judge_cards": {strat: [_card_to_dict(c) for c in cs] for strat, cs in cards.items()},
    }
    with run_lock(run_dir):
        scores_path(run_dir).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    click.echo(f"scores -> {scores_path(run_dir)}")


@cli.command("report")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
def cmd_report(run_dir: Path) -> None:
    """Render the feedback and judge tables from the stored scores."""
    path = scores_path(run_dir)
    if not path.exists():
        raise ConfigError(f"no scores in {run_dir} (run score first)")
    payload = json.loads(path.read_text(encoding="utf-8"))
    digest = payload["manifest_digest"]
    reports = run_dir / "reports"
    reports.mkdir(exist_ok=True)
    rows = [FeedbackTableRow(**r) for r in payload["feedback_rows"]]
    feedback_table = render_feedback_table(rows, manifest_digest=digest)
    (reports / "feedback_table.csv").write_text(feedback_table.csv_text, encoding="utf-8")
    (reports / "feedback_table.txt").write_text(feedback_table.txt_text, encoding="utf-8")
    click.echo(f"feedback table -> {reports / 'feedback_table.csv'}")
    cards = payload["judge_cards"]
    if set(cards) >= {SAG, GAG}:
        judge_table = render_judge_table(
            [_card_from_dict(c) for c in cards[SAG]],
            [_card_from_dict(c) for c in cards[GAG]],
            manifest_digest=digest,
        )
        (reports / "judge_table.csv").write_text(judge_table.csv_text, encoding="utf-8")
        (reports / "judge_table.txt").write_text(judge_table.txt_text, encoding="utf-8")
        click.echo(f"judge table -> {reports / 'judge_table.csv'}")
    else:
        click.echo("judge table needs both SAG and GAG scores; skipped")


@cli.command("validate")
@click.option("--benchmark", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--timeout", "per_test_timeout", default=10.0, show_default=True)
def cmd_validate(benchmark: Path, per_test_timeout: float) -> None:
    """Check that every buggy program really fails at least one test."""
    assignments = load_benchmark(benchmark)
    cfg = SandboxConfig(per_test_timeout_s=per_test_timeout)
    defects = 0
    for a in assignments:
        report = validate_assignment(a, cfg)
        status = "DEFECT: passes all tests" if report.defect else f"fails {len(report.fails)}/{len(report.per_test)}"
        defects += 1 if report.defect else 0
        click.echo(f"{a.id}: {status}")
    click.echo(f"{len(assignments)} assignments, {defects} defects")


def build_annotation_service(
    run_dir: Path,
    annotators: list[str],
    calibration_size: int,
    seed: int,
    split_weights: list[float] | None = None,
) -> AnnotationService:
    """Assemble the annotation backend for a run; the plan persists in the run dir."""
    manifest = load_manifest(run_dir)
    assignments = {a.id: a for a in _load_run_benchmark(manifest)}
    feedback = {f.record_id.key(): f for f in load_feedback(run_dir) if f.error is None}
    plan_file = run_dir / "plan.json"
    if plan_file.exists():
        plan = AssignmentPlan.from_dict(json.loads(plan_file.read_text(encoding="utf-8")))
        if set(plan.annotators) != set(annotators):
            raise ConfigError(
                f"existing plan covers annotators {sorted(plan.annotators)}, not {sorted(annotators)}"
            )
    else:
        plan = make_plan(sorted(feedback), annotators, calibration_size, seed, split_weights)
        plan_file.write_text(
            json.dumps(
                {"manifest_digest": manifest.digest, **plan.as_dict()}, indent=2, sort_keys=True
            )
            + "\n",
            encoding="utf-8",
        )
    return AnnotationService(
        assignments=assignments,
        feedback=feedback,
        plan=plan,
        store=AnnotationStore(run_dir / "annotations.jsonl"),
        gold_path=run_dir / "gold.jsonl",
        manifest_digest=manifest.digest,
    )


@cli.command("annotate-serve")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--annotators", required=True, help="comma-separated annotator ids")
@click.option("--calibration-size", default=79, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--split-weights", default=None, help="comma-separated weights for the exclusive split")
@click.option("--port", default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False, path_type=Path))
def cmd_annotate_serve(
    run_dir: Path,
    annotators: str,
    calibration_size: int,
    seed: int,
    split_weights: str | None,
    port: int,
    host: str,
    ui_dir: Path | None,
) -> None:
    """Serve the annotation API (and the UI bundle, when provided)."""
    import uvicorn

    roster = _parse_roster(annotators, "annotator")
    weights = [float(w) for w in split_weights.split(",")] if split_weights else None
    service = build_annotation_service(run_dir, roster, calibration_size, seed, weights)
    app = create_app(service, ui_dir=ui_dir)
    click.echo(f"serving annotation API on http://{host}:{port} (plan: {run_dir / 'plan.json'})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except InfrastructureError as exc:
        click.echo(f"infrastructure error: {exc}", err=True)
        sys.exit(2)
    except FeedjudgeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
