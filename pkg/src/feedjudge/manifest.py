"""Run manifests: what produced a run directory, pinned and digested.

The core (benchmark digest, seed, tool version, prompt template digests) is
immutable once written; later pipeline stages may only add roster entries.
Every store and report cites the core digest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .templates import all_template_digests

TOOL_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    benchmark_path: str
    benchmark_digest: str
    seed: int
    tool_version: str = TOOL_VERSION
    prompt_digests: dict[str, str] = field(default_factory=all_template_digests)
    feedback_models: tuple[str, ...] = ()
    judge_models: tuple[str, ...] = ()
    jury_members: tuple[str, ...] = ()
    strategies: tuple[str, ...] = ()

    def core(self) -> dict:
        return {
            "benchmark_digest": self.benchmark_digest,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "prompt_digests": dict(sorted(self.prompt_digests.items())),
        }

    @property
    def digest(self) -> str:
        payload = json.dumps(self.core(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @property
    def run_id(self) -> str:
        return self.digest[:12]

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "manifest_digest": self.digest,
            "benchmark_path": self.benchmark_path,
            **self.core(),
            "feedback_models": list(self.feedback_models),
            "judge_models": list(self.judge_models),
            "jury_members": list(self.jury_members),
            "strategies": list(self.strategies),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunManifest":
        return cls(
            benchmark_path=obj["benchmark_path"],
            benchmark_digest=obj["benchmark_digest"],
            seed=obj["seed"],
            tool_version=obj["tool_version"],
            prompt_digests=dict(obj["prompt_digests"]),
            feedback_models=tuple(obj.get("feedback_models", [])),
            judge_models=tuple(obj.get("judge_models", [])),
            jury_members=tuple(obj.get("jury_members", [])),
            strategies=tuple(obj.get("strategies", [])),
        )


def manifest_path(run_dir: Path) -> Path:
    return Path(run_dir) / MANIFEST_NAME


def load_manifest(run_dir: Path) -> RunManifest:
    path = manifest_path(run_dir)
    if not path.exists():
        raise ConfigError(f"no manifest in run directory: {path} (run generate first)")
    return RunManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))


def write_manifest(run_dir: Path, manifest: RunManifest) -> None:
    path = manifest_path(run_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _merge_roster(old: tuple[str, ...], new: tuple[str, ...]) -> tuple[str, ...]:
    merged = list(old)
    for item in new:
        if item not in merged:
            merged.append(item)
    return tuple(merged)


def ensure_manifest(run_dir: Path, fresh: RunManifest) -> RunManifest:
    """Create the manifest or extend its rosters; the core never changes."""
    path = manifest_path(run_dir)
    if not path.exists():
        write_manifest(run_dir, fresh)
        return fresh
    existing = load_manifest(run_dir)
    if existing.core() != fresh.core():
        raise ConfigError(
            "run directory was produced with a different benchmark/seed/tool: "
            f"{run_dir} (manifest digest {existing.digest[:12]} vs {fresh.digest[:12]})"
        )
    merged = replace(
        existing,
        feedback_models=_merge_roster(existing.feedback_models, fresh.feedback_models),
        judge_models=_merge_roster(existing.judge_models, fresh.judge_models),
        jury_members=_merge_roster(existing.jury_members, fresh.jury_members),
        strategies=_merge_roster(existing.strategies, fresh.strategies),
    )
    if merged != existing:
        write_manifest(run_dir, merged)
    return merged
