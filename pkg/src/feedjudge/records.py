"""Line-delimited record stores and the composite record identifier.

Every derived artifact (feedback, judgements, annotations, repairs) lives in
a UTF-8 JSONL file: an optional header line carrying the run-manifest digest,
then one JSON object per line. Appends write a single line in one syscall so
concurrent writers never interleave partial records.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

HEADER_KIND = "header"


@dataclass(frozen=True)
class RecordId:
    """Stable composite key addressing one derived record."""

    assignment_id: str
    actor_id: str
    kind: str  # feedback | judgement | annotation
    discriminator: str = "0"  # strategy or replicate index

    def key(self) -> str:
        return "/".join((self.kind, self.assignment_id, self.actor_id, self.discriminator))

    def as_dict(self) -> dict:
        return {
            "assignment_id": self.assignment_id,
            "actor_id": self.actor_id,
            "kind": self.kind,
            "discriminator": self.discriminator,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RecordId":
        return cls(
            assignment_id=obj["assignment_id"],
            actor_id=obj["actor_id"],
            kind=obj["kind"],
            discriminator=obj.get("discriminator", "0"),
        )


def dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def read_jsonl(path: Path) -> tuple[dict | None, list[dict]]:
    """Return (header, records); header is None when the file has no header line."""
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    header: dict | None = None
    records: list[dict] = []
    with path.open(encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: line {index + 1} is not valid JSON: {exc}") from exc
            if index == 0 and isinstance(obj, dict) and obj.get("kind") == HEADER_KIND:
                header = obj
            else:
                records.append(obj)
    return header, records


def write_jsonl(path: Path, records: list[dict], header: dict | None = None) -> None:
    """Rewrite the whole store atomically (temp file + rename)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(dump_line({"kind": HEADER_KIND, **header}) + "\n")
        for rec in records:
            fh.write(dump_line(rec) + "\n")
    os.replace(tmp, path)


def append_jsonl(path: Path, record: dict) -> None:
    """Append one record in a single write call."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(dump_line(record) + "\n")


def check_unique_keys(records: list[dict], describe: str) -> None:
    """Reject stores where two records share a RecordId composite key."""
    seen: set[str] = set()
    for rec in records:
        rid = RecordId.from_dict(rec["record_id"])
        key = rid.key()
        if key in seen:
            raise ConfigError(f"duplicate {describe} record id: {key}")
        seen.add(key)
