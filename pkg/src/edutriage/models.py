"""Core record types flowing through the pipeline, plus their JSON wire forms.

One JSON object per line in the corpus files; field names here are the
on-disk contract (see README "File formats"). Serialization is canonical:
sorted keys, compact separators, UTF-8, LF line endings — so identical
records always produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any

# Labels the annotation engine can emit. `unparseable` is engine-generated
# for replies that never normalized to a category; it is not part of the
# model's answer vocabulary.
class MaliceLabel(str, Enum):
    BENIGN = "benign"
    MALICIOUS = "malicious"
    GRAY_AREA = "gray_area"
    UNPARSEABLE = "unparseable"


VERDICT_VALUES = ("confirmed_malicious", "rejected", "unsure")


def utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def format_ts(ts: datetime) -> str:
    """UTC ISO-8601 with Z suffix, second precision."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(raw: str) -> datetime:
    # datetime.fromisoformat rejects the Z suffix before 3.11
    return datetime.fromisoformat(raw.replace("Z", "+00:00")).astimezone(timezone.utc)


def normalize_text(text: str | bytes) -> str:
    """Canonical text form used everywhere on ingest.

    Invalid UTF-8 becomes the replacement character; CRLF/CR become LF.
    Keeps hashing and idempotent re-writes byte-stable.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return text.replace("\r\n", "\n").replace("\r", "\n")


def dump_json_line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


@dataclass
class RepoRecord:
    """One repository's metadata snapshot — the unit the pipeline moves."""

    repo_id: str
    full_name: str
    title: str
    description: str
    readme: str
    created_at: datetime
    is_fork: bool
    fetched_at: datetime
    stars: int = 0
    forks: int = 0
    watchers: int = 0
    truncated: bool = False  # readme hit the byte cap at fetch time
    stale: bool = False      # repo vanished before the readme fetch

    def __post_init__(self) -> None:
        if not self.repo_id:
            raise ValueError("repo_id must be non-empty")
        if self.created_at > self.fetched_at:
            raise ValueError(f"{self.repo_id}: created_at after fetched_at")
        for name in ("stars", "forks", "watchers"):
            if getattr(self, name) < 0:
                raise ValueError(f"{self.repo_id}: {name} negative")

    def to_json(self) -> dict[str, Any]:
        return {
            "repo_id": self.repo_id,
            "full_name": self.full_name,
            "title": self.title,
            "description": self.description,
            "readme": self.readme,
            "created_at": format_ts(self.created_at),
            "is_fork": self.is_fork,
            "fetched_at": format_ts(self.fetched_at),
            "stars": self.stars,
            "forks": self.forks,
            "watchers": self.watchers,
            "truncated": self.truncated,
            "stale": self.stale,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "RepoRecord":
        return cls(
            repo_id=obj["repo_id"],
            full_name=obj["full_name"],
            title=obj["title"],
            description=obj["description"],
            readme=obj["readme"],
            created_at=parse_ts(obj["created_at"]),
            is_fork=obj["is_fork"],
            fetched_at=parse_ts(obj["fetched_at"]),
            stars=obj["stars"],
            forks=obj["forks"],
            watchers=obj["watchers"],
            truncated=obj["truncated"],
            stale=obj["stale"],
        )

    def has_description(self) -> bool:
        return bool(self.description.strip())

    def has_readme(self) -> bool:
        return bool(self.readme.strip())


@dataclass
class AnnotationRun:
    """One LLM query's normalized label, with provenance."""

    repo_id: str
    round: int
    raw_response: str
    label: MaliceLabel
    model_id: str
    queried_at: datetime

    def __post_init__(self) -> None:
        if self.round < 1:
            raise ValueError("round must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return {
            "repo_id": self.repo_id,
            "round": self.round,
            "raw_response": self.raw_response,
            "label": self.label.value,
            "model_id": self.model_id,
            "queried_at": format_ts(self.queried_at),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "AnnotationRun":
        return cls(
            repo_id=obj["repo_id"],
            round=obj["round"],
            raw_response=obj["raw_response"],
            label=MaliceLabel(obj["label"]),
            model_id=obj["model_id"],
            queried_at=parse_ts(obj["queried_at"]),
        )


@dataclass
class ConsensusVerdict:
    """Aggregate of the k runs for one repo.

    ``unanimous_malicious`` is the flag that advances a repo to the family
    stage: true iff every run's label is malicious.
    """

    repo_id: str
    runs: list[AnnotationRun] = field(default_factory=list)
    unanimous_malicious: bool = False
    agreement: bool = False


@dataclass
class FamilyLabel:
    """One malware-family assignment, always inside the taxonomy or the fallback."""

    repo_id: str
    family: str
    raw_response: str

    def to_json(self) -> dict[str, Any]:
        return {"repo_id": self.repo_id, "family": self.family, "raw_response": self.raw_response}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "FamilyLabel":
        return cls(repo_id=obj["repo_id"], family=obj["family"], raw_response=obj["raw_response"])


@dataclass
class ValidationVerdict:
    """A human analyst's decision on one sampled flagged repo."""

    repo_id: str
    analyst: str
    verdict: str
    noted_at: datetime

    def __post_init__(self) -> None:
        if self.verdict not in VERDICT_VALUES:
            raise ValueError(f"verdict must be one of {VERDICT_VALUES}, got {self.verdict!r}")
        if not self.analyst:
            raise ValueError("analyst must be non-empty")

    def to_json(self) -> dict[str, Any]:
        return {
            "repo_id": self.repo_id,
            "analyst": self.analyst,
            "verdict": self.verdict,
            "noted_at": format_ts(self.noted_at),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ValidationVerdict":
        return cls(
            repo_id=obj["repo_id"],
            analyst=obj["analyst"],
            verdict=obj["verdict"],
            noted_at=parse_ts(obj["noted_at"]),
        )
