"""Append-friendly corpus persistence: one JSONL file per stage.

Files under the corpus directory:

    repos.jsonl        one RepoRecord per line
    annotations.jsonl  one AnnotationRun per line
    families.jsonl     one FamilyLabel per line
    verdicts.jsonl     one ValidationVerdict per line
    sample.json        the active review queue
    manifest.json      stage counts

Writes are read-modify-write under an advisory lock per stage file, flushed
atomically via write-then-rename, with lines kept in canonical order
(repo_id, then round/analyst). That makes every file's byte content a pure
function of its record set — the property the end-to-end determinism and
resume guarantees lean on.
"""

from __future__ import annotations

import fcntl
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator

from .errors import LockTimeoutError, StorageError
from .models import (
    AnnotationRun,
    FamilyLabel,
    RepoRecord,
    ValidationVerdict,
    dump_json_line,
    normalize_text,
)

STAGES = ("collected", "complete", "annotated", "flagged", "classified", "sampled")


@dataclass
class CorpusManifest:
    corpus_dir: str
    counts: dict[str, int]


def filter_complete(records: list[RepoRecord]) -> list[RepoRecord]:
    """Records with a non-empty description AND non-empty (post-trim) readme,
    ordered by repo_id."""
    kept = [r for r in records if r.has_description() and r.has_readme()]
    return sorted(kept, key=lambda r: r.repo_id)


class CorpusStore:
    """Single-writer, multi-reader store for one corpus directory."""

    def __init__(self, corpus_dir: str | Path, *, k: int = 2, lock_timeout: float = 5.0):
        self.corpus_dir = Path(corpus_dir)
        self.corpus_dir.mkdir(parents=True, exist_ok=True)
        self.k = k
        self.lock_timeout = lock_timeout
        self.repos_path = self.corpus_dir / "repos.jsonl"
        self.annotations_path = self.corpus_dir / "annotations.jsonl"
        self.families_path = self.corpus_dir / "families.jsonl"
        self.verdicts_path = self.corpus_dir / "verdicts.jsonl"
        self.sample_path = self.corpus_dir / "sample.json"
        self.manifest_path = self.corpus_dir / "manifest.json"

    # -- low-level file handling --

    @contextmanager
    def _locked(self, path: Path) -> Iterator[None]:
        lock_dir = self.corpus_dir / ".locks"
        lock_dir.mkdir(exist_ok=True)
        lock_path = lock_dir / (path.name + ".lock")
        deadline = time.monotonic() + self.lock_timeout
        fd = os.open(lock_path, os.O_CREAT | os.O_RDWR)
        try:
            while True:
                try:
                    fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
                    break
                except OSError:
                    if time.monotonic() >= deadline:
                        raise LockTimeoutError(f"could not lock {path.name} within {self.lock_timeout}s")
                    time.sleep(0.02)
            yield
        finally:
            try:
                fcntl.flock(fd, fcntl.LOCK_UN)
            finally:
                os.close(fd)

    def _read_lines(self, path: Path) -> list[dict[str, Any]]:
        if not path.exists():
            return []
        rows = []
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StorageError(f"{path}:{lineno}: corrupt record line ({exc.msg})") from exc
        return rows

    def _write_lines(self, path: Path, rows: list[dict[str, Any]]) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        body = "".join(dump_json_line(row) + "\n" for row in rows)
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(body)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc

    def _upsert(
        self,
        path: Path,
        row: dict[str, Any],
        key: Callable[[dict[str, Any]], Any],
        sort_key: Callable[[dict[str, Any]], Any],
        replaces: Callable[[dict[str, Any], dict[str, Any]], bool] = lambda new, old: True,
    ) -> str:
        """Insert or replace the row with the same key; returns what happened.
        The file is only rewritten when its content actually changes."""
        with self._locked(path):
            rows = self._read_lines(path)
            outcome = "inserted"
            for i, existing in enumerate(rows):
                if key(existing) == key(row):
                    if existing == row:
                        return "unchanged"
                    if not replaces(row, existing):
                        return "unchanged"
                    rows[i] = row
                    outcome = "updated"
                    break
            else:
                rows.append(row)
            rows.sort(key=sort_key)
            self._write_lines(path, rows)
            return outcome

    # -- repos --

    def upsert_record(self, record: RepoRecord) -> str:
        row = record.to_json()
        for field_name in ("title", "description", "readme"):
            row[field_name] = normalize_text(row[field_name])
        return self._upsert(
            self.repos_path,
            row,
            key=lambda r: r["repo_id"],
            sort_key=lambda r: r["repo_id"],
            replaces=lambda new, old: new["fetched_at"] >= old["fetched_at"],
        )

    def load_records(self) -> list[RepoRecord]:
        return [RepoRecord.from_json(row) for row in self._read_lines(self.repos_path)]

    # -- annotations --

    def add_annotation(self, run: AnnotationRun) -> str:
        return self._upsert(
            self.annotations_path,
            run.to_json(),
            key=lambda r: (r["repo_id"], r["round"]),
            sort_key=lambda r: (r["repo_id"], r["round"]),
        )

    def load_annotations(self) -> list[AnnotationRun]:
        return [AnnotationRun.from_json(row) for row in self._read_lines(self.annotations_path)]

    def annotated_repo_ids(self) -> set[str]:
        """Repos that already carry all k rounds."""
        rounds: dict[str, set[int]] = {}
        for run in self.load_annotations():
            rounds.setdefault(run.repo_id, set()).add(run.round)
        return {rid for rid, seen in rounds.items() if set(range(1, self.k + 1)) <= seen}

    # -- families --

    def add_family(self, label: FamilyLabel) -> str:
        return self._upsert(
            self.families_path,
            label.to_json(),
            key=lambda r: r["repo_id"],
            sort_key=lambda r: r["repo_id"],
        )

    def load_families(self) -> list[FamilyLabel]:
        return [FamilyLabel.from_json(row) for row in self._read_lines(self.families_path)]

    # -- verdicts --

    def upsert_verdict(self, verdict: ValidationVerdict) -> str:
        outcome = self._upsert(
            self.verdicts_path,
            verdict.to_json(),
            key=lambda r: (r["repo_id"], r["analyst"]),
            sort_key=lambda r: (r["repo_id"], r["analyst"]),
        )
        return "replaced" if outcome == "updated" else "accepted"

    def load_verdicts(self) -> list[ValidationVerdict]:
        return [ValidationVerdict.from_json(row) for row in self._read_lines(self.verdicts_path)]

    # -- sample queue --

    def save_sample(self, repo_ids: list[str], seed: int, n: int, created_at: str) -> None:
        payload = {"repo_ids": repo_ids, "seed": seed, "n": n, "created_at": created_at}
        tmp = self.sample_path.with_suffix(".json.tmp")
        with self._locked(self.sample_path):
            tmp.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
            os.replace(tmp, self.sample_path)

    def load_sample(self) -> dict[str, Any] | None:
        if not self.sample_path.exists():
            return None
        try:
            return json.loads(self.sample_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StorageError(f"{self.sample_path}: corrupt sample file ({exc.msg})") from exc

    # -- stages --

    def flagged_repo_ids(self) -> list[str]:
        """Repos whose k runs are unanimously malicious, repo_id ascending."""
        from .annotate import build_verdicts  # engine owns the consensus rule

        verdicts = build_verdicts(self.load_annotations(), self.k)
        return sorted(v.repo_id for v in verdicts if v.unanimous_malicious)

    def load_stage(self, stage: str) -> list:
        if stage == "collected":
            return sorted(self.load_records(), key=lambda r: r.repo_id)
        if stage == "complete":
            return filter_complete(self.load_records())
        if stage == "flagged":
            flagged = set(self.flagged_repo_ids())
            return sorted(
                (r for r in self.load_records() if r.repo_id in flagged),
                key=lambda r: r.repo_id,
            )
        if stage == "classified":
            return sorted(self.load_families(), key=lambda f: f.repo_id)
        raise ValueError(f"unknown stage {stage!r} (expected collected/complete/flagged/classified)")

    # -- manifest --

    def manifest(self) -> CorpusManifest:
        records = self.load_records()
        sample = self.load_sample()
        counts = {
            "collected": len(records),
            "complete": len(filter_complete(records)),
            "annotated": len(self.annotated_repo_ids()),
            "flagged": len(self.flagged_repo_ids()),
            "classified": len(self.load_families()),
            "sampled": len(sample["repo_ids"]) if sample else 0,
        }
        return CorpusManifest(corpus_dir=str(self.corpus_dir), counts=counts)

    def write_manifest(self) -> CorpusManifest:
        manifest = self.manifest()
        payload = {"counts": manifest.counts, "k": self.k, "version": 1}
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self.manifest_path)
        return manifest
