"""Build the machine-readable report bodies and write them to disk.

The same builders feed two consumers: the CLI `report` subcommand (JSON +
plot-ready CSV + rendered figures under <corpus>/reports/) and the review
API's /api/reports endpoints, which return the identical JSON bodies
computed on demand. A builder raises EmptyInputError when its pipeline
stage has not produced data yet.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

from .analytics import (
    TrendReport,
    confusion_matrix,
    family_histogram,
    precision,
    trend_ratio,
    yearly_trend,
)
from .errors import EmptyInputError
from .store import CorpusStore

REPORT_NAMES = ("trend", "confusion", "families", "precision")


def _trend_payload(report: TrendReport, split_year: int) -> dict[str, Any]:
    try:
        ratio = trend_ratio(report, split_year)
    except (ZeroDivisionError, EmptyInputError):
        ratio = None
    return {
        "population": report.population,
        "first_year": report.first_year,
        "last_year": report.last_year,
        "counts_by_year": {str(y): c for y, c in sorted(report.counts_by_year.items())},
        "ratio": ratio,
    }


def build_trend_report(store: CorpusStore, split_year: int) -> dict[str, Any]:
    records = store.load_stage("collected")
    if not records:
        raise EmptyInputError("no collected records; run collect first")
    flagged = store.load_stage("flagged")
    return {
        "split_year": split_year,
        "populations": {
            "all": _trend_payload(yearly_trend(records, "all"), split_year),
            "flagged": _trend_payload(yearly_trend(flagged, "flagged"), split_year),
        },
    }


def build_confusion_report(store: CorpusStore) -> dict[str, Any]:
    runs = store.load_annotations()
    round1 = [r for r in runs if r.round == 1]
    round2 = [r for r in runs if r.round == 2]
    shared = {r.repo_id for r in round1} & {r.repo_id for r in round2}
    round1 = [r for r in round1 if r.repo_id in shared]
    round2 = [r for r in round2 if r.repo_id in shared]
    if not round1:
        raise EmptyInputError("no repos carry both annotation rounds; run annotate first")
    matrix = confusion_matrix(round1, round2)
    return {
        "labels": matrix.labels,
        "counts": matrix.counts,
        "normalized": matrix.normalized,
        "zero_rows": matrix.zero_rows,
        "repos": len(round1),
    }


def build_families_report(store: CorpusStore, top_n: int) -> dict[str, Any]:
    labels = store.load_families()
    if not labels:
        raise EmptyInputError("no family labels; run classify first")
    histogram = family_histogram(labels, top_n)
    return {
        "top_n": histogram.top_n,
        "total_labeled": len(labels),
        "entries": [{"family": family, "count": count} for family, count in histogram.entries],
    }


def build_precision_report(store: CorpusStore) -> dict[str, Any]:
    verdicts = store.load_verdicts()
    if not verdicts:
        raise EmptyInputError("no validation verdicts; record some first")
    latest: dict[str, str] = {}
    for v in sorted(verdicts, key=lambda v: (v.noted_at, v.analyst)):
        latest[v.repo_id] = v.verdict
    confirmed = sum(1 for v in latest.values() if v == "confirmed_malicious")
    rejected = sum(1 for v in latest.values() if v == "rejected")
    unsure = sum(1 for v in latest.values() if v == "unsure")
    return {
        "precision": precision(verdicts),
        "confirmed": confirmed,
        "rejected": rejected,
        "unsure": unsure,
        "decisive": confirmed + rejected,
        "total": len(latest),
    }


def build_report(store: CorpusStore, name: str, *, split_year: int = 2020, top_n: int = 10) -> dict[str, Any]:
    if name == "trend":
        return build_trend_report(store, split_year)
    if name == "confusion":
        return build_confusion_report(store)
    if name == "families":
        return build_families_report(store, top_n)
    if name == "precision":
        return build_precision_report(store)
    raise ValueError(f"unknown report {name!r} (expected one of {REPORT_NAMES})")


def _write_json(path: Path, body: dict[str, Any]) -> None:
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_reports(
    store: CorpusStore,
    *,
    split_year: int = 2020,
    top_n: int = 10,
    figures: bool = True,
) -> list[Path]:
    """Emit every report whose stage has run; returns the files written."""
    out_dir = store.corpus_dir / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, body: dict[str, Any]) -> None:
        path = out_dir / f"{name}.json"
        _write_json(path, body)
        written.append(path)

    try:
        trend = build_trend_report(store, split_year)
    except EmptyInputError:
        trend = None
    if trend:
        emit("trend", trend)
        for pop, payload in trend["populations"].items():
            path = out_dir / f"trend_{pop}.csv"
            _write_csv(path, ["year", "count"], [[y, c] for y, c in payload["counts_by_year"].items()])
            written.append(path)

    try:
        confusion = build_confusion_report(store)
    except EmptyInputError:
        confusion = None
    if confusion:
        emit("confusion", confusion)
        rows = [
            [row_label, col_label, confusion["normalized"][i][j]]
            for i, row_label in enumerate(confusion["labels"])
            for j, col_label in enumerate(confusion["labels"])
        ]
        path = out_dir / "confusion.csv"
        _write_csv(path, ["row_label", "col_label", "value"], rows)
        written.append(path)

    try:
        families = build_families_report(store, top_n)
    except EmptyInputError:
        families = None
    if families:
        emit("families", families)
        path = out_dir / "families.csv"
        _write_csv(path, ["family", "count"], [[e["family"], e["count"]] for e in families["entries"]])
        written.append(path)

    try:
        precision_body = build_precision_report(store)
    except EmptyInputError:
        precision_body = None
    if precision_body:
        emit("precision", precision_body)

    if figures:
        from . import figures as figs  # lazy: pulls in matplotlib

        if trend:
            written.append(figs.trend_figure(trend, out_dir / "trend.png"))
        if confusion:
            written.append(figs.confusion_figure(confusion, out_dir / "confusion.png"))
        if families:
            written.append(figs.families_figure(families, out_dir / "families.png"))

    return written
