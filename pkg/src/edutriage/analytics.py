"""Report computations: yearly trend, inter-round confusion, family
histogram, and validation precision.

Everything here is a pure function of its inputs — no store access, no
clock, no hidden state — so the CLI report path and the review API can both
call in and get identical answers.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyInputError, MismatchedPopulationsError
from .models import AnnotationRun, FamilyLabel, MaliceLabel, RepoRecord, ValidationVerdict

# Canonical label order for matrices; unparseable joins only when present.
_BASE_LABELS = (MaliceLabel.BENIGN, MaliceLabel.MALICIOUS, MaliceLabel.GRAY_AREA)


@dataclass
class TrendReport:
    population: str
    counts_by_year: dict[int, int]
    first_year: int | None
    last_year: int | None


@dataclass
class ConfusionMatrix:
    labels: list[str]
    counts: list[list[int]]
    normalized: list[list[float]]
    zero_rows: list[str]  # labels whose row had no mass (normalized row is all zeros)


@dataclass
class FamilyHistogram:
    entries: list[tuple[str, int]]
    top_n: int


def yearly_trend(records: Iterable[RepoRecord], population: str) -> TrendReport:
    """Bucket records by UTC calendar year of creation; years with no
    records inside the observed range still appear, with count 0."""
    years = Counter(r.created_at.year for r in records)
    if not years:
        return TrendReport(population=population, counts_by_year={}, first_year=None, last_year=None)
    first, last = min(years), max(years)
    counts = {year: years.get(year, 0) for year in range(first, last + 1)}
    return TrendReport(population=population, counts_by_year=counts, first_year=first, last_year=last)


def trend_ratio(report: TrendReport, split_year: int) -> float:
    """(count of years >= split_year) / (count of years < split_year)."""
    if not report.counts_by_year:
        raise EmptyInputError("trend report has no counts")
    pre = sum(c for year, c in report.counts_by_year.items() if year < split_year)
    post = sum(c for year, c in report.counts_by_year.items() if year >= split_year)
    if pre == 0:
        raise ZeroDivisionError(f"no {report.population} records created before {split_year}")
    return post / pre


def confusion_matrix(round1: list[AnnotationRun], round2: list[AnnotationRun]) -> ConfusionMatrix:
    """Co-occurrence of the two rounds' labels, counted per repo, with
    row-stochastic normalization."""
    first = {run.repo_id: run.label for run in round1}
    second = {run.repo_id: run.label for run in round2}
    if set(first) != set(second):
        diff = set(first) ^ set(second)
        raise MismatchedPopulationsError(
            f"rounds cover different repos ({len(diff)} differ): {sorted(diff)[:10]}", difference=diff
        )

    present = set(first.values()) | set(second.values())
    labels = list(_BASE_LABELS)  # keeps the 3x3 shape in the clean case
    if MaliceLabel.UNPARSEABLE in present:
        labels.append(MaliceLabel.UNPARSEABLE)
    index = {label: i for i, label in enumerate(labels)}

    n = len(labels)
    counts = [[0] * n for _ in range(n)]
    for repo_id, label1 in first.items():
        counts[index[label1]][index[second[repo_id]]] += 1

    normalized: list[list[float]] = []
    zero_rows: list[str] = []
    for i, row in enumerate(counts):
        total = sum(row)
        if total == 0:
            normalized.append([0.0] * n)
            zero_rows.append(labels[i].value)
        else:
            normalized.append([c / total for c in row])

    return ConfusionMatrix(
        labels=[l.value for l in labels], counts=counts, normalized=normalized, zero_rows=zero_rows
    )


def family_histogram(labels: Iterable[FamilyLabel], top_n: int) -> FamilyHistogram:
    """Counts per family, sorted by count descending then name ascending,
    cut to the top_n head."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    counts = Counter(label.family for label in labels)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return FamilyHistogram(entries=ordered[:top_n], top_n=top_n)


def precision(verdicts: list[ValidationVerdict]) -> float:
    """Fraction of sampled repos the analyst confirmed as malicious.

    Only the latest verdict per repo counts (across analysts), and "unsure"
    verdicts are excluded from numerator and denominator both.
    """
    if not verdicts:
        raise EmptyInputError("no validation verdicts recorded")
    latest: dict[str, ValidationVerdict] = {}
    for verdict in sorted(verdicts, key=lambda v: (v.noted_at, v.analyst)):
        latest[verdict.repo_id] = verdict
    confirmed = sum(1 for v in latest.values() if v.verdict == "confirmed_malicious")
    rejected = sum(1 for v in latest.values() if v.verdict == "rejected")
    decisive = confirmed + rejected
    if decisive == 0:
        raise EmptyInputError("all verdicts are 'unsure'; precision is undefined")
    return confirmed / decisive
