"""Maliciousness annotation: prompt rendering, label normalization, and the
unanimous-consensus rule.

Each repository is judged by k independent queries (default 2) with
identical prompts and no shared conversation state. A repo is flagged —
advanced to the family stage — only when every round answers "malicious".
"""

from __future__ import annotations

import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterable

from .errors import BudgetExceededError, EmptyInputError, ProviderError
from .models import AnnotationRun, ConsensusVerdict, MaliceLabel, RepoRecord, utcnow
from .providers import ChatProvider

logger = logging.getLogger(__name__)

DEFAULT_K = 2
PROMPT_README_BUDGET = 6000  # characters of readme fed to the model
UNPARSEABLE_RETRIES = 3
TRUNCATION_MARKER = "[truncated]"

SYSTEM_PROMPT = (
    "Say you are a security professional. Given specific information about a "
    "repository, such as repo title, description and the readme file content, "
    "you will annotate the repository whether the repo is malicious."
)

_INSTRUCTION = (
    "Based on the provided information, please annotate with one option: "
    "benign, malicious, gray-area; indicating the potential maliciousness of "
    "the repository. No explanation needed."
)

_BENIGN_RE = re.compile(r"\bbenign\b")
_MALICIOUS_RE = re.compile(r"\bmalicious\b")
_GRAY_RE = re.compile(r"\bgr[ae]y[\s_-]?area\b")


def render_malice_prompt(record: RepoRecord, *, readme_budget: int = PROMPT_README_BUDGET) -> tuple[str, str]:
    """(system text, user text) for one repository.

    The readme section is cut at `readme_budget` characters with a visible
    marker; everything else goes through verbatim.
    """
    readme = record.readme
    if len(readme) > readme_budget:
        readme = readme[:readme_budget] + TRUNCATION_MARKER
    user = (
        f"Repository Title: {record.title}\n"
        f"Description: {record.description}\n"
        f"Readme File Content: {readme}\n"
        f"{_INSTRUCTION}"
    )
    return SYSTEM_PROMPT, user


def normalize_label(raw_response: str) -> MaliceLabel:
    """Map a model reply onto the label alphabet.

    Case-insensitive; a reply counts for a category when the category word
    appears as a whole word. Exactly one distinct category present -> that
    label; zero or two-plus -> unparseable (a value, not an error).
    """
    text = raw_response.strip().lower()
    found = []
    if _GRAY_RE.search(text):
        found.append(MaliceLabel.GRAY_AREA)
    if _BENIGN_RE.search(text):
        found.append(MaliceLabel.BENIGN)
    if _MALICIOUS_RE.search(text):
        found.append(MaliceLabel.MALICIOUS)
    if len(found) == 1:
        return found[0]
    return MaliceLabel.UNPARSEABLE


def consensus(labels: list[MaliceLabel]) -> tuple[bool, bool]:
    """(unanimous_malicious, agreement) over one repo's round labels.

    Unanimous-malicious requires every label to be malicious, so any
    unparseable round forces it false. Agreement just means all rounds
    said the same thing, whatever it was.
    """
    if not labels:
        raise EmptyInputError("consensus needs at least one label")
    return (
        all(label is MaliceLabel.MALICIOUS for label in labels),
        len(set(labels)) == 1,
    )


def build_verdicts(runs: Iterable[AnnotationRun], k: int) -> list[ConsensusVerdict]:
    """Group persisted runs into per-repo verdicts; repos still missing
    rounds are left out."""
    by_repo: dict[str, dict[int, AnnotationRun]] = {}
    for run in runs:
        by_repo.setdefault(run.repo_id, {})[run.round] = run
    verdicts = []
    for repo_id in sorted(by_repo):
        rounds = by_repo[repo_id]
        if not set(range(1, k + 1)) <= set(rounds):
            continue
        ordered = [rounds[i] for i in range(1, k + 1)]
        unanimous, agree = consensus([r.label for r in ordered])
        verdicts.append(
            ConsensusVerdict(repo_id=repo_id, runs=ordered, unanimous_malicious=unanimous, agreement=agree)
        )
    return verdicts


class CallBudget:
    """Thread-safe cap on provider calls for one stage run."""

    def __init__(self, max_calls: int | None):
        self.max_calls = max_calls
        self._used = 0
        self._lock = threading.Lock()

    def spend(self) -> None:
        if self.max_calls is None:
            return
        with self._lock:
            if self._used >= self.max_calls:
                raise BudgetExceededError(f"provider call cap of {self.max_calls} hit")
            self._used += 1


def annotate(
    record: RepoRecord,
    k: int,
    provider: ChatProvider,
    *,
    sink: Callable[[AnnotationRun], object] | None = None,
    existing: dict[int, AnnotationRun] | None = None,
    clock: Callable[[], datetime] = utcnow,
    readme_budget: int = PROMPT_README_BUDGET,
    budget: CallBudget | None = None,
) -> ConsensusVerdict:
    """Run the missing rounds for one repo and return its verdict.

    Every completed run goes through `sink` before the verdict is computed,
    so a crash mid-repo loses at most the in-flight round. `existing` rounds
    (from a previous interrupted run) are reused, never re-queried.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    system, user = render_malice_prompt(record, readme_budget=readme_budget)
    if len(record.readme) > readme_budget:
        logger.info("prompt readme truncated for %s (%d chars over budget)", record.repo_id, len(record.readme) - readme_budget)

    runs: dict[int, AnnotationRun] = dict(existing or {})
    for round_no in range(1, k + 1):
        if round_no in runs:
            continue
        raw, label = _query_with_retry(provider, system, user, budget)
        run = AnnotationRun(
            repo_id=record.repo_id,
            round=round_no,
            raw_response=raw,
            label=label,
            model_id=provider.model_id,
            queried_at=clock(),
        )
        if sink is not None:
            sink(run)
        runs[round_no] = run

    ordered = [runs[i] for i in range(1, k + 1)]
    unanimous, agree = consensus([r.label for r in ordered])
    return ConsensusVerdict(record.repo_id, ordered, unanimous, agree)


def _query_with_retry(
    provider: ChatProvider, system: str, user: str, budget: CallBudget | None
) -> tuple[str, MaliceLabel]:
    raw = ""
    for _ in range(1 + UNPARSEABLE_RETRIES):
        if budget is not None:
            budget.spend()
        raw = provider.complete(system, user)
        label = normalize_label(raw)
        if label is not MaliceLabel.UNPARSEABLE:
            return raw, label
    return raw, MaliceLabel.UNPARSEABLE


@dataclass
class AnnotateStats:
    processed: int = 0
    skipped: int = 0
    flagged: int = 0
    pending: list[str] = field(default_factory=list)  # repo_ids that failed on provider errors


def run_annotation_stage(
    store,
    provider: ChatProvider,
    *,
    k: int = DEFAULT_K,
    concurrency: int = 8,
    clock: Callable[[], datetime] = utcnow,
    readme_budget: int = PROMPT_README_BUDGET,
    max_calls: int | None = None,
) -> AnnotateStats:
    """Annotate every complete record that does not already carry k rounds.

    Per-repo tasks fan out across threads; persistence funnels through the
    store's writer lock. Provider failures leave the repo pending (listed in
    stats) without stopping the stage; a blown call budget aborts it.
    """
    stats = AnnotateStats()
    done = store.annotated_repo_ids()
    partial: dict[str, dict[int, AnnotationRun]] = {}
    for run in store.load_annotations():
        partial.setdefault(run.repo_id, {})[run.round] = run

    todo = []
    for record in store.load_stage("complete"):
        if record.repo_id in done:
            stats.skipped += 1
        else:
            todo.append(record)

    call_budget = CallBudget(max_calls)

    def work(record: RepoRecord) -> ConsensusVerdict:
        return annotate(
            record,
            k,
            provider,
            sink=store.add_annotation,
            existing=partial.get(record.repo_id),
            clock=clock,
            readme_budget=readme_budget,
            budget=call_budget,
        )

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {pool.submit(work, record): record for record in todo}
        try:
            for future in as_completed(futures):
                record = futures[future]
                try:
                    verdict = future.result()
                except ProviderError as exc:
                    stats.pending.append(record.repo_id)
                    logger.warning("annotation pending for %s: %s", record.repo_id, exc)
                else:
                    stats.processed += 1
                    if verdict.unanimous_malicious:
                        stats.flagged += 1
        except BaseException:  # budget blown or interrupted: stop scheduling, keep state
            for future in futures:
                future.cancel()
            raise

    stats.pending.sort()
    logger.info("annotate: %d processed, %d skipped, %d flagged, %d pending",
                stats.processed, stats.skipped, stats.flagged, len(stats.pending))
    return stats
