"""Malware-family categorization for flagged repositories.

Each flagged repo gets exactly one family from a configured taxonomy; when
the model's reply names nothing from the list (or names several), the label
falls back to "Miscellaneous". The output is a total function into
taxonomy ∪ {fallback} — nothing can escape it.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from .errors import ProviderError
from .models import FamilyLabel, RepoRecord, utcnow
from .providers import ChatProvider

logger = logging.getLogger(__name__)

FALLBACK_FAMILY = "Miscellaneous"

# Default taxonomy. This list is configuration, not ground truth: swap it
# out with --taxonomy pointing at a JSON list of strings.
DEFAULT_FAMILIES = (
    "keylogger",
    "ransomware",
    "ddos",
    "rat",
    "botnet",
    "trojan",
    "spyware",
    "worm",
    "stealer",
    "phishing",
    "rootkit",
    "backdoor",
    "cryptominer",
    "exploit",
)

_SYSTEM_PROMPT = (
    "Say you are a security professional. Given specific information about a "
    "repository, such as repo title, description and the readme file content, "
    "you will categorize the repository into a malware family."
)


@dataclass(frozen=True)
class FamilyTaxonomy:
    families: tuple[str, ...] = DEFAULT_FAMILIES
    fallback: str = FALLBACK_FAMILY

    def __post_init__(self) -> None:
        if not self.families:
            raise ValueError("taxonomy must list at least one family")
        lowered = [f.lower() for f in self.families]
        if len(set(lowered)) != len(lowered):
            raise ValueError("family names must be unique case-insensitively")
        if self.fallback.lower() in lowered:
            raise ValueError("fallback name must not appear in the family list")

    @classmethod
    def from_file(cls, path: str | Path) -> "FamilyTaxonomy":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ValueError(f"{path}: taxonomy file must be a JSON list of strings")
        return cls(families=tuple(data))


def render_family_prompt(
    record: RepoRecord,
    taxonomy: FamilyTaxonomy,
    *,
    readme_budget: int = 6000,
) -> tuple[str, str]:
    """Prompt that embeds the taxonomy verbatim and instructs a single pick,
    with the fallback name for anything that does not fit."""
    readme = record.readme
    if len(readme) > readme_budget:
        readme = readme[:readme_budget] + "[truncated]"
    listing = "\n".join(f"- {name}" for name in taxonomy.families)
    user = (
        f"Repository Title: {record.title}\n"
        f"Description: {record.description}\n"
        f"Readme File Content: {readme}\n"
        f"Malware families:\n{listing}\n"
        "Based on the provided information, please choose exactly one malware "
        "family from the list above that best describes the repository. If the "
        f"repository cannot be labeled using the list, label it as {taxonomy.fallback}. "
        "No explanation needed."
    )
    return _SYSTEM_PROMPT, user


def match_family(reply: str, taxonomy: FamilyTaxonomy) -> str:
    """Resolve a model reply to a family name.

    A family counts as named when it appears as a whole word,
    case-insensitively. Exactly one named family wins; zero or several fall
    back. Canonical casing comes from the taxonomy, not the reply.
    """
    text = reply.lower()
    named = [
        name for name in taxonomy.families
        if re.search(rf"(?<!\w){re.escape(name.lower())}(?!\w)", text)
    ]
    if len(named) == 1:
        return named[0]
    return taxonomy.fallback


def classify_family(
    record: RepoRecord,
    taxonomy: FamilyTaxonomy,
    provider: ChatProvider,
    *,
    readme_budget: int = 6000,
) -> FamilyLabel:
    system, user = render_family_prompt(record, taxonomy, readme_budget=readme_budget)
    raw = provider.complete(system, user)
    return FamilyLabel(repo_id=record.repo_id, family=match_family(raw, taxonomy), raw_response=raw)


@dataclass
class ClassifyStats:
    processed: int = 0
    skipped: int = 0
    pending: list[str] = field(default_factory=list)


def run_family_stage(
    store,
    taxonomy: FamilyTaxonomy,
    provider: ChatProvider,
    *,
    concurrency: int = 8,
    readme_budget: int = 6000,
    clock: Callable[[], datetime] = utcnow,
) -> ClassifyStats:
    """Classify every flagged repo that has no family label yet."""
    del clock  # family labels carry no timestamp; kept for a uniform stage signature
    stats = ClassifyStats()
    labeled = {f.repo_id for f in store.load_families()}
    todo = []
    for record in store.load_stage("flagged"):
        if record.repo_id in labeled:
            stats.skipped += 1
        else:
            todo.append(record)

    def work(record: RepoRecord) -> FamilyLabel:
        return classify_family(record, taxonomy, provider, readme_budget=readme_budget)

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {pool.submit(work, record): record for record in todo}
        try:
            for future in as_completed(futures):
                record = futures[future]
                try:
                    label = future.result()
                except ProviderError as exc:
                    stats.pending.append(record.repo_id)
                    logger.warning("family pending for %s: %s", record.repo_id, exc)
                else:
                    store.add_family(label)
                    stats.processed += 1
        except BaseException:
            for future in futures:
                future.cancel()
            raise

    stats.pending.sort()
    logger.info("classify: %d processed, %d skipped, %d pending",
                stats.processed, stats.skipped, len(stats.pending))
    return stats
