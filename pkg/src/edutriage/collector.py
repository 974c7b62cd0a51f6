"""Collection stage: search the forge, fetch readmes, verify, store.

Forge search semantics are fuzzy, so every stub is re-verified locally
(case-insensitive substring over description and readme) before storage;
the local check is the source of truth. Records whose repo vanished before
the readme fetch are kept with ``stale=True`` so trend counts stay honest.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable

from .errors import NotFoundError
from .forge import ForgeClient, RepoStub, SearchQuerySet
from .models import RepoRecord, utcnow
from .store import CorpusStore

logger = logging.getLogger(__name__)


@dataclass
class CollectStats:
    pages: int = 0
    stubs: int = 0
    skipped_existing: int = 0
    stored: int = 0
    unverified: int = 0
    stale: int = 0
    errors: list[str] = field(default_factory=list)


def phrase_match(query: SearchQuerySet, description: str, readme: str) -> bool:
    """A phrase hit in either searched field suffices."""
    haystacks = []
    if "description" in query.fields_searched:
        haystacks.append(description.lower())
    if "readme" in query.fields_searched:
        haystacks.append(readme.lower())
    return any(p.lower() in h for p in query.phrases for h in haystacks)


def collect(
    client: ForgeClient,
    store: CorpusStore,
    query: SearchQuerySet | None = None,
    *,
    clock: Callable[[], datetime] = utcnow,
    concurrency: int = 8,
) -> CollectStats:
    """Run search + readme fetch and upsert verified records.

    Resumable: repo_ids already in the store are not re-fetched. Readme
    fetches fan out up to `concurrency`; the client's shared rate gate
    serializes the actual budget decisions.
    """
    query = query or SearchQuerySet()
    stats = CollectStats()

    stubs: dict[str, RepoStub] = {}
    cursor: str | None = None
    while True:
        page, cursor = client.search_pages(query, cursor)
        stats.pages += 1
        for stub in page:
            stubs.setdefault(stub.repo_id, stub)
        if cursor is None:
            break
    stats.stubs = len(stubs)

    known = {r.repo_id for r in store.load_records()}
    todo = [s for s in stubs.values() if s.repo_id not in known]
    stats.skipped_existing = len(stubs) - len(todo)

    def fetch_one(stub: RepoStub) -> tuple[RepoStub, str, bool, bool]:
        try:
            readme = client.fetch_readme(stub.full_name)
            return stub, readme.text, readme.truncated, False
        except NotFoundError:
            return stub, "", False, True

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        fetched = list(pool.map(fetch_one, todo))

    for stub, readme_text, truncated, stale in fetched:
        if stale:
            stats.stale += 1
        elif not phrase_match(query, stub.description, readme_text):
            # search said it matched; locally it does not — drop it
            stats.unverified += 1
            logger.debug("dropping %s: no phrase found locally", stub.full_name)
            continue
        record = RepoRecord(
            repo_id=stub.repo_id,
            full_name=stub.full_name,
            title=stub.title,
            description=stub.description,
            readme=readme_text,
            created_at=stub.created_at,
            is_fork=False,
            fetched_at=clock(),
            stars=stub.stars,
            forks=stub.forks,
            watchers=stub.watchers,
            truncated=truncated,
            stale=stale,
        )
        store.upsert_record(record)
        stats.stored += 1

    logger.info(
        "collect: %d stubs over %d pages, %d stored, %d already known, %d unverified, %d stale",
        stats.stubs, stats.pages, stats.stored, stats.skipped_existing, stats.unverified, stats.stale,
    )
    return stats
