"""Seeded sampling of flagged repos for human review, and the verdict ledger.

The sample is drawn once, persisted as the active review queue, and every
verdict must land inside it. Determinism comes from the seed; uniformity is
covered by a statistical test rather than trusted.
"""

from __future__ import annotations

import random
from datetime import datetime
from typing import Callable

from .errors import EmptyPopulationError, NotInSampleError
from .models import ValidationVerdict, format_ts, utcnow
from .store import CorpusStore


def sample_flagged(flagged: list[str], n: int, seed: int) -> list[str]:
    """Uniform sample without replacement of min(n, |flagged|) repo ids.

    The population is sorted first so the draw depends only on its set of
    ids and the seed, not on input order.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if not flagged:
        raise EmptyPopulationError("no flagged repos to sample from")
    population = sorted(set(flagged))
    rng = random.Random(seed)
    return rng.sample(population, min(n, len(population)))


def create_review_queue(
    store: CorpusStore,
    n: int,
    seed: int,
    *,
    clock: Callable[[], datetime] = utcnow,
) -> list[str]:
    """Draw the sample from the store's flagged set and persist it as the
    active queue."""
    sample = sample_flagged(store.flagged_repo_ids(), n, seed)
    store.save_sample(sample, seed=seed, n=n, created_at=format_ts(clock()))
    return sample


def record_verdict(store: CorpusStore, verdict: ValidationVerdict) -> str:
    """Upsert one verdict into the ledger; 'replaced' when the same analyst
    already ruled on the repo."""
    sample = store.load_sample()
    if sample is None or verdict.repo_id not in sample["repo_ids"]:
        raise NotInSampleError(f"repo {verdict.repo_id} is not in the active review sample")
    return store.upsert_verdict(verdict)
