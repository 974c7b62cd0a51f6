"""HTTP client for the forge search and readme endpoints.

Speaks the public GitHub REST shapes; `FORGE_BASE_URL` can point it at the
in-repo mock server. Every request goes through the shared rate gate, and
transient failures retry with exponential backoff (3 attempts, base 2 s).
"""

from __future__ import annotations

import base64
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable

import requests

from .errors import (
    AuthError,
    MalformedResponseError,
    NotFoundError,
    RateLimitError,
    TransientNetworkError,
)
from .models import normalize_text, parse_ts
from .ratelimit import RateGate

# The four expansions of the two search patterns the collector targets.
DEFAULT_PHRASES = (
    "education purpose only",
    "educational purpose only",
    "only for education purpose",
    "only for educational purpose",
)

DEFAULT_README_CAP = 1024 * 1024  # bytes
SEARCHABLE_FIELDS = frozenset({"description", "readme"})

TRANSIENT_ATTEMPTS = 3
BACKOFF_BASE = 2.0  # seconds
RATE_LIMIT_ATTEMPTS = 5


@dataclass(frozen=True)
class SearchQuerySet:
    phrases: tuple[str, ...] = DEFAULT_PHRASES
    exclude_forks: bool = True
    fields_searched: frozenset[str] = SEARCHABLE_FIELDS

    def __post_init__(self) -> None:
        if not self.phrases:
            raise ValueError("phrases must be non-empty")
        if any(not p.strip() for p in self.phrases):
            raise ValueError("phrases must be non-empty after trimming")
        if not self.fields_searched or not self.fields_searched <= SEARCHABLE_FIELDS:
            raise ValueError(f"fields_searched must be a non-empty subset of {set(SEARCHABLE_FIELDS)}")

    def query_string(self, phrase: str) -> str:
        parts = [f'"{phrase}"', "in:" + ",".join(sorted(self.fields_searched))]
        if self.exclude_forks:
            parts.append("fork:false")
        return " ".join(parts)


@dataclass
class RepoStub:
    """Search result row; readme is fetched separately."""

    repo_id: str
    full_name: str
    title: str
    description: str
    created_at: datetime
    is_fork: bool
    stars: int
    forks: int
    watchers: int


@dataclass
class ReadmeFetch:
    text: str
    truncated: bool


@dataclass
class ForgeClient:
    base_url: str | None = None
    token: str | None = None
    gate: RateGate = field(default_factory=RateGate)
    per_page: int = 100
    readme_cap: int = DEFAULT_README_CAP
    timeout: float = 30.0
    sleep: Callable[[float], None] = time.sleep
    session: requests.Session = field(default_factory=requests.Session)

    def __post_init__(self) -> None:
        self.base_url = (self.base_url or os.environ.get("FORGE_BASE_URL") or "https://api.github.com").rstrip("/")
        self.token = self.token or os.environ.get("FORGE_TOKEN")
        if not self.token:
            raise AuthError("no forge credential: set FORGE_TOKEN or pass token=")

    # -- plumbing --

    def _get(self, path: str, params: dict | None = None) -> dict:
        url = f"{self.base_url}{path}"
        headers = {"Authorization": f"token {self.token}", "Accept": "application/vnd.github+json"}
        transient_left = TRANSIENT_ATTEMPTS
        rate_left = RATE_LIMIT_ATTEMPTS
        attempt = 0
        while True:
            attempt += 1
            self.gate.acquire()
            try:
                resp = self.session.get(url, params=params, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                transient_left -= 1
                if transient_left <= 0:
                    raise TransientNetworkError(f"GET {path}: {exc}") from exc
                self.sleep(BACKOFF_BASE * 2 ** (attempt - 1))
                continue

            self.gate.observe(resp.headers)

            if resp.status_code == 401:
                raise AuthError(f"GET {path}: credential rejected")
            if resp.status_code == 404:
                raise NotFoundError(f"GET {path}: not found")
            if resp.status_code in (403, 429):
                rate_left -= 1
                if rate_left <= 0:
                    reset = resp.headers.get("X-RateLimit-Reset")
                    raise RateLimitError(
                        f"GET {path}: rate limited and retries exhausted",
                        reset_at=float(reset) if reset else None,
                    )
                continue  # the gate has seen the reset headers and will wait
            if resp.status_code >= 500:
                transient_left -= 1
                if transient_left <= 0:
                    raise TransientNetworkError(f"GET {path}: status {resp.status_code}")
                self.sleep(BACKOFF_BASE * 2 ** (attempt - 1))
                continue
            if resp.status_code != 200:
                raise MalformedResponseError(f"GET {path}: unexpected status {resp.status_code}")
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponseError(f"GET {path}: body is not JSON") from exc

    # -- operations --

    def search_pages(self, query: SearchQuerySet, cursor: str | None = None) -> tuple[list[RepoStub], str | None]:
        """One page of search results plus the cursor for the next page, or
        None once every phrase is exhausted.

        The cursor walks (phrase index, page) pairs, so the multi-phrase
        union is a single pagination chain to the caller.
        """
        phrase_idx, page = (0, 1)
        if cursor is not None:
            try:
                a, b = cursor.split(":")
                phrase_idx, page = int(a), int(b)
            except ValueError:
                raise MalformedResponseError(f"invalid cursor {cursor!r}")
        if phrase_idx >= len(query.phrases):
            return [], None

        payload = self._get(
            "/search/repositories",
            {"q": query.query_string(query.phrases[phrase_idx]), "page": page, "per_page": self.per_page},
        )
        if not isinstance(payload, dict) or "items" not in payload or "total_count" not in payload:
            raise MalformedResponseError("search payload missing items/total_count")

        stubs = []
        for item in payload["items"]:
            try:
                stub = RepoStub(
                    repo_id=str(item["id"]),
                    full_name=item["full_name"],
                    title=item["name"],
                    description=normalize_text(item.get("description") or ""),
                    created_at=parse_ts(item["created_at"]),
                    is_fork=bool(item["fork"]),
                    stars=item.get("stargazers_count", 0),
                    forks=item.get("forks_count", 0),
                    watchers=item.get("watchers_count", 0),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedResponseError(f"search item violates schema: {exc}") from exc
            if query.exclude_forks and stub.is_fork:
                continue
            stubs.append(stub)

        seen = (page - 1) * self.per_page + len(payload["items"])
        if payload["items"] and seen < payload["total_count"]:
            return stubs, f"{phrase_idx}:{page + 1}"
        if phrase_idx + 1 < len(query.phrases):
            return stubs, f"{phrase_idx + 1}:1"
        return stubs, None

    def fetch_readme(self, full_name: str) -> ReadmeFetch:
        """Decoded readme body, capped at `readme_cap` bytes.

        A repo without a readme yields ("", False) — absence is data. A repo
        that vanished since search raises NotFoundError so the caller can
        mark the record stale.
        """
        try:
            payload = self._get(f"/repos/{full_name}/readme")
        except NotFoundError:
            # 404 is ambiguous: no readme file vs. deleted repo
            self._get(f"/repos/{full_name}")  # raises NotFoundError if gone
            return ReadmeFetch(text="", truncated=False)

        if payload.get("encoding") != "base64" or "content" not in payload:
            raise MalformedResponseError(f"readme payload for {full_name} violates schema")
        try:
            raw = base64.b64decode(payload["content"])
        except (ValueError, TypeError) as exc:
            raise MalformedResponseError(f"readme for {full_name} is not valid base64") from exc

        truncated = len(raw) > self.readme_cap
        if truncated:
            raw = raw[: self.readme_cap]
        # ignore, not replace: a multi-byte char split by the cap should
        # disappear rather than inject replacement chars mid-stream
        text = normalize_text(raw.decode("utf-8", errors="ignore")) if truncated else normalize_text(raw)
        return ReadmeFetch(text=text, truncated=truncated)
