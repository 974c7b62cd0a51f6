"""Shared fixtures: frozen clock, record factory, mock forge server."""

from __future__ import annotations

import time
from datetime import datetime, timezone

import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    status = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
    label = report.nodeid.split("::")[-1].removeprefix("test_")
    print(f"\n[acceptance] {status}: {label}", flush=True)

from edutriage.forge import DEFAULT_PHRASES, ForgeClient
from edutriage.mockforge import MockForge, build_corpus, serve
from edutriage.models import AnnotationRun, MaliceLabel, RepoRecord
from edutriage.ratelimit import RateBudget, RateGate

FROZEN_NOW = datetime(2024, 1, 1, tzinfo=timezone.utc)
FROZEN_EPOCH = int(FROZEN_NOW.timestamp())  # 1704067200


def frozen_clock() -> datetime:
    return FROZEN_NOW


def make_record(
    repo_id: str = "1",
    *,
    description: str = "a tool, educational purpose only",
    readme: str = "# tool\nusage notes\n",
    title: str | None = None,
    year: int = 2021,
    **kwargs,
) -> RepoRecord:
    return RepoRecord(
        repo_id=repo_id,
        full_name=kwargs.pop("full_name", f"owner/repo{repo_id}"),
        title=title if title is not None else f"repo{repo_id}",
        description=description,
        readme=readme,
        created_at=kwargs.pop("created_at", datetime(year, 6, 15, tzinfo=timezone.utc)),
        is_fork=kwargs.pop("is_fork", False),
        fetched_at=kwargs.pop("fetched_at", FROZEN_NOW),
        **kwargs,
    )


def make_run(repo_id: str, round_no: int, label: MaliceLabel, raw: str | None = None) -> AnnotationRun:
    return AnnotationRun(
        repo_id=repo_id,
        round=round_no,
        raw_response=raw if raw is not None else label.value,
        label=label,
        model_id="test",
        queried_at=FROZEN_NOW,
    )


class MockClock:
    """Unix-epoch clock whose sleep just advances time."""

    def __init__(self, start: float | None = None):
        self.now = time.time() if start is None else start
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


@pytest.fixture()
def forge_env(monkeypatch):
    monkeypatch.setenv("FORGE_TOKEN", "test-token")


@pytest.fixture()
def mock_server(forge_env):
    forge = MockForge(build_corpus(seed=7, size=250, phrases=list(DEFAULT_PHRASES)))
    server = serve(forge)
    yield server
    server.close()


def make_client(server, **kwargs) -> ForgeClient:
    kwargs.setdefault("gate", RateGate(RateBudget(min_interval=0.0)))
    kwargs.setdefault("sleep", lambda _s: None)
    return ForgeClient(base_url=server.base_url, token="test-token", **kwargs)
