"""Request budget tracking and the shared rate gate.

Every forge request passes through one :class:`RateGate`; the gate serializes
budget decisions so concurrent page/readme fetches cannot overdraw the API.
The decision itself (`throttle`) is a pure function so the wait rules are
testable without a clock.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, replace
from typing import Callable, Mapping


@dataclass(frozen=True)
class RateBudget:
    """Client-side view of the forge's rate limit.

    `remaining_calls` only increases at/after `reset_at` (server epoch
    seconds). `last_request_at` is what makes the min-interval rule a pure
    computation.
    """

    remaining_calls: int = 1
    reset_at: float = 0.0
    min_interval: float = 0.0
    last_request_at: float | None = None

    def __post_init__(self) -> None:
        if self.remaining_calls < 0:
            raise ValueError("remaining_calls must be non-negative")
        if self.min_interval < 0:
            raise ValueError("min_interval must be non-negative")


def _header_float(headers: Mapping[str, str], name: str) -> float | None:
    # header lookups are case-insensitive on real responses; normalize here
    for key, value in headers.items():
        if key.lower() == name.lower():
            try:
                return float(value)
            except (TypeError, ValueError):
                return None
    return None


def throttle(
    budget: RateBudget,
    response_headers: Mapping[str, str],
    *,
    now: float,
) -> tuple[RateBudget, float]:
    """Fold the most recent response headers into the budget and compute the
    wait before the next request.

    Wait is the max of: the min-interval remainder, time to `reset_at` when
    the budget is exhausted, and any server `Retry-After` hint (the hint
    dominates even when calls remain).
    """
    remaining = budget.remaining_calls
    reset_at = budget.reset_at

    header_remaining = _header_float(response_headers, "X-RateLimit-Remaining")
    if header_remaining is not None:
        remaining = int(header_remaining)
    header_reset = _header_float(response_headers, "X-RateLimit-Reset")
    if header_reset is not None:
        reset_at = header_reset
    retry_after = _header_float(response_headers, "Retry-After")

    interval_wait = 0.0
    if budget.last_request_at is not None:
        interval_wait = max(0.0, budget.last_request_at + budget.min_interval - now)
    exhausted_wait = max(0.0, reset_at - now) if remaining <= 0 else 0.0
    hint_wait = max(0.0, retry_after) if retry_after is not None else 0.0

    updated = replace(budget, remaining_calls=remaining, reset_at=reset_at)
    return updated, max(interval_wait, exhausted_wait, hint_wait)


class RateGate:
    """Shared gate every forge request acquires before going out.

    Clock and sleep are injectable so tests can drive a mock clock and assert
    that no request is issued before the computed wait elapses.
    """

    def __init__(
        self,
        budget: RateBudget | None = None,
        *,
        clock: Callable[[], float] = time.time,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._budget = budget or RateBudget()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._pending_headers: dict[str, str] = {}

    @property
    def budget(self) -> RateBudget:
        return self._budget

    def observe(self, response_headers: Mapping[str, str]) -> None:
        """Record headers from the most recent forge response."""
        with self._lock:
            self._pending_headers = dict(response_headers)

    def acquire(self) -> None:
        """Block until a request may be issued; the lock is held through the
        wait so budget decisions stay serialized."""
        with self._lock:
            now = self._clock()
            budget, wait = throttle(self._budget, self._pending_headers, now=now)
            self._pending_headers = {}
            if wait > 0:
                self._sleep(wait)
                now = self._clock()
            remaining = budget.remaining_calls
            if remaining <= 0 and now >= budget.reset_at:
                # reset has passed; let one probe through, headers on the
                # response will re-sync the real budget
                remaining = 1
            self._budget = replace(
                budget,
                remaining_calls=max(0, remaining - 1),
                last_request_at=now,
            )
