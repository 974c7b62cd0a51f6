"""Runtime settings, resolved as flags > environment > config file > defaults.

The config file is one JSON document; only the keys below are recognized.
Credentials (FORGE_TOKEN, LLM_API_KEY, REVIEW_TOKEN) come from the
environment only and never live in the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .annotate import DEFAULT_K, PROMPT_README_BUDGET
from .forge import DEFAULT_README_CAP
from .models import utcnow
from .providers import DEFAULT_MODEL


@dataclass
class Settings:
    corpus_dir: str = "corpus"
    provider: str = "mock"
    k: int = DEFAULT_K
    seed: int = 0
    taxonomy: str | None = None
    split_year: int = 2020
    top_n: int = 10
    sample_size: int = 100
    concurrency: int = 8
    clock_epoch: float | None = None
    listen: str = "127.0.0.1:8040"
    model: str = DEFAULT_MODEL
    forge_base_url: str | None = None
    llm_base_url: str | None = None
    readme_cap: int = DEFAULT_README_CAP
    prompt_budget: int = PROMPT_README_BUDGET
    min_interval: float = 0.0
    per_page: int = 100
    max_provider_calls: int | None = None

    def clock(self) -> Callable[[], datetime]:
        if self.clock_epoch is None:
            return utcnow
        frozen = datetime.fromtimestamp(self.clock_epoch, tz=timezone.utc).replace(microsecond=0)
        return lambda: frozen


# settings overridable by the two env vars the pipeline honors beyond flags
_ENV_KEYS = {"forge_base_url": "FORGE_BASE_URL", "llm_base_url": "LLM_BASE_URL"}


def load_settings(config_path: str | None, flag_values: dict[str, Any]) -> Settings:
    """Merge sources in precedence order. `flag_values` holds only flags the
    user actually passed (None means unset)."""
    known = {f.name for f in fields(Settings)}
    merged: dict[str, Any] = {}

    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValueError(f"config {config_path} must be a JSON object")
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"config {config_path}: unknown keys {sorted(unknown)}")
        merged.update(raw)

    for key, env_name in _ENV_KEYS.items():
        value = os.environ.get(env_name)
        if value:
            merged[key] = value

    for key, value in flag_values.items():
        if value is not None:
            merged[key] = value

    return Settings(**merged)
