"""Chat-completion providers: the live HTTP client and the seeded mock.

Both expose one call: ``complete(system, user) -> reply text``. The live
client speaks the OpenAI-compatible wire shape
(``{model, messages:[{role, content}...]}`` in,
``{choices:[{message:{content}}]}`` out). The mock is a pure function of
(seed, prompt), which is what makes whole pipeline runs reproducible.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import requests

from .errors import ProviderError

DEFAULT_MODEL = "gpt-3.5-turbo-0613"
TRANSPORT_ATTEMPTS = 3

# Terms that push the mock toward a "malicious" call when they show up in
# the prompt; mirrors what repo metadata in this corpus tends to contain.
_SUSPICIOUS = re.compile(
    r"keylog|ransom|ddos|botnet|trojan|remote access|stealer|deauth|cryptominer"
    r"|phishing|rootkit|worm|payload|spyware|backdoor|exploit|malware",
    re.IGNORECASE,
)

_FAMILY_LIST_RE = re.compile(r"^- (.+)$", re.MULTILINE)
_MALICE_MARKER = "please annotate with one option"


class ChatProvider(Protocol):
    model_id: str

    def complete(self, system: str, user: str) -> str: ...


@dataclass
class OpenAIChatProvider:
    """Minimal chat-completions client; stateless, one exchange per call."""

    model: str = DEFAULT_MODEL
    base_url: str | None = None
    api_key: str | None = None
    timeout: float = 60.0
    sleep: Callable[[float], None] = time.sleep
    session: requests.Session = field(default_factory=requests.Session)

    def __post_init__(self) -> None:
        self.base_url = (self.base_url or os.environ.get("LLM_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.api_key = self.api_key or os.environ.get("LLM_API_KEY")
        if not self.api_key:
            raise ProviderError("no provider credential: set LLM_API_KEY or pass api_key=")
        self.model_id = self.model

    def complete(self, system: str, user: str) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        for attempt in range(1, TRANSPORT_ATTEMPTS + 1):
            try:
                resp = self.session.post(
                    f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout
                )
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise requests.RequestException(f"status {resp.status_code}")
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < TRANSPORT_ATTEMPTS:
                    self.sleep(2.0 * 2 ** (attempt - 1))
        raise ProviderError(f"chat completion failed after {TRANSPORT_ATTEMPTS} attempts: {last_error}")


@dataclass
class MockChatProvider:
    """Deterministic stand-in: the reply is keyed on a hash of (seed, prompt).

    Identical prompts always get identical replies, so k independent rounds
    agree by construction and reruns reproduce the corpus byte for byte.
    """

    seed: int = 0

    def __post_init__(self) -> None:
        self.model_id = f"mock:{self.seed}"

    def _hash(self, user: str) -> int:
        digest = hashlib.sha256(f"{self.seed}|{user}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")

    def complete(self, system: str, user: str) -> str:
        h = self._hash(user)
        if _MALICE_MARKER in user.lower():
            return self._malice_reply(user, h)
        families = _FAMILY_LIST_RE.findall(user)
        if families:
            return self._family_reply(user, families, h)
        return "benign"

    def _malice_reply(self, user: str, h: int) -> str:
        if h % 97 == 0:
            # a reply the engine cannot normalize; exercises retry-then-unparseable
            return "It could be benign or malicious depending on how it is used."
        roll = h % 100
        if _SUSPICIOUS.search(user):
            label = "malicious" if roll < 85 else ("gray-area" if roll < 95 else "benign")
        else:
            label = "benign" if roll < 77 else ("gray-area" if roll < 92 else "malicious")
        # a little surface variety so normalization earns its keep
        styles = [label, label.capitalize(), f"{label}.", f"{label.capitalize()}."]
        return styles[(h // 100) % len(styles)]

    def _family_reply(self, user: str, families: list[str], h: int) -> str:
        body = user.split("Malware families:")[0].lower()
        mentioned = [f for f in families if re.search(rf"\b{re.escape(f.lower())}\b", body)]
        if mentioned:
            pick = mentioned[h % len(mentioned)]
        elif h % 100 < 15:
            return "Miscellaneous"
        else:
            pick = families[h % len(families)]
        return pick.capitalize() if (h // 7) % 2 else pick


def make_provider(kind: str, *, model: str = DEFAULT_MODEL, seed: int = 0,
                  base_url: str | None = None, api_key: str | None = None) -> ChatProvider:
    if kind == "mock":
        return MockChatProvider(seed=seed)
    if kind == "live":
        return OpenAIChatProvider(model=model, base_url=base_url, api_key=api_key)
    raise ValueError(f"unknown provider {kind!r} (expected live or mock)")
