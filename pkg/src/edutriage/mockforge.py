"""Deterministic in-process forge for tests and offline runs.

Implements the same HTTP+JSON shapes as the public GitHub REST API for the
three endpoints the collector uses:

    GET /search/repositories?q=...&page=N&per_page=M
    GET /repos/{owner}/{repo}
    GET /repos/{owner}/{repo}/readme

The corpus it serves is generated from a seed, so two servers built with the
same (seed, size) answer every request identically. Failure injection knobs
(`fail_transient_next`, `rate_limit_next`, `deleted_ids`) let tests exercise
the client's retry, throttle, and stale paths.
"""

from __future__ import annotations

import argparse
import base64
import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

_BENIGN_TOPICS = [
    "a todo list app for the web",
    "course exercises and lecture notes",
    "simple calculator written for a class project",
    "sorting algorithm visualizer",
    "weather dashboard using a public api",
    "flashcard trainer for language learning",
    "recipe manager with a tiny database",
    "chess engine experiments",
    "static site generator tutorial",
    "unit testing walkthrough for beginners",
]

_MALWARE_TOPICS = [
    "python keylogger that captures every keystroke",
    "ransomware proof of concept that encrypts user files",
    "ddos botnet stress testing tool",
    "remote access trojan with hidden persistence",
    "credential stealer targeting saved browser passwords",
    "wifi deauth attack script",
    "cryptominer dropper with startup persistence",
    "phishing page generator kit",
    "windows rootkit loader",
    "usb worm that spreads via autorun payload",
]

_PHRASE_CASINGS = [
    "{p}",
    "{P} only project",
    "This tool is shared for {p}.",
    "FOR {U}!!",
    "disclaimer: {p}, do not misuse",
]


@dataclass
class MockRepo:
    id: int
    owner: str
    name: str
    description: str
    readme: str | None
    fork: bool
    created_at: str
    stars: int
    forks: int
    watchers: int

    @property
    def full_name(self) -> str:
        return f"{self.owner}/{self.name}"

    def search_item(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "full_name": self.full_name,
            "owner": {"login": self.owner},
            "description": self.description or None,
            "fork": self.fork,
            "created_at": self.created_at,
            "stargazers_count": self.stars,
            "forks_count": self.forks,
            "watchers_count": self.watchers,
        }


def build_corpus(seed: int, size: int, phrases: list[str], *, all_match: bool = False) -> list[MockRepo]:
    """Seeded corpus with the mix the pipeline cares about: phrase hits in
    description and/or readme, forks, missing readmes, empty descriptions,
    benign and malware-flavored content, creation years 2008-2023 skewed
    toward recent years.

    With ``all_match`` every repo is a non-fork whose description carries the
    first phrase (used to pin down pagination arithmetic).
    """
    rng = random.Random(seed)
    repos = []
    for i in range(size):
        rid = 1000 + i
        owner = f"user{i % 97:03d}"
        malicious = rng.random() < 0.4
        topic = rng.choice(_MALWARE_TOPICS if malicious else _BENIGN_TOPICS)
        name = "-".join(topic.split()[:2]) + f"-{i}"
        year = rng.choices(range(2008, 2024), weights=range(1, 17))[0]
        created = f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:00:00Z"

        phrase = rng.choice(phrases)
        casing = rng.choice(_PHRASE_CASINGS).format(p=phrase, P=phrase.capitalize(), U=phrase.upper())
        place = rng.random()  # where the phrase lands, if anywhere

        description = topic.capitalize()
        readme: str | None = f"# {name}\n\n{topic}\n\nUsage: clone and run.\n"
        if all_match:
            description = f"{topic.capitalize()}. {phrases[0]}."
        else:
            if place < 0.35:
                description = f"{topic.capitalize()}. {casing}"
            elif place < 0.6:
                readme += f"\n{casing}\n"
            elif place < 0.7:
                description = f"{topic.capitalize()}. {casing}"
                readme += f"\n{casing}\n"
            # else: no phrase anywhere — search must not return it

            if rng.random() < 0.10:
                readme = None
            if rng.random() < 0.15:
                description = ""

        repos.append(
            MockRepo(
                id=rid,
                owner=owner,
                name=name,
                description=description,
                readme=readme,
                fork=(not all_match) and rng.random() < 0.15,
                created_at=created,
                stars=rng.randint(0, 500),
                forks=rng.randint(0, 80),
                watchers=rng.randint(0, 120),
            )
        )
    return repos


def _parse_query(q: str) -> tuple[list[str], bool, set[str]]:
    """Pull quoted phrases, the fork: qualifier, and in: fields out of a
    search query string, GitHub-style."""
    phrases = [m.lower() for m in re.findall(r'"([^"]+)"', q)]
    fork = True
    m = re.search(r"\bfork:(true|false)\b", q)
    if m:
        fork = m.group(1) == "true"
    fields = {"description", "readme"}
    m = re.search(r"\bin:([\w,]+)\b", q)
    if m:
        fields = set(m.group(1).split(","))
    return phrases, fork, fields


class MockForge:
    """Request-level logic, separated from the HTTP plumbing so tests can
    also call it directly."""

    def __init__(self, repos: list[MockRepo]):
        self.repos = sorted(repos, key=lambda r: r.id)
        self.by_full_name = {r.full_name: r for r in self.repos}
        self.deleted_ids: set[int] = set()
        self.vanished_ids: set[int] = set()  # still in search, but repo/readme 404 (stale path)
        self.fail_transient_next = 0   # next N requests answer 500
        self.rate_limit_next = 0       # next N requests answer 403 + reset headers
        self.rate_limit_reset_in = 30.0
        self.request_log: list[str] = []
        self._lock = threading.Lock()

    # -- failure injection bookkeeping --

    def _injected(self) -> tuple[int, dict] | None:
        with self._lock:
            if self.fail_transient_next > 0:
                self.fail_transient_next -= 1
                return 500, {"message": "Server Error"}
            if self.rate_limit_next > 0:
                self.rate_limit_next -= 1
                reset = time.time() + self.rate_limit_reset_in
                return 403, {
                    "message": "API rate limit exceeded",
                    "_headers": {
                        "X-RateLimit-Remaining": "0",
                        "X-RateLimit-Reset": str(int(reset)),
                        "Retry-After": str(int(self.rate_limit_reset_in)),
                    },
                }
        return None

    def handle(self, path: str, params: dict[str, list[str]], authorized: bool) -> tuple[int, dict]:
        with self._lock:
            self.request_log.append(path)
        if not authorized:
            return 401, {"message": "Requires authentication"}
        injected = self._injected()
        if injected:
            return injected

        if path == "/search/repositories":
            return self._search(params)
        m = re.fullmatch(r"/repos/([^/]+)/([^/]+)/readme", path)
        if m:
            return self._readme(f"{m.group(1)}/{m.group(2)}")
        m = re.fullmatch(r"/repos/([^/]+)/([^/]+)", path)
        if m:
            return self._repo(f"{m.group(1)}/{m.group(2)}")
        return 404, {"message": "Not Found"}

    def _search(self, params: dict[str, list[str]]) -> tuple[int, dict]:
        q = params.get("q", [""])[0]
        page = int(params.get("page", ["1"])[0])
        per_page = min(int(params.get("per_page", ["30"])[0]), 100)
        phrases, include_forks, fields = _parse_query(q)

        hits = []
        for repo in self.repos:
            if repo.id in self.deleted_ids:
                continue
            if repo.fork and not include_forks:
                continue
            haystacks = []
            if "description" in fields:
                haystacks.append(repo.description.lower())
            if "readme" in fields and repo.readme:
                haystacks.append(repo.readme.lower())
            if any(p in h for p in phrases for h in haystacks):
                hits.append(repo)

        start = (page - 1) * per_page
        items = [r.search_item() for r in hits[start : start + per_page]]
        return 200, {"total_count": len(hits), "incomplete_results": False, "items": items}

    def _repo(self, full_name: str) -> tuple[int, dict]:
        repo = self.by_full_name.get(full_name)
        if repo is None or repo.id in self.deleted_ids or repo.id in self.vanished_ids:
            return 404, {"message": "Not Found"}
        return 200, repo.search_item()

    def _readme(self, full_name: str) -> tuple[int, dict]:
        repo = self.by_full_name.get(full_name)
        if repo is None or repo.id in self.deleted_ids or repo.id in self.vanished_ids:
            return 404, {"message": "Not Found"}
        if repo.readme is None:
            # shape-identical to a deleted repo; the client disambiguates
            # via GET /repos/{owner}/{repo}
            return 404, {"message": "Not Found"}
        content = base64.b64encode(repo.readme.encode("utf-8")).decode("ascii")
        return 200, {"name": "README.md", "encoding": "base64", "content": content}


class _Handler(BaseHTTPRequestHandler):
    forge: MockForge  # set by server factory

    def do_GET(self):  # noqa: N802 (http.server API)
        parsed = urlparse(self.path)
        params = parse_qs(parsed.query)
        authorized = bool(self.headers.get("Authorization"))
        status, body = self.forge.handle(parsed.path, params, authorized)
        headers = body.pop("_headers", {})
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        if status == 200:
            self.send_header("X-RateLimit-Remaining", "30")
            self.send_header("X-RateLimit-Reset", str(int(time.time() + 60)))
        for name, value in headers.items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # silence per-request stderr noise
        pass


@dataclass
class MockForgeServer:
    forge: MockForge
    server: ThreadingHTTPServer
    thread: threading.Thread = field(init=False)

    def __post_init__(self):
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)


def serve(forge: MockForge, port: int = 0) -> MockForgeServer:
    handler = type("BoundHandler", (_Handler,), {"forge": forge})
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    return MockForgeServer(forge=forge, server=server)


def main(argv: list[str] | None = None) -> int:
    from .forge import DEFAULT_PHRASES

    parser = argparse.ArgumentParser(description="Run a seeded mock forge server")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--size", type=int, default=250)
    parser.add_argument("--port", type=int, default=8030)
    args = parser.parse_args(argv)

    forge = MockForge(build_corpus(args.seed, args.size, list(DEFAULT_PHRASES)))
    running = serve(forge, port=args.port)
    print(f"mock forge with {args.size} repos on {running.base_url}")
    try:
        running.thread.join()
    except KeyboardInterrupt:
        running.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
