"""Command-line entry point wiring the pipeline stages together.

    collect -> filter -> annotate -> classify -> report -> sample -> review/serve

Every stage is resumable: repo_ids that already carry their stage output are
skipped, so interrupting and re-running converges to the same final state.
Exit codes: 0 success, 1 partial failure (per-item errors logged), 2
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

from . import api, collector, reports, sampling
from .annotate import run_annotation_stage
from .config import Settings, load_settings
from .errors import (
    AuthError,
    EdutriageError,
    EmptyPopulationError,
    NotInSampleError,
)
from .families import FamilyTaxonomy, run_family_stage
from .forge import ForgeClient, SearchQuerySet
from .models import ValidationVerdict, VERDICT_VALUES
from .providers import make_provider
from .ratelimit import RateBudget, RateGate
from .store import CorpusStore

logger = logging.getLogger(__name__)

_SETTING_FLAGS = (
    ("--corpus-dir", "corpus_dir", str),
    ("--provider", "provider", str),
    ("--k", "k", int),
    ("--seed", "seed", int),
    ("--taxonomy", "taxonomy", str),
    ("--split-year", "split_year", int),
    ("--top-n", "top_n", int),
    ("--sample-size", "sample_size", int),
    ("--concurrency", "concurrency", int),
    ("--clock-epoch", "clock_epoch", float),
    ("--listen", "listen", str),
)


def _common_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file; flags and env override it")
    for flag, dest, typ in _SETTING_FLAGS:
        kwargs: dict = {"dest": dest, "type": typ}
        if flag == "--provider":
            kwargs["choices"] = ["live", "mock"]
        parent.add_argument(flag, **kwargs)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _common_parser()
    parser = argparse.ArgumentParser(prog="edutriage", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("collect", parents=[parent], help="search the forge and store verified records")
    sub.add_parser("filter", parents=[parent], help="report per-stage corpus counts")
    sub.add_parser("annotate", parents=[parent], help="run k-query consensus over complete records")
    sub.add_parser("classify", parents=[parent], help="assign malware families to flagged repos")
    sub.add_parser("report", parents=[parent], help="emit analytics reports, CSVs, and figures")
    sub.add_parser("sample", parents=[parent], help="draw the seeded review sample")
    review = sub.add_parser("review", parents=[parent], help="record verdicts from the terminal")
    review.add_argument("--analyst", default=None, help="analyst id recorded on verdicts")
    sub.add_parser("serve", parents=[parent], help="start the review API")
    return parser


def _settings(args: argparse.Namespace) -> Settings:
    names = {f.name for f in fields(Settings)}
    flag_values = {name: getattr(args, name, None) for name in names}
    return load_settings(args.config, flag_values)


def _store(settings: Settings) -> CorpusStore:
    return CorpusStore(settings.corpus_dir, k=settings.k)


def _taxonomy(settings: Settings) -> FamilyTaxonomy:
    if settings.taxonomy:
        return FamilyTaxonomy.from_file(settings.taxonomy)
    return FamilyTaxonomy()


def cmd_collect(settings: Settings) -> int:
    gate = RateGate(RateBudget(min_interval=settings.min_interval))
    client = ForgeClient(
        base_url=settings.forge_base_url,
        gate=gate,
        per_page=settings.per_page,
        readme_cap=settings.readme_cap,
    )
    store = _store(settings)
    stats = collector.collect(
        client, store, SearchQuerySet(), clock=settings.clock(), concurrency=settings.concurrency
    )
    store.write_manifest()
    print(
        f"collected {stats.stored} records ({stats.stubs} stubs, "
        f"{stats.skipped_existing} already stored, {stats.unverified} unverified, {stats.stale} stale)"
    )
    return 1 if stats.errors else 0


def cmd_filter(settings: Settings) -> int:
    manifest = _store(settings).write_manifest()
    for stage, count in manifest.counts.items():
        print(f"{stage}: {count}")
    return 0


def cmd_annotate(settings: Settings) -> int:
    store = _store(settings)
    provider = make_provider(
        settings.provider, model=settings.model, seed=settings.seed, base_url=settings.llm_base_url
    )
    stats = run_annotation_stage(
        store,
        provider,
        k=settings.k,
        concurrency=settings.concurrency,
        clock=settings.clock(),
        readme_budget=settings.prompt_budget,
        max_calls=settings.max_provider_calls,
    )
    store.write_manifest()
    print(f"annotated {stats.processed} repos ({stats.skipped} skipped, "
          f"{stats.flagged} newly flagged, {len(stats.pending)} pending)")
    if stats.pending:
        _log_item_errors(store, "annotate", stats.pending)
        return 1
    return 0


def cmd_classify(settings: Settings) -> int:
    store = _store(settings)
    provider = make_provider(
        settings.provider, model=settings.model, seed=settings.seed, base_url=settings.llm_base_url
    )
    stats = run_family_stage(
        store,
        _taxonomy(settings),
        provider,
        concurrency=settings.concurrency,
        readme_budget=settings.prompt_budget,
    )
    store.write_manifest()
    print(f"classified {stats.processed} repos ({stats.skipped} skipped, {len(stats.pending)} pending)")
    if stats.pending:
        _log_item_errors(store, "classify", stats.pending)
        return 1
    return 0


def cmd_report(settings: Settings) -> int:
    store = _store(settings)
    written = reports.write_reports(store, split_year=settings.split_year, top_n=settings.top_n)
    if not written:
        print("nothing to report yet: collect (and annotate/classify) first", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    trend_path = store.corpus_dir / "reports" / "trend.json"
    if trend_path.exists():
        trend = json.loads(trend_path.read_text(encoding="utf-8"))
        for pop, payload in trend["populations"].items():
            if payload["ratio"] is not None:
                print(f"{pop}: {payload['ratio']:.4f}x as many repos created in/after "
                      f"{trend['split_year']} as before")
    return 0


def cmd_sample(settings: Settings) -> int:
    store = _store(settings)
    try:
        sample = sampling.create_review_queue(
            store, settings.sample_size, settings.seed, clock=settings.clock()
        )
    except EmptyPopulationError as exc:
        print(f"cannot sample: {exc}", file=sys.stderr)
        return 1
    store.write_manifest()
    print(f"sampled {len(sample)} flagged repos for review (seed {settings.seed})")
    return 0


def cmd_review(settings: Settings, analyst: str | None) -> int:
    import os

    store = _store(settings)
    analyst = analyst or os.environ.get("USER") or "analyst"
    sample = store.load_sample()
    if sample is None:
        print("no active sample: run `edutriage sample` first", file=sys.stderr)
        return 1
    records = {r.repo_id: r for r in store.load_records()}
    families = {f.repo_id: f.family for f in store.load_families()}
    ruled = {v.repo_id for v in store.load_verdicts() if v.analyst == analyst}
    clock = settings.clock()

    keymap = dict(zip("123", VERDICT_VALUES))
    pending = [rid for rid in sample["repo_ids"] if rid not in ruled]
    print(f"{len(pending)} of {len(sample['repo_ids'])} sampled repos awaiting verdicts from {analyst}")
    for repo_id in pending:
        record = records.get(repo_id)
        if record is None:
            continue
        print("=" * 72)
        print(f"{record.full_name}  (family: {families.get(repo_id, 'unclassified')})")
        print(f"description: {record.description[:300]}")
        print(f"readme: {record.readme[:600]}")
        try:
            answer = input("[1] confirm malicious  [2] reject  [3] unsure  [s]kip  [q]uit > ").strip()
        except EOFError:
            break
        if answer == "q":
            break
        if answer not in keymap:
            continue
        verdict = ValidationVerdict(repo_id=repo_id, analyst=analyst, verdict=keymap[answer], noted_at=clock())
        outcome = sampling.record_verdict(store, verdict)
        print(f"{outcome}: {repo_id} -> {verdict.verdict}")

    body = None
    try:
        body = reports.build_precision_report(store)
    except EdutriageError:
        pass
    if body:
        print(f"precision so far: {body['precision']:.4f} "
              f"({body['confirmed']} confirmed / {body['decisive']} decisive)")
    return 0


def cmd_serve(settings: Settings) -> int:
    import uvicorn

    host, _, port = settings.listen.rpartition(":")
    app = api.create_app(
        settings.corpus_dir,
        k=settings.k,
        split_year=settings.split_year,
        top_n=settings.top_n,
        clock=settings.clock(),
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def _log_item_errors(store: CorpusStore, stage: str, repo_ids: list[str]) -> None:
    path = store.corpus_dir / "errors.jsonl"
    with open(path, "a", encoding="utf-8") as fh:
        for repo_id in repo_ids:
            fh.write(json.dumps({"stage": stage, "repo_id": repo_id, "error": "provider_failed"},
                                sort_keys=True) + "\n")
    logger.warning("%s: %d items pending; details in %s", stage, len(repo_ids), path)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "collect":
            return cmd_collect(settings)
        if args.command == "filter":
            return cmd_filter(settings)
        if args.command == "annotate":
            return cmd_annotate(settings)
        if args.command == "classify":
            return cmd_classify(settings)
        if args.command == "report":
            return cmd_report(settings)
        if args.command == "sample":
            return cmd_sample(settings)
        if args.command == "review":
            return cmd_review(settings, args.analyst)
        if args.command == "serve":
            return cmd_serve(settings)
    except (AuthError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NotInSampleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EdutriageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
