"""Subcommand behavior over the mock forge and mock provider."""

import json

import pytest

from edutriage.cli import main
from edutriage.models import MaliceLabel
from edutriage.store import CorpusStore

from .conftest import FROZEN_EPOCH, make_record, make_run


@pytest.fixture()
def forge_url(mock_server, monkeypatch):
    monkeypatch.setenv("FORGE_BASE_URL", mock_server.base_url)
    return mock_server.base_url


def run_cli(*args: str) -> int:
    return main(list(args))


def pipeline_args(corpus_dir, *extra: str) -> list[str]:
    return [*extra, "--corpus-dir", str(corpus_dir), "--provider", "mock",
            "--seed", "7", "--clock-epoch", str(FROZEN_EPOCH)]


def test_full_pipeline_over_mock_forge(forge_url, tmp_path, capsys):
    corpus = tmp_path / "corpus"

    assert run_cli("collect", *pipeline_args(corpus)) == 0
    store = CorpusStore(corpus)
    assert store.load_records(), "collection stored records"

    assert run_cli("filter", *pipeline_args(corpus)) == 0
    out = capsys.readouterr().out
    assert "collected:" in out and "complete:" in out

    assert run_cli("annotate", *pipeline_args(corpus), "--k", "2") == 0
    annotated = store.annotated_repo_ids()
    assert annotated
    assert annotated == {r.repo_id for r in store.load_stage("complete")}

    assert run_cli("classify", *pipeline_args(corpus)) == 0
    flagged = store.flagged_repo_ids()
    assert {f.repo_id for f in store.load_families()} == set(flagged)

    assert run_cli("report", *pipeline_args(corpus)) == 0
    reports_dir = corpus / "reports"
    for name in ("trend.json", "confusion.json", "families.json",
                 "trend.png", "confusion.png", "families.png",
                 "trend_all.csv", "confusion.csv", "families.csv"):
        assert (reports_dir / name).exists(), name

    assert run_cli("sample", *pipeline_args(corpus), "--sample-size", "5") == 0
    assert len(store.load_sample()["repo_ids"]) == 5


def test_annotate_twice_processes_zero_new(forge_url, tmp_path, capsys):
    corpus = tmp_path / "corpus"
    run_cli("collect", *pipeline_args(corpus))
    run_cli("annotate", *pipeline_args(corpus), "--k", "2")
    capsys.readouterr()
    assert run_cli("annotate", *pipeline_args(corpus), "--k", "2") == 0
    assert "annotated 0 repos" in capsys.readouterr().out


def test_report_ratio_file_on_10_pre_24_post_fixture(tmp_path):
    corpus = tmp_path / "corpus"
    store = CorpusStore(corpus)
    years = [2015] * 10 + [2020] * 8 + [2021] * 8 + [2023] * 8  # 10 pre, 24 post
    for i, year in enumerate(years):
        store.upsert_record(make_record(f"r{i:02d}", year=year))

    assert run_cli("report", *pipeline_args(corpus), "--split-year", "2020") == 0
    trend = json.loads((corpus / "reports" / "trend.json").read_text())
    assert trend["populations"]["all"]["ratio"] == 2.4


def test_review_records_verdicts_from_stdin(tmp_path, monkeypatch, capsys):
    corpus = tmp_path / "corpus"
    store = CorpusStore(corpus)
    for i in range(3):
        rid = f"r{i}"
        store.upsert_record(make_record(rid, description="d", readme="m"))
        store.add_annotation(make_run(rid, 1, MaliceLabel.MALICIOUS))
        store.add_annotation(make_run(rid, 2, MaliceLabel.MALICIOUS))
    assert run_cli("sample", *pipeline_args(corpus), "--sample-size", "3") == 0

    answers = iter(["1", "1", "2"])
    monkeypatch.setattr("builtins.input", lambda _prompt: next(answers))
    assert run_cli("review", *pipeline_args(corpus), "--analyst", "alice") == 0
    verdicts = store.load_verdicts()
    assert len(verdicts) == 3
    assert sum(v.verdict == "confirmed_malicious" for v in verdicts) == 2
    assert "precision so far: 0.6667" in capsys.readouterr().out


def test_sample_without_flagged_repos_fails_cleanly(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    CorpusStore(corpus).upsert_record(make_record("1"))
    assert run_cli("sample", *pipeline_args(corpus)) == 1
    assert "cannot sample" in capsys.readouterr().err


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as excinfo:
        run_cli("frobnicate")
    assert excinfo.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_config_file_feeds_settings_and_flags_override(tmp_path, monkeypatch):
    corpus_a = tmp_path / "from-config"
    corpus_b = tmp_path / "from-flag"
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"corpus_dir": str(corpus_a), "split_year": 2019}))

    store = CorpusStore(corpus_a)
    store.upsert_record(make_record("1"))
    assert run_cli("filter", "--config", str(config)) == 0
    assert (corpus_a / "manifest.json").exists()

    CorpusStore(corpus_b).upsert_record(make_record("2"))
    assert run_cli("filter", "--config", str(config), "--corpus-dir", str(corpus_b)) == 0
    assert (corpus_b / "manifest.json").exists()


def test_unknown_config_key_is_a_config_error(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"not_a_setting": 1}))
    assert run_cli("filter", "--config", str(config)) == 2
    assert "config error" in capsys.readouterr().err


def test_collect_without_token_is_a_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("FORGE_TOKEN", raising=False)
    assert run_cli("collect", *pipeline_args(tmp_path / "c")) == 2
    assert "config error" in capsys.readouterr().err


def test_budget_cap_aborts_annotate(forge_url, tmp_path):
    corpus = tmp_path / "corpus"
    run_cli("collect", *pipeline_args(corpus))
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"max_provider_calls": 3}))
    code = run_cli("annotate", *pipeline_args(corpus), "--config", str(config))
    assert code == 1
    # partial progress persisted; a later uncapped run completes the stage
    assert run_cli("annotate", *pipeline_args(corpus)) == 0
