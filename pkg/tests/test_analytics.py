"""Trend, confusion matrix, family histogram, and precision computations."""

import random
from collections import Counter
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edutriage.analytics import (
    confusion_matrix,
    family_histogram,
    precision,
    trend_ratio,
    yearly_trend,
)
from edutriage.errors import EmptyInputError, MismatchedPopulationsError
from edutriage.models import FamilyLabel, MaliceLabel, ValidationVerdict

from .conftest import FROZEN_NOW, make_record, make_run


def records_for_years(years):
    return [make_record(f"r{i}", year=year) for i, year in enumerate(years)]


# --- yearly trend ---

def test_empty_population_yields_undefined_range():
    report = yearly_trend([], "all")
    assert report.counts_by_year == {}
    assert report.first_year is None and report.last_year is None


def test_gap_years_filled_with_zero():
    report = yearly_trend(records_for_years([2019, 2021, 2021]), "all")
    assert report.counts_by_year == {2019: 1, 2020: 0, 2021: 2}
    assert (report.first_year, report.last_year) == (2019, 2021)


def test_trend_matches_hand_count_on_34_record_fixture():
    rng = random.Random(11)
    years = [rng.randint(2008, 2023) for _ in range(34)]
    report = yearly_trend(records_for_years(years), "all")

    # oracle: independent recount
    expected = Counter(years)
    for year in range(min(years), max(years) + 1):
        assert report.counts_by_year[year] == expected.get(year, 0)
    assert sum(report.counts_by_year.values()) == 34


# --- trend ratio ---

def test_ratio_on_10_pre_24_post_fixture():
    years = [2015] * 4 + [2018] * 6 + [2020] * 10 + [2022] * 8 + [2023] * 6
    report = yearly_trend(records_for_years(years), "all")
    assert trend_ratio(report, 2020) == 2.4


def test_all_mass_before_split_is_zero():
    report = yearly_trend(records_for_years([2010, 2012]), "all")
    assert trend_ratio(report, 2020) == 0.0


def test_empty_pre_split_raises_division_error():
    report = yearly_trend(records_for_years([2021, 2022]), "all")
    with pytest.raises(ZeroDivisionError):
        trend_ratio(report, 2020)


def test_ratio_invariant_under_empty_years():
    base_years = [2018, 2018, 2021, 2022, 2023]
    wide_years = base_years + [2008]  # widens the range, adds pre-split mass
    base = yearly_trend(records_for_years(base_years), "all")
    # adding gap years (zero count) must not move the ratio
    padded = yearly_trend(records_for_years(base_years + [2015]), "all")
    padded.counts_by_year[2015] -= 1  # turn the padding record into an empty year
    assert trend_ratio(base, 2020) == trend_ratio(padded, 2020)
    assert trend_ratio(base, 2020) != trend_ratio(yearly_trend(records_for_years(wide_years), "all"), 2020)


# --- confusion matrix ---

def runs_for(labels, round_no):
    return [make_run(f"r{i}", round_no, label) for i, label in enumerate(labels)]


def test_identical_rounds_give_identity_pattern():
    labels = [MaliceLabel.MALICIOUS, MaliceLabel.BENIGN, MaliceLabel.GRAY_AREA,
              MaliceLabel.MALICIOUS, MaliceLabel.BENIGN]
    matrix = confusion_matrix(runs_for(labels, 1), runs_for(labels, 2))
    assert matrix.labels == ["benign", "malicious", "gray_area"]
    for i, row in enumerate(matrix.normalized):
        expected = [1.0 if i == j else 0.0 for j in range(3)]
        assert row == expected
    assert matrix.zero_rows == []


def test_hand_tabulated_three_repo_fixture():
    round1 = runs_for([MaliceLabel.MALICIOUS, MaliceLabel.MALICIOUS, MaliceLabel.BENIGN], 1)
    round2 = runs_for([MaliceLabel.MALICIOUS, MaliceLabel.GRAY_AREA, MaliceLabel.BENIGN], 2)
    matrix = confusion_matrix(round1, round2)
    by = {label: i for i, label in enumerate(matrix.labels)}

    m, b, g = by["malicious"], by["benign"], by["gray_area"]
    assert matrix.counts[m][m] == 1 and matrix.counts[m][g] == 1
    assert matrix.counts[b][b] == 1
    assert matrix.normalized[m] == pytest.approx([0.0, 0.5, 0.5], abs=1e-9)
    assert matrix.normalized[b] == pytest.approx([1.0, 0.0, 0.0], abs=1e-9)
    assert matrix.zero_rows == ["gray_area"]


def test_disjoint_repo_sets_rejected():
    round1 = [make_run("a", 1, MaliceLabel.BENIGN)]
    round2 = [make_run("b", 2, MaliceLabel.BENIGN)]
    with pytest.raises(MismatchedPopulationsError) as excinfo:
        confusion_matrix(round1, round2)
    assert excinfo.value.difference == {"a", "b"}


def test_unparseable_label_appears_only_when_present():
    clean = confusion_matrix(runs_for([MaliceLabel.BENIGN], 1), runs_for([MaliceLabel.BENIGN], 2))
    assert clean.labels == ["benign", "malicious", "gray_area"]
    dirty = confusion_matrix(
        runs_for([MaliceLabel.UNPARSEABLE], 1), runs_for([MaliceLabel.BENIGN], 2)
    )
    assert dirty.labels == ["benign", "malicious", "gray_area", "unparseable"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(list(MaliceLabel)), st.sampled_from(list(MaliceLabel))),
                min_size=1, max_size=40))
def test_nonzero_rows_sum_to_one_and_transpose_flips(pairs):
    round1 = runs_for([a for a, _ in pairs], 1)
    round2 = runs_for([b for _, b in pairs], 2)
    matrix = confusion_matrix(round1, round2)
    for label, row in zip(matrix.labels, matrix.normalized):
        if label in matrix.zero_rows:
            assert all(v == 0.0 for v in row)
        else:
            assert abs(sum(row) - 1.0) <= 1e-9
    flipped = confusion_matrix(round2, round1)
    n = len(matrix.labels)
    assert all(
        matrix.counts[i][j] == flipped.counts[j][i] for i in range(n) for j in range(n)
    )


# --- family histogram ---

def make_family_labels(spec):
    labels = []
    for family, count in spec.items():
        for i in range(count):
            labels.append(FamilyLabel(f"{family}{i}", family, family))
    return labels


def test_histogram_counts_and_orders():
    hist = family_histogram(make_family_labels({"keylogger": 3, "ransomware": 1}), top_n=10)
    assert hist.entries == [("keylogger", 3), ("ransomware", 1)]


def test_histogram_tie_broken_by_name():
    hist = family_histogram(make_family_labels({"worm": 2, "botnet": 2}), top_n=10)
    assert hist.entries == [("botnet", 2), ("worm", 2)]


def test_histogram_truncates_to_top_n():
    spec = {f"fam{i:02d}": i + 1 for i in range(15)}
    hist = family_histogram(make_family_labels(spec), top_n=10)
    assert len(hist.entries) == 10
    assert hist.entries[0] == ("fam14", 15)


def test_keylogger_modal_fixture_heads_histogram():
    spec = {"keylogger": 9, "ransomware": 4, "ddos": 4, "trojan": 1}
    labels = make_family_labels(spec)
    # oracle: recount
    recount = Counter(l.family for l in labels)
    hist = family_histogram(labels, top_n=10)
    assert hist.entries[0] == ("keylogger", recount["keylogger"])


# --- precision ---

def make_verdicts(confirmed, rejected, unsure=0):
    verdicts = []
    idx = 0
    for verdict, count in (("confirmed_malicious", confirmed), ("rejected", rejected), ("unsure", unsure)):
        for _ in range(count):
            verdicts.append(ValidationVerdict(f"r{idx}", "alice", verdict, FROZEN_NOW))
            idx += 1
    return verdicts


def test_85_of_100_is_085():
    assert precision(make_verdicts(85, 15)) == 0.85


def test_all_confirmed_is_one():
    assert precision(make_verdicts(4, 0)) == 1.0


def test_two_of_three_matches_hand_arithmetic():
    assert precision(make_verdicts(2, 1)) == pytest.approx(2 / 3, abs=1e-9)


def test_unsure_excluded_from_both_sides():
    assert precision(make_verdicts(85, 15, unsure=10)) == 0.85


def test_only_unsure_raises():
    with pytest.raises(EmptyInputError):
        precision(make_verdicts(0, 0, unsure=3))
    with pytest.raises(EmptyInputError):
        precision([])


def test_latest_verdict_per_repo_wins():
    early = ValidationVerdict("r0", "alice", "rejected", FROZEN_NOW)
    late = ValidationVerdict("r0", "bob", "confirmed_malicious",
                             datetime(2024, 1, 2, tzinfo=timezone.utc))
    assert precision([late, early]) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.permutations(make_verdicts(5, 3, unsure=2)))
def test_precision_is_permutation_invariant(verdicts):
    assert precision(list(verdicts)) == precision(make_verdicts(5, 3, unsure=2))
