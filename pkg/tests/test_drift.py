from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from spamdrift.corpus import Label, Message, WeekBucket, iter_weeks
from spamdrift.drift import (
    CHI2_CRITICAL_P01, Chi2Method, CountMode, DriftError, burst_rows,
    chi2_bursts, group_spam_by_week, matrix_from_rows, prior_series, render_burst_matrix,
    series_range, smooth_priors, term_week_counts,
)

from oracles import burst_oracle

WEEKS = list(iter_weeks((2002, 1), (2002, 52)))


def series(*pairs):
    return prior_series([WeekBucket(2002, i + 1, s, l, ()) for i, (s, l) in enumerate(pairs)])


def test_prior_examples():
    s = series((146, 12), (0, 7), (0, 0))
    p = [e.p_spam for e in s]
    assert p[0] == pytest.approx(146 / 158) and round(p[0], 4) == 0.9241
    assert p[1] == 0.0
    assert p[2] is None


def test_series_range():
    s = prior_series([WeekBucket(2002, i + 1, round(p * 100), 100 - round(p * 100), ())
                      for i, p in enumerate([0.32, 0.5, 0.9])])
    assert series_range(s) == pytest.approx((0.32, 0.9))
    assert series_range(series((3, 1))) == (0.75, 0.75)
    assert series_range(series((1, 1), (2, 2), (0, 0))) == (0.5, 0.5)
    with pytest.raises(DriftError):
        series_range(series((0, 0), (0, 0)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 500)), min_size=1, max_size=30))
def test_prior_consistency(pairs):
    for e in series(*pairs):
        if e.total:
            assert 0.0 <= e.p_spam <= 1.0
            assert abs(e.p_spam * e.total - e.spam_count) <= 1e-12 * max(e.spam_count, 1)
        else:
            assert e.p_spam is None


def test_smoothing_hook_defaults_to_identity():
    s = series((1, 1), (0, 0), (3, 1))
    assert smooth_priors(s) is s
    smoothed = [e.p_spam for e in smooth_priors(s, 0.5)]
    assert smoothed == [0.5, None, 0.625]


def one_row(counts, vocabulary=("t",)):
    weekly = [(w, [["t"]] * c) for w, c in zip(WEEKS, counts)]
    return chi2_bursts(term_week_counts(weekly, list(vocabulary)))


def test_uniform_term():
    m = one_row([1] * 52)
    assert m.observed[0].tolist() == [1] * 52
    assert m.expected[0] == 1.0
    assert not m.burst.any()


def test_single_week_spike_known_answer():
    counts = [0] * 52
    counts[17] = 10
    m = one_row(counts)
    assert m.expected[0] == pytest.approx(10 / 52)
    assert round(m.expected[0], 4) == 0.1923
    assert m.chi2[0, 17] == pytest.approx((10 - 10 / 52) ** 2 / (10 / 52))
    assert round(m.chi2[0, 17], 1) == 500.2
    assert m.burst_cells() == [("t", (2002, 18))]


def test_four_never_bursts():
    counts = [0] * 52
    counts[5] = 4
    m = one_row(counts)
    assert m.chi2[0, 5] > CHI2_CRITICAL_P01
    assert not m.burst.any()


def test_observed_equal_expected():
    m = one_row([5] * 10)
    assert (m.chi2 == 0).all() and not m.burst.any()


def test_critical_value_matches_distribution():
    assert CHI2_CRITICAL_P01 == round(stats.chi2.ppf(0.99, 1), 3)


def test_document_vs_token_mode():
    weekly = [(WEEKS[0], [["a", "a", "a"], ["a", "b"]]), (WEEKS[1], [["b"]])]
    doc = term_week_counts(weekly, ["a", "b"])
    tok = term_week_counts(weekly, ["a", "b"], mode=CountMode.TOKEN)
    assert doc.observed.tolist() == [[2, 0], [1, 1]]
    assert tok.observed.tolist() == [[4, 0], [1, 1]]


def test_vocabulary_threshold():
    weekly = [(WEEKS[0], [["common", "rare"]] * 4 + [["common"]])]
    assert term_week_counts(weekly).terms == ("common",)
    with pytest.raises(DriftError):
        term_week_counts([(WEEKS[0], [["rare"]])])
    with pytest.raises(DriftError):
        term_week_counts([(WEEKS[0], [])])


def test_zero_expected_term_is_excluded():
    weekly = [(w, [["a"]] * 6) for w in WEEKS[:3]]
    m = chi2_bursts(term_week_counts(weekly, ["a", "ghost"]))
    assert m.terms == ("a",)
    assert m.excluded == ("ghost",)


def test_contingency_method_matches_scipy():
    rng = np.random.default_rng(7)
    totals = rng.integers(20, 60, size=8)
    weekly = []
    for w, n in zip(WEEKS, totals):
        msgs = [["x"] if rng.random() < 0.2 else ["y"] for _ in range(n)]
        weekly.append((w, msgs))
    weekly[3] = (WEEKS[3], [["x"]] * 40 + [["y"]] * 5)
    m = chi2_bursts(term_week_counts(weekly, ["x"]), method=Chi2Method.CONTINGENCY)
    n = m.week_totals.sum()
    for j in range(len(WEEKS[:8])):
        a = m.observed[0, j]
        b = m.week_totals[j] - a
        c = m.observed[0].sum() - a
        d = n - m.week_totals[j] - c
        ref = stats.chi2_contingency([[a, b], [c, d]], correction=False)[0]
        assert m.chi2[0, j] == pytest.approx(ref, rel=1e-9)
    assert (WEEKS[3] in [w for _, w in m.burst_cells()])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(2, 52))
def test_burst_monotone_in_observed(o, n_weeks):
    # with E held fixed, raising one count never removes a burst
    base = [0] * n_weeks
    base[0] = o
    base[1] = o + 1
    m = one_row(base + [0] * (52 - n_weeks))
    if m.burst[0, 0]:
        assert m.burst[0, 1]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 12), min_size=3, max_size=12), st.integers(2, 5))
def test_scale_property(counts, k):
    if not any(counts):
        return
    n = len(counts)
    base = one_row(counts + [0] * (52 - n))
    scaled = one_row([c * k for c in counts] + [0] * (52 - n))
    assert scaled.expected[0] == pytest.approx(k * base.expected[0])
    e = base.expected[0]
    for j, c in enumerate(counts):
        # chi2 scales linearly; flags follow the fixed thresholds
        assert scaled.chi2[0, j] == pytest.approx(k * base.chi2[0, j])
        expect = c * k > 4 and c * k > k * e and k * base.chi2[0, j] >= CHI2_CRITICAL_P01 * (1 - 1e-12)
        assert bool(scaled.burst[0, j]) == expect


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=2, max_size=52))
def test_chi2_nonnegative_and_zero_iff_equal(counts):
    if not any(counts):
        return
    m = one_row(counts + [0] * (52 - len(counts)))
    assert (m.chi2 >= 0).all()
    assert ((m.chi2 == 0) == (m.observed == m.expected[:, None])).all()


vocab = ["a", "b", "c", "d", "e"]
message = st.lists(st.sampled_from(vocab), max_size=4)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(message, max_size=14), min_size=1, max_size=10),
       st.lists(st.sampled_from(vocab), min_size=1, max_size=5, unique=True))
def test_brute_force_equivalence(weeks_msgs, terms):
    if not any(weeks_msgs):
        return
    weekly = list(zip(WEEKS, weeks_msgs))
    m = chi2_bursts(term_week_counts(weekly, terms))
    ref = burst_oracle(weeks_msgs, terms)
    for term in terms:
        row = ref[term]
        if row[0][1] == 0:
            assert term in m.excluded
            continue
        i = m.row(term)
        for j, (o, e, chi2, burst) in enumerate(row):
            assert m.observed[i, j] == o
            assert m.expected[i] == pytest.approx(float(e), rel=1e-12)
            assert m.chi2[i, j] == pytest.approx(float(chi2), rel=1e-9, abs=1e-12)
            assert bool(m.burst[i, j]) == burst


def test_render_rows_and_svg():
    weekly = [(w, [["x", "y"]] * c) for w, c in zip(WEEKS[:3], [0, 1, 0])]
    m = chi2_bursts(term_week_counts(weekly, ["x", "y"]))
    rows, svg = render_burst_matrix(m)
    assert len(rows) == 6
    assert svg.count('class="burst"') == 0
    counts = [0] * 52
    counts[30] = 12
    rows, svg = render_burst_matrix(one_row(counts))
    assert svg.count('class="burst"') == 1
    assert sum(r["burst"] for r in rows) == 1


def test_rows_round_trip():
    counts = [0] * 52
    counts[9] = 7
    m = one_row(counts)
    back = matrix_from_rows(burst_rows(m))
    assert back.terms == m.terms and back.weeks == m.weeks
    assert (back.observed == m.observed).all() and (back.burst == m.burst).all()
    with pytest.raises(DriftError):
        burst_rows(term_week_counts([(WEEKS[0], [["t"]])], ["t"]))


def test_group_spam_by_week_fills_gaps_and_ignores_legit():
    utc = timezone.utc
    t0 = datetime(2002, 1, 2, tzinfo=utc)
    msgs = [Message("a", t0, (("Subject", "V.iagra"),), "free", Label.SPAM),
            Message("b", t0, (), "legit words", Label.LEGIT),
            Message("c", t0 + timedelta(days=14), (), "more", Label.SPAM)]
    grouped = group_spam_by_week(msgs)
    assert [w for w, _ in grouped] == [(2002, 1), (2002, 2), (2002, 3)]
    assert grouped[0][1] == [["viagra", "free"]]
    assert grouped[1][1] == []
