"""Weekly class priors and chi-square term-burst detection."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .corpus import Label, Message, WeekBucket, iter_weeks
from .normalize import DEFAULT_CONFIG, NormalizeConfig, message_tokens

CHI2_CRITICAL_P01 = 6.635  # chi-square, 1 df, p < 0.01
MIN_BURST_COUNT = 4  # a burst needs strictly more occurrences than this
MIN_TERM_TOTAL = 5

Week = tuple[int, int]


class DriftError(ValueError):
    pass


class CountMode(enum.Enum):
    DOCUMENT = "document"
    TOKEN = "token"


class Chi2Method(enum.Enum):
    ONE_CELL = "one-cell"
    CONTINGENCY = "2x2"


@dataclass(frozen=True)
class WeekPrior:
    year: int
    week_index: int
    spam_count: int
    legit_count: int
    p_spam: float | None  # None: no mail that week

    @property
    def total(self) -> int:
        return self.spam_count + self.legit_count


@dataclass(frozen=True)
class WeekSeries:
    entries: tuple[WeekPrior, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def defined(self) -> list[float]:
        return [e.p_spam for e in self.entries if e.p_spam is not None]


def prior_series(buckets: Iterable[WeekBucket]) -> WeekSeries:
    entries = []
    for b in buckets:
        total = b.spam_count + b.legit_count
        p = b.spam_count / total if total else None
        entries.append(WeekPrior(b.year, b.week_index, b.spam_count, b.legit_count, p))
    return WeekSeries(tuple(entries))


def smooth_priors(series: WeekSeries, decay: float | None = None) -> WeekSeries:
    """Exponentially decayed average of the weekly priors.

    ``decay`` is the weight kept by the running average each week; ``None``
    returns the series unchanged. Undefined weeks stay undefined and do not
    update the average.
    """
    if decay is None:
        return series
    if not 0.0 <= decay < 1.0:
        raise DriftError("decay must lie in [0, 1)")
    avg = None
    out = []
    for e in series.entries:
        if e.p_spam is None:
            out.append(e)
            continue
        avg = e.p_spam if avg is None else decay * avg + (1.0 - decay) * e.p_spam
        out.append(replace(e, p_spam=avg))
    return WeekSeries(tuple(out))


def series_range(s: WeekSeries) -> tuple[float, float]:
    values = s.defined()
    if not values:
        raise DriftError("prior series has no defined weeks")
    return min(values), max(values)


@dataclass(frozen=True)
class TermWeekMatrix:
    """Per-term weekly counts; ``chi2`` and ``burst`` stay ``None`` until scored."""

    terms: tuple[str, ...]
    weeks: tuple[Week, ...]
    observed: np.ndarray
    expected: np.ndarray
    week_totals: np.ndarray  # messages per week, used by the 2x2 test
    chi2: np.ndarray | None = None
    burst: np.ndarray | None = None
    excluded: tuple[str, ...] = field(default=())

    def row(self, term: str) -> int:
        return self.terms.index(term)

    def burst_cells(self) -> list[tuple[str, Week]]:
        if self.burst is None:
            return []
        ts, ws = np.nonzero(self.burst)
        return [(self.terms[t], self.weeks[w]) for t, w in zip(ts, ws)]


def group_spam_by_week(messages: Iterable[Message],
                       config: NormalizeConfig = DEFAULT_CONFIG,
                       weeks: Sequence[Week] | None = None) -> list[tuple[Week, list[list[str]]]]:
    """Normalize and tokenize spam messages, grouped into gap-free ISO weeks."""
    grouped: dict[Week, list[list[str]]] = {}
    for m in messages:
        if m.label is Label.SPAM:
            grouped.setdefault(m.iso_week, []).append(message_tokens(m, config))
    if weeks is None:
        if not grouped:
            return []
        weeks = iter_weeks(min(grouped), max(grouped))
    return [(w, grouped.get(w, [])) for w in weeks]


def term_week_counts(weekly: Sequence[tuple[Week, Sequence[Sequence[str]]]],
                     vocabulary: Sequence[str] | None = None,
                     mode: CountMode = CountMode.DOCUMENT,
                     min_total: int = MIN_TERM_TOTAL) -> TermWeekMatrix:
    """Count term occurrences per week.

    ``weekly`` holds one ``(week, messages)`` pair per week, each message a
    token list. In document mode a message counts once per term however
    often it repeats the term.
    """
    if not weekly or not any(msgs for _, msgs in weekly):
        raise DriftError("empty corpus")
    weeks = tuple(w for w, _ in weekly)
    per_week: list[Counter] = []
    for _, msgs in weekly:
        c: Counter = Counter()
        for tokens in msgs:
            c.update(set(tokens) if mode is CountMode.DOCUMENT else tokens)
        per_week.append(c)

    if vocabulary is None:
        totals: Counter = Counter()
        for c in per_week:
            totals.update(c)
        terms = tuple(sorted(t for t, n in totals.items() if n >= min_total))
    else:
        terms = tuple(dict.fromkeys(vocabulary))
    if not terms:
        raise DriftError("vocabulary is empty")

    observed = np.array([[c.get(t, 0) for c in per_week] for t in terms], dtype=np.int64)
    expected = observed.sum(axis=1) / len(weeks)
    week_totals = np.array([len(msgs) for _, msgs in weekly], dtype=np.int64)
    return TermWeekMatrix(terms, weeks, observed, expected, week_totals)


def _contingency_chi2(observed: np.ndarray, week_totals: np.ndarray) -> np.ndarray:
    # per cell: [term & this week, other docs this week; term elsewhere, other docs elsewhere]
    n = float(week_totals.sum())
    a = observed.astype(float)
    b = week_totals[None, :] - a
    c = observed.sum(axis=1, keepdims=True) - a
    d = (n - week_totals)[None, :] - c
    denom = (a + b) * (c + d) * (a + c) * (b + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = n * (a * d - b * c) ** 2 / denom
    return np.where(denom > 0, stat, 0.0)


def chi2_bursts(m: TermWeekMatrix, critical: float = CHI2_CRITICAL_P01,
                method: Chi2Method = Chi2Method.ONE_CELL) -> TermWeekMatrix:
    """Score every term-week and flag bursts.

    A cell bursts when its count is above ``MIN_BURST_COUNT``, above the
    term's average weekly count, and its chi-square reaches ``critical``.
    Terms with a zero average are dropped into ``excluded``.
    """
    keep = m.expected > 0
    excluded = m.excluded + tuple(t for t, k in zip(m.terms, keep) if not k)
    observed = m.observed[keep]
    expected = m.expected[keep]
    terms = tuple(t for t, k in zip(m.terms, keep) if k)

    if method is Chi2Method.ONE_CELL:
        chi2 = (observed - expected[:, None]) ** 2 / expected[:, None]
    else:
        chi2 = _contingency_chi2(observed, m.week_totals)
    burst = (observed > MIN_BURST_COUNT) & (observed > expected[:, None]) & (chi2 >= critical)
    return TermWeekMatrix(terms, m.weeks, observed, expected, m.week_totals,
                          chi2, burst, excluded)


BURST_COLUMNS = ("term", "year", "week", "observed", "expected", "chi2", "burst")


def burst_rows(m: TermWeekMatrix) -> list[dict]:
    if m.chi2 is None or m.burst is None:
        raise DriftError("matrix has not been scored; run chi2_bursts first")
    rows = []
    for i, term in enumerate(m.terms):
        for j, (year, week) in enumerate(m.weeks):
            rows.append({
                "term": term, "year": year, "week": week,
                "observed": int(m.observed[i, j]),
                "expected": float(m.expected[i]),
                "chi2": float(m.chi2[i, j]),
                "burst": int(bool(m.burst[i, j])),
            })
    return rows


def matrix_from_rows(rows: Iterable[dict]) -> TermWeekMatrix:
    """Rebuild a scored matrix from ``burst_rows`` output (e.g. a bursts.csv)."""
    rows = list(rows)
    terms = tuple(dict.fromkeys(r["term"] for r in rows))
    weeks = tuple(sorted({(int(r["year"]), int(r["week"])) for r in rows}))
    ti = {t: i for i, t in enumerate(terms)}
    wi = {w: j for j, w in enumerate(weeks)}
    observed = np.zeros((len(terms), len(weeks)), dtype=np.int64)
    chi2 = np.zeros(observed.shape)
    burst = np.zeros(observed.shape, dtype=bool)
    expected = np.zeros(len(terms))
    for r in rows:
        i, j = ti[r["term"]], wi[(int(r["year"]), int(r["week"]))]
        observed[i, j] = int(r["observed"])
        expected[i] = float(r["expected"])
        chi2[i, j] = float(r["chi2"])
        burst[i, j] = str(r["burst"]).strip() in ("1", "True", "true")
    return TermWeekMatrix(terms, weeks, observed, expected,
                          np.zeros(len(weeks), dtype=np.int64), chi2, burst)


def render_burst_matrix(m: TermWeekMatrix) -> tuple[list[dict], str]:
    """CSV rows and an SVG grid for a scored matrix."""
    from .charts import burst_chart

    return burst_rows(m), burst_chart(m)
