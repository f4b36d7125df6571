"""Probability cost function, cost curves and classifier dominance.

Spam is the positive class. A false positive puts legitimate mail in the
spam bin, a false negative lets spam through. The cost-curve y axis is the
normalized expected cost ``fnr * PCF + fpr * (1 - PCF)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .drift import WeekSeries, series_range


class CostError(ValueError):
    pass


@dataclass(frozen=True)
class CostSpec:
    cost_fp: float = 10.0
    cost_fn: float = 1.0

    def __post_init__(self):
        for name in ("cost_fp", "cost_fn"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise CostError(f"{name} must be positive and finite, got {v!r}")

    @property
    def ratio(self) -> float:
        return self.cost_fp / self.cost_fn


DEFAULT_COSTS = CostSpec(10.0, 1.0)
SWEEP_RATIOS = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class PcfRange:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise CostError(f"invalid PCF range [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ClassifierPoint:
    name: str
    fpr: float
    fnr: float

    def __post_init__(self):
        if not (0.0 <= self.fpr <= 1.0 and 0.0 <= self.fnr <= 1.0):
            raise CostError(f"rates of {self.name!r} must lie in [0, 1]")

    # cost line: intercept + slope * pcf
    @property
    def intercept(self) -> float:
        return self.fpr

    @property
    def slope(self) -> float:
        return self.fnr - self.fpr


def pcf(p_spam: float, c: CostSpec = DEFAULT_COSTS) -> float:
    """Probability cost of the spam class for prior ``p_spam`` and costs ``c``."""
    if not 0.0 <= p_spam <= 1.0:
        raise CostError(f"p_spam must lie in [0, 1], got {p_spam!r}")
    if p_spam == 0.0:
        return 0.0
    ratio = c.ratio
    if ratio == 1.0:
        return p_spam
    # p*cfn / (p*cfn + (1-p)*cfp), divided through by cfn
    return p_spam / (p_spam + (1.0 - p_spam) * ratio)


def pcf_range(priors: WeekSeries | tuple[float, float], c: CostSpec = DEFAULT_COSTS) -> PcfRange:
    if isinstance(priors, WeekSeries):
        lo, hi = series_range(priors)
    else:
        lo, hi = priors
    return PcfRange(pcf(lo, c), pcf(hi, c))


def expected_cost(pt: ClassifierPoint, pcf_value: float) -> float:
    return pt.fnr * pcf_value + pt.fpr * (1.0 - pcf_value)


@dataclass(frozen=True)
class DominanceInterval:
    lo: float
    hi: float
    winner: str


_TIE = 1e-12


def _best_at(points: Sequence[ClassifierPoint], x: float) -> ClassifierPoint:
    """Cheapest classifier just to the right of ``x`` (ties: flatter line, then name)."""
    costs = [expected_cost(p, x) for p in points]
    low = min(costs)
    tied = [p for p, v in zip(points, costs) if v - low <= _TIE]
    return min(tied, key=lambda p: (p.slope, p.name))


def dominant_over_range(points: Sequence[ClassifierPoint], r: PcfRange,
                        grid: int = 200) -> list[DominanceInterval]:
    """Split ``[r.lo, r.hi]`` into maximal intervals with one cheapest classifier.

    Cost lines are linear in PCF, so the lower envelope is walked exactly:
    from the current winner, the next winner is the line with a smaller
    slope that crosses it first. ``grid`` only sets the sampling resolution
    used when the result is drawn.
    """
    if not points:
        raise CostError("need at least one classifier")
    if grid < 2:
        raise CostError("grid must be at least 2")

    x = r.lo
    current = _best_at(points, x)
    out: list[DominanceInterval] = []
    while True:
        cross, nxt = r.hi, None
        for p in points:
            if p.slope >= current.slope:
                continue
            xc = (p.intercept - current.intercept) / (current.slope - p.slope)
            if xc <= x or xc >= r.hi:
                continue
            if xc < cross or (xc == cross and nxt is not None and
                              (p.slope, p.name) < (nxt.slope, nxt.name)):
                cross, nxt = xc, p
        if nxt is None:
            out.append(DominanceInterval(x, r.hi, current.name))
            break
        out.append(DominanceInterval(x, cross, current.name))
        x, current = cross, _best_at(points, cross)

    merged: list[DominanceInterval] = []
    for iv in out:
        if merged and merged[-1].winner == iv.winner:
            merged[-1] = DominanceInterval(merged[-1].lo, iv.hi, iv.winner)
        else:
            merged.append(iv)
    return merged


def cost_curve(pt: ClassifierPoint, grid: int = 200) -> list[tuple[float, float]]:
    return [(i / (grid - 1), expected_cost(pt, i / (grid - 1))) for i in range(grid)]


@dataclass(frozen=True)
class AccuracyCostRow:
    year: int
    week: int
    p_spam: float
    accuracy: float
    error_rate: float
    pcf: float
    expected_cost: float


def accuracy_is_misleading_report(pt: ClassifierPoint, priors: WeekSeries,
                                  c: CostSpec = DEFAULT_COSTS) -> list[AccuracyCostRow]:
    """Accuracy next to normalized expected cost, week by week.

    Weeks without mail are skipped.
    """
    rows = []
    for e in priors:
        if e.p_spam is None:
            continue
        err = e.p_spam * pt.fnr + (1.0 - e.p_spam) * pt.fpr
        x = pcf(e.p_spam, c)
        rows.append(AccuracyCostRow(e.year, e.week_index, e.p_spam, 1.0 - err, err,
                                    x, expected_cost(pt, x)))
    return rows


def rank_disagreements(points: Sequence[ClassifierPoint], priors: WeekSeries,
                       c: CostSpec = DEFAULT_COSTS) -> list[tuple[int, int, list[str], list[str]]]:
    """Weeks where ranking classifiers by error rate and by cost disagree.

    Returns ``(year, week, by_error, by_cost)`` for each such week, names
    ordered best first.
    """
    reports = {p.name: accuracy_is_misleading_report(p, priors, c) for p in points}
    out = []
    for rows in zip(*reports.values()):
        by_err = [n for _, n in sorted((r.error_rate, n) for n, r in zip(reports, rows))]
        by_cost = [n for _, n in sorted((r.expected_cost, n) for n, r in zip(reports, rows))]
        if by_err != by_cost:
            out.append((rows[0].year, rows[0].week, by_err, by_cost))
    return out


def pcf_rows(priors: WeekSeries, c: CostSpec = DEFAULT_COSTS) -> list[dict]:
    return [
        {"year": e.year, "week": e.week_index, "p_spam": e.p_spam,
         "pcf": None if e.p_spam is None else pcf(e.p_spam, c)}
        for e in priors
    ]

