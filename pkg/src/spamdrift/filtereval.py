"""Time-ordered (test-then-train) evaluation of spam filters."""

from __future__ import annotations

import abc
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .corpus import Label, Message, iter_weeks
from .costs import ClassifierPoint, CostSpec, DEFAULT_COSTS, SWEEP_RATIOS
from .normalize import message_tokens

DEFAULT_THRESHOLD = 0.9
THRESHOLD_PRESETS = {"default": 0.9, "sahami": 0.999, "even": 0.5}


class EvalError(ValueError):
    pass


class UntrainedModelError(EvalError):
    pass


class Mode(enum.Enum):
    TEST_THEN_TRAIN = "test-then-train"
    TRAIN_ONLY_ON_FEEDBACK = "train-on-feedback"


class ClassifierModel(abc.ABC):
    """Anything that learns from labeled token lists and scores p(spam | message)."""

    @abc.abstractmethod
    def train(self, tokens: Sequence[str], label: Label) -> None: ...

    @abc.abstractmethod
    def score(self, tokens: Sequence[str]) -> float: ...


@dataclass
class NaiveBayesModel(ClassifierModel):
    """Multinomial naive Bayes with additive smoothing.

    ``legit_token_weight`` scales how much each legitimate token counts
    during training; 2 reproduces the double-counting trick, 1 is plain NB.
    With ``freeze_priors`` the class prior is held at 0.5 so drifting
    volumes do not leak into the score.
    """

    smoothing_alpha: float = 1.0
    legit_token_weight: float = 1.0
    freeze_priors: bool = True
    spam_token_counts: dict[str, float] = field(default_factory=dict)
    legit_token_counts: dict[str, float] = field(default_factory=dict)
    spam_doc_count: int = 0
    legit_doc_count: int = 0
    spam_total: float = 0.0
    legit_total: float = 0.0

    def __post_init__(self):
        if self.smoothing_alpha <= 0 or self.legit_token_weight <= 0:
            raise EvalError("smoothing_alpha and legit_token_weight must be positive")

    def train(self, tokens: Sequence[str], label: Label) -> None:
        nb_train(self, tokens, label)

    def score(self, tokens: Sequence[str]) -> float:
        return nb_score(self, tokens)

    @property
    def vocabulary_size(self) -> int:
        return len(self.spam_token_counts.keys() | self.legit_token_counts.keys())


def nb_train(model: NaiveBayesModel, message: Sequence[str], label: Label) -> NaiveBayesModel:
    if label is Label.SPAM:
        counts = model.spam_token_counts
        for t in message:
            counts[t] = counts.get(t, 0.0) + 1.0
        model.spam_total += len(message)
        model.spam_doc_count += 1
    elif label is Label.LEGIT:
        w = model.legit_token_weight
        counts = model.legit_token_counts
        for t in message:
            counts[t] = counts.get(t, 0.0) + w
        model.legit_total += w * len(message)
        model.legit_doc_count += 1
    else:
        raise EvalError("cannot train on an unlabeled message")
    return model


def nb_score(model: NaiveBayesModel, message: Sequence[str]) -> float:
    """p(spam | message); tokens never seen in training are ignored."""
    if model.spam_doc_count == 0 or model.legit_doc_count == 0:
        raise UntrainedModelError("model needs at least one training message per class")
    a = model.smoothing_alpha
    v = model.vocabulary_size
    if model.freeze_priors:
        log_odds = 0.0
    else:
        log_odds = math.log(model.spam_doc_count) - math.log(model.legit_doc_count)
    if v == 0:  # nothing but empty messages so far
        return _logistic(log_odds)
    spam_den = math.log(model.spam_total + a * v)
    legit_den = math.log(model.legit_total + a * v)
    spam_counts, legit_counts = model.spam_token_counts, model.legit_token_counts
    for t in message:
        s, l = spam_counts.get(t, 0.0), legit_counts.get(t, 0.0)
        if s == 0.0 and l == 0.0:
            continue
        log_odds += (math.log(s + a) - spam_den) - (math.log(l + a) - legit_den)
    return _logistic(log_odds)


def _logistic(x: float) -> float:
    # written to avoid overflow on either side
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def classify(score: float, threshold: float = DEFAULT_THRESHOLD) -> Label:
    return Label.SPAM if score >= threshold else Label.LEGIT


EVAL_COLUMNS = ("year", "week", "n", "abstain", "tp", "fp", "tn", "fn", "accuracy",
                "precision", "recall", "fp_rate", "fn_rate", "weighted_cost")


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


@dataclass(frozen=True)
class EvalRow:
    year: int | None  # None on the totals row
    week: int | None
    tp: int
    fp: int
    tn: int
    fn: int
    abstain: int
    weighted_cost: float

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float | None:
        return _ratio(self.tp + self.tn, self.n)

    @property
    def precision(self) -> float | None:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float | None:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def fp_rate(self) -> float | None:
        return _ratio(self.fp, self.fp + self.tn)

    @property
    def fn_rate(self) -> float | None:
        return _ratio(self.fn, self.fn + self.tp)

    def as_dict(self) -> dict:
        return {
            "year": "total" if self.year is None else self.year,
            "week": "" if self.week is None else self.week,
            "n": self.n, "abstain": self.abstain,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
            "fp_rate": self.fp_rate, "fn_rate": self.fn_rate,
            "weighted_cost": self.weighted_cost,
        }


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    totals: EvalRow
    costs: CostSpec = DEFAULT_COSTS

    def week(self, year: int, week: int) -> EvalRow:
        for r in self.rows:
            if (r.year, r.week) == (year, week):
                return r
        raise KeyError((year, week))

    def point(self, name: str) -> ClassifierPoint:
        t = self.totals
        return ClassifierPoint(name, t.fp_rate or 0.0, t.fn_rate or 0.0)

    def records(self) -> list[dict]:
        return [r.as_dict() for r in self.rows] + [self.totals.as_dict()]


def _row(year, week, counts: dict, c: CostSpec) -> EvalRow:
    return EvalRow(year, week, counts["tp"], counts["fp"], counts["tn"], counts["fn"],
                   counts["abstain"], counts["fp"] * c.cost_fp + counts["fn"] * c.cost_fn)


def prequential_run(messages: Iterable[Message], model: ClassifierModel,
                    threshold: float = DEFAULT_THRESHOLD, c: CostSpec = DEFAULT_COSTS,
                    mode: Mode = Mode.TEST_THEN_TRAIN,
                    tokenizer: Callable[[Message], Sequence[str]] = message_tokens) -> EvalReport:
    """Score each message, record the outcome, then (maybe) learn from it.

    Until both classes have been seen once, messages are counted as
    abstentions and always trained on. Afterwards ``TEST_THEN_TRAIN`` learns
    from every message and ``TRAIN_ONLY_ON_FEEDBACK`` only from spam that
    reached the inbox (a user reporting missed spam).
    """
    messages = list(messages)
    for prev, cur in zip(messages, messages[1:]):
        if cur.timestamp < prev.timestamp:
            raise EvalError(f"messages out of time order at {cur.id}")
    if any(m.label is Label.UNLABELED for m in messages):
        raise EvalError("prequential evaluation needs labeled messages")

    weekly: dict = defaultdict(lambda: dict(tp=0, fp=0, tn=0, fn=0, abstain=0))
    seen = {Label.SPAM: 0, Label.LEGIT: 0}
    for m in messages:
        tokens = tokenizer(m)
        slot = weekly[m.iso_week]
        if seen[Label.SPAM] and seen[Label.LEGIT]:
            predicted = classify(model.score(tokens), threshold)
            is_spam = m.label is Label.SPAM
            key = ("tp" if predicted is Label.SPAM else "fn") if is_spam else \
                  ("fp" if predicted is Label.SPAM else "tn")
            slot[key] += 1
            learn = mode is Mode.TEST_THEN_TRAIN or key == "fn"
        else:
            slot["abstain"] += 1
            learn = True
        if learn:
            model.train(tokens, m.label)
            seen[m.label] += 1

    rows = []
    if weekly:
        for wk in iter_weeks(min(weekly), max(weekly)):
            rows.append(_row(wk[0], wk[1], weekly.get(wk, dict(tp=0, fp=0, tn=0, fn=0, abstain=0)), c))
    totals = {k: sum(getattr(r, k) for r in rows) for k in ("tp", "fp", "tn", "fn", "abstain")}
    return EvalReport(tuple(rows), _row(None, None, totals, c), c)


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    cost_fp: float
    cost_fn: float
    fp: int
    fn: int
    weighted_cost: float


SWEEP_COLUMNS = ("ratio", "cost_fp", "cost_fn", "fp", "fn", "weighted_cost")


def cost_ratio_sweep(report: EvalReport | tuple[int, int], ratios: Sequence[float] = SWEEP_RATIOS,
                     cost_fn: float = 1.0) -> list[SweepRow]:
    """Re-price the same confusion counts under several FP:FN cost ratios."""
    fp, fn = (report.totals.fp, report.totals.fn) if isinstance(report, EvalReport) else report
    out = []
    for r in ratios:
        if r <= 0:
            raise EvalError(f"cost ratio must be positive, got {r}")
        cost_fp = r * cost_fn
        out.append(SweepRow(r, cost_fp, cost_fn, fp, fn, fp * cost_fp + fn * cost_fn))
    return out


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise EvalError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
