"""Seeded synthetic mail streams with drifting volumes, topic bursts and obfuscation.

Spec file grammar (``key = value``, ``#`` comments)::

    seed = 7
    weeks = 52
    start = 2002-W01            # ISO week of the first generated week
    spam.base = 146
    spam.trend = 0              # added per week
    spam.noise = 55             # half-width (uniform) or sd (gaussian)
    legit.base = 12
    noise_model = uniform       # or gaussian
    obfuscation_rate = 0.2
    obfuscation_step = 0.0      # per-week increase of the rate
    topic.nigeria.kind = episodic
    topic.nigeria.terms = nigeria, lagos, assistance
    topic.nigeria.intensity = 10
    topic.nigeria.weeks = 18    # episodic: comma list, ranges like 31-32 allowed
    topic.xmas.kind = periodic
    topic.xmas.period = 52
    topic.xmas.phase = 51       # active when week % period == phase % period

Weeks are numbered from 1. Topics are spam-only.
"""

from __future__ import annotations

import enum
import os
import random
import re
import string
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from email.utils import format_datetime
from typing import Sequence

from .corpus import Label, Message, write_mbox
from .io import atomic_open
from .normalize import INWORD_PUNCT, TAG_MAX_LEN

NEUTRAL_WORDS = (
    "about", "after", "again", "also", "always", "another", "around", "back", "because",
    "before", "best", "better", "call", "came", "come", "could", "day", "down", "each",
    "even", "every", "find", "first", "found", "from", "give", "good", "great", "have",
    "help", "here", "home", "just", "know", "last", "life", "like", "little", "long",
    "look", "made", "make", "many", "more", "most", "much", "must", "name", "need",
    "never", "next", "only", "other", "over", "part", "people", "place", "right",
    "same", "should", "show", "small", "some", "still", "such", "take", "than", "that",
    "them", "then", "there", "these", "thing", "think", "this", "those", "through",
    "time", "under", "very", "want", "week", "well", "went", "were", "what", "when",
    "where", "which", "while", "with", "work", "world", "would", "year", "your",
)


class SynthError(ValueError):
    pass


class TopicKind(enum.Enum):
    CONSTANT = "constant"
    PERIODIC = "periodic"
    EPISODIC = "episodic"


class NoiseModel(enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class VolumeSpec:
    base: float
    trend: float = 0.0
    noise: float = 0.0

    def level(self, week: int) -> float:
        return self.base + self.trend * (week - 1)


@dataclass(frozen=True)
class TopicSpec:
    kind: TopicKind
    terms: tuple[str, ...]
    intensity: int
    active_weeks: frozenset[int] = frozenset()
    period: int | None = None
    phase: int = 0
    name: str = ""

    def __post_init__(self):
        if not self.terms:
            raise SynthError(f"topic {self.name!r} has no terms")
        if self.intensity < 0:
            raise SynthError(f"topic {self.name!r} has negative intensity")
        if self.kind is TopicKind.EPISODIC and not self.active_weeks:
            raise SynthError(f"episodic topic {self.name!r} needs active weeks")
        if self.kind is TopicKind.PERIODIC and (self.period is None or self.period < 2):
            raise SynthError(f"periodic topic {self.name!r} needs period >= 2")

    def active(self, week: int) -> bool:
        if self.kind is TopicKind.CONSTANT:
            return True
        if self.kind is TopicKind.EPISODIC:
            return week in self.active_weeks
        return week % self.period == self.phase % self.period


_ALLOCATION_ORDER = {TopicKind.EPISODIC: 0, TopicKind.PERIODIC: 1, TopicKind.CONSTANT: 2}


@dataclass(frozen=True)
class StreamSpec:
    seed: int
    weeks: int
    spam_volume: VolumeSpec
    legit_volume: VolumeSpec
    topics: tuple[TopicSpec, ...] = ()
    obfuscation_rate: float = 0.0
    obfuscation_step: float = 0.0
    noise_model: NoiseModel = NoiseModel.UNIFORM
    start: date = date(2001, 12, 31)  # Monday of ISO week 2002-W01
    body_words: tuple[int, int] = (8, 16)

    def __post_init__(self):
        if self.weeks < 1:
            raise SynthError("weeks must be >= 1")
        if not 0.0 <= self.obfuscation_rate <= 1.0:
            raise SynthError("obfuscation_rate must lie in [0, 1]")
        if self.start.weekday() != 0:
            raise SynthError("start must be a Monday")

    def volumes(self, week: int) -> tuple[int, int]:
        """Spam and legit message counts for ``week`` (deterministic given seed)."""
        rng = random.Random(f"spamdrift:{self.seed}:volume:{week}")
        return self._draw(self.spam_volume, week, rng), self._draw(self.legit_volume, week, rng)

    def _draw(self, v: VolumeSpec, week: int, rng: random.Random) -> int:
        level = v.level(week)
        if v.noise > 0:
            if self.noise_model is NoiseModel.UNIFORM:
                level += rng.uniform(-v.noise, v.noise)
            else:
                level += rng.gauss(0.0, v.noise)
        return max(0, round(level))

    def obfuscation_at(self, week: int) -> float:
        return min(1.0, max(0.0, self.obfuscation_rate + self.obfuscation_step * (week - 1)))


def _token(rng: random.Random, lo: int, hi: int) -> str:
    alphabet = string.ascii_lowercase + string.digits
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def _artifact(rng: random.Random, kinds: Sequence[str]) -> str:
    kind = rng.choice(kinds)
    if kind == "comment":
        return f"<!--{_token(rng, 6, 14)}-->"
    if kind == "tag":
        # a digit in the name keeps it clear of real whitespace tags (br, p, div)
        name = rng.choice(string.ascii_lowercase) + _token(rng, 1, 5) + rng.choice(string.digits)
        tag = f"<{name}{rng.choice(['/', ' /'])}>"
        assert len(tag) < TAG_MAX_LEN
        return tag
    return rng.choice(INWORD_PUNCT)


def obfuscate(text: str, seed: int, density: float = 0.5) -> str:
    """Hide words the way spammers do, without changing what normalizes out.

    Each letter run of two or more characters is, with probability
    ``density``, split at one to three interior positions by an HTML
    comment, a junk tag or a single punctuation character. Text that already
    contains ``<`` only receives punctuation, so existing markup cannot
    swallow the inserted pieces.
    """
    rng = random.Random(seed)
    kinds = ["punct"] if "<" in text else ["comment", "tag", "punct"]

    def hide(match: re.Match) -> str:
        word = match.group()
        if rng.random() >= density:
            return word
        gaps = sorted(rng.sample(range(1, len(word)), k=min(len(word) - 1, rng.randint(1, 3))))
        out, prev = [], 0
        for g in gaps:
            out.append(word[prev:g])
            out.append(_artifact(rng, kinds))
            prev = g
        out.append(word[prev:])
        return "".join(out)

    return re.sub(r"[A-Za-z]{2,}", hide, text)


def _week_messages(spec: StreamSpec, week: int) -> list[Message]:
    rng = random.Random(f"spamdrift:{spec.seed}:week:{week}")
    n_spam, n_legit = spec.volumes(week)
    monday = datetime.combine(spec.start + timedelta(weeks=week - 1), time(), timezone.utc)

    topics_for = [[] for _ in range(n_spam)]
    free = list(range(n_spam))
    rng.shuffle(free)
    active = sorted((t for t in spec.topics if t.active(week)), key=lambda t: _ALLOCATION_ORDER[t.kind])
    for topic in active:
        take, free = free[:topic.intensity], free[topic.intensity:]
        for i in take:
            topics_for[i].append(topic)

    lo, hi = spec.body_words
    rate = spec.obfuscation_at(week)
    out = []
    for label, count in ((Label.SPAM, n_spam), (Label.LEGIT, n_legit)):
        for i in range(count):
            words = [rng.choice(NEUTRAL_WORDS) for _ in range(rng.randint(lo, hi))]
            if label is Label.SPAM:
                for topic in topics_for[i]:
                    for term in topic.terms:
                        words.insert(rng.randint(0, len(words)), term)
            body = " ".join(words)
            if label is Label.SPAM and rate > 0 and rng.random() < rate:
                body = obfuscate(body, rng.getrandbits(32))
            stamp = monday + timedelta(seconds=rng.randrange(7 * 86400))
            ident = f"synth-{week:03d}-{label.value}-{i:04d}"
            subject = " ".join(rng.choice(NEUTRAL_WORDS) for _ in range(3))
            sender = "offers@spam.example" if label is Label.SPAM else "friend@legit.example"
            headers = (
                ("From", sender),
                ("To", "user@example.org"),
                ("Subject", subject),
                ("Date", format_datetime(stamp)),
                ("Message-ID", f"<{ident}@synth.example>"),
            )
            out.append(Message(ident, stamp, headers, body + "\n", label))
    return out


def generate(spec: StreamSpec) -> list[Message]:
    """All messages of the stream, ordered by (timestamp, id)."""
    messages = [m for w in range(1, spec.weeks + 1) for m in _week_messages(spec, w)]
    messages.sort(key=lambda m: (m.timestamp, m.id))
    return messages


def write_stream(messages: Sequence[Message], out_dir: str | os.PathLike) -> tuple[str, str]:
    """Write ``spam.mbox`` and ``legit.mbox`` into ``out_dir``."""
    paths = []
    for label in (Label.SPAM, Label.LEGIT):
        path = os.path.join(out_dir, f"{label.value}.mbox")
        with atomic_open(path, "wb") as fh:
            write_mbox((m for m in messages if m.label is label), fh)
        paths.append(path)
    return paths[0], paths[1]


def _parse_weeks(value: str) -> frozenset[int]:
    weeks = set()
    for part in value.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            weeks.update(range(int(a), int(b) + 1))
        else:
            weeks.add(int(part))
    return frozenset(weeks)


def _parse_start(value: str) -> date:
    m = re.fullmatch(r"(\d{4})-W(\d{1,2})", value.strip())
    if m:
        return date.fromisocalendar(int(m[1]), int(m[2]), 1)
    return date.fromisoformat(value.strip())


def parse_spec(text: str) -> StreamSpec:
    kv: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SynthError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value

    def num(key, default=None, cast=float):
        if key not in kv:
            if default is None:
                raise SynthError(f"missing required key {key!r}")
            return default
        try:
            return cast(kv.pop(key))
        except ValueError as exc:
            raise SynthError(f"bad value for {key!r}: {exc}") from None

    def volume(prefix):
        return VolumeSpec(num(f"{prefix}.base"), num(f"{prefix}.trend", 0.0), num(f"{prefix}.noise", 0.0))

    names = list(dict.fromkeys(k.split(".")[1] for k in kv if k.startswith("topic.") and k.count(".") >= 2))
    topics = []
    for name in names:
        p = f"topic.{name}."
        try:
            kind = TopicKind(kv.pop(p + "kind", "").lower())
        except ValueError:
            raise SynthError(f"topic {name!r}: kind must be constant, periodic or episodic") from None
        terms = tuple(t.strip().lower() for t in kv.pop(p + "terms", "").split(",") if t.strip())
        topics.append(TopicSpec(
            kind=kind, terms=terms, intensity=num(p + "intensity", cast=int),
            active_weeks=_parse_weeks(kv.pop(p + "weeks", "")),
            period=num(p + "period", 0, int) or None, phase=num(p + "phase", 0, int), name=name,
        ))

    start = _parse_start(kv.pop("start")) if "start" in kv else StreamSpec.start
    lo_hi = kv.pop("body_words", "8-16").split("-")
    spec = StreamSpec(
        seed=num("seed", cast=int), weeks=num("weeks", cast=int),
        spam_volume=volume("spam"), legit_volume=volume("legit"),
        topics=tuple(topics),
        obfuscation_rate=num("obfuscation_rate", 0.0),
        obfuscation_step=num("obfuscation_step", 0.0),
        noise_model=NoiseModel(kv.pop("noise_model", "uniform").lower()),
        start=start, body_words=(int(lo_hi[0]), int(lo_hi[-1])),
    )
    if kv:
        raise SynthError("unknown keys: " + ", ".join(sorted(kv)))
    return spec


def read_spec(path: str | os.PathLike) -> StreamSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
