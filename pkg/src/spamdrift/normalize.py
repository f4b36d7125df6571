"""De-obfuscation of spam text and tokenization.

The pipeline undoes the common content-hiding tricks (HTML comments inside
words, junk tags, single punctuation characters between letters, accented or
leet-substituted letters) and lowercases, so that downstream counting sees
one canonical spelling per word.
"""

from __future__ import annotations

import enum
import os
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

TAG_MAX_LEN = 64
INWORD_PUNCT = ".|-_*'`"
DEFAULT_LEET = {"0": "o", "1": "l", "3": "e"}
DEFAULT_WHITESPACE_TAGS = frozenset({"br", "p", "div"})

# letters with no canonical decomposition
_EXTRA_FOLDS = {
    "ß": "ss", "ø": "o", "Ø": "O", "æ": "ae", "Æ": "AE", "œ": "oe", "Œ": "OE",
    "đ": "d", "Đ": "D", "ł": "l", "Ł": "L", "ı": "i", "þ": "th", "Þ": "Th",
}

_COMMENT = re.compile(r"<!--.*?-->", re.DOTALL)
_OPEN_COMMENT = re.compile(r"<!--.*\Z", re.DOTALL)
_TAG = re.compile(r"<[A-Za-z/!?][^<>]{0,%d}>" % (TAG_MAX_LEN - 3))
_TAG_NAME = re.compile(r"</?\s*([A-Za-z][A-Za-z0-9]*)")
_INWORD = re.compile(r"(?<=[^\W\d_])[%s](?=[^\W\d_])" % re.escape(INWORD_PUNCT))
_WORDISH = re.compile(r"[A-Za-z0-9](?:[A-Za-z0-9]|[%s](?=[A-Za-z0-9]))*" % re.escape(INWORD_PUNCT))
_TOKEN = re.compile(r"[a-z0-9]+")
_ORPHAN_MARKS = re.compile(r"(?<=[A-Za-z])[\u0300-\u036f]+")


class Marker(enum.Enum):
    HTML_COMMENT = "HtmlComment"
    BOGUS_TAG = "BogusTag"
    INWORD_PUNCT = "InWordPunct"
    DIACRITIC = "Diacritic"


@dataclass(frozen=True)
class NormalizeConfig:
    leet_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_LEET))
    whitespace_tags: frozenset[str] = DEFAULT_WHITESPACE_TAGS


DEFAULT_CONFIG = NormalizeConfig()


def load_table(path: str | os.PathLike) -> NormalizeConfig:
    """Read a normalization table.

    One mapping per line, ``#`` starts a comment::

        leet 0 o
        leet 4 a
        whitespace_tag li

    Any ``leet`` line replaces the built-in leet map as a whole; likewise
    for ``whitespace_tag``.
    """
    leet: dict[str, str] = {}
    tags: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if parts[0] == "leet" and len(parts) == 3 and len(parts[1]) == 1:
                leet[parts[1]] = parts[2]
            elif parts[0] == "whitespace_tag" and len(parts) == 2:
                tags.add(parts[1].lower())
            else:
                raise ValueError(f"{path}:{lineno}: cannot parse {line.strip()!r}")
    return NormalizeConfig(
        leet_map=leet or dict(DEFAULT_LEET),
        whitespace_tags=frozenset(tags) if tags else DEFAULT_WHITESPACE_TAGS,
    )


@dataclass(frozen=True)
class NormalizedText:
    text: str
    removed_markers: Mapping[Marker, int]

    def count(self, marker: Marker) -> int:
        return self.removed_markers.get(marker, 0)


def _fixpoint(pattern: re.Pattern, repl, text: str) -> tuple[str, int]:
    # deleting one span can splice a new one together, e.g. "<<b>b>"
    total = 0
    while True:
        text, n = pattern.subn(repl, text)
        if not n:
            return text, total
        total += n


def _strip_comments(text: str) -> tuple[str, int]:
    total = 0
    while True:
        text, n = _fixpoint(_COMMENT, "", text)
        text, m = _OPEN_COMMENT.subn("", text)
        total += n + m
        if not m:
            return text, total


def strip_html_comments(text: str) -> str:
    return _strip_comments(text)[0]


def _strip_tags(text: str, config: NormalizeConfig) -> tuple[str, int]:
    removed = 0

    def repl(match: re.Match) -> str:
        nonlocal removed
        name = _TAG_NAME.match(match.group())
        if name and name.group(1).lower() in config.whitespace_tags:
            return " "
        removed += 1
        return ""

    return _fixpoint(_TAG, repl, text)[0], removed


def strip_bogus_tags(text: str, config: NormalizeConfig = DEFAULT_CONFIG) -> str:
    return _strip_tags(text, config)[0]


def _collapse(text: str) -> tuple[str, int]:
    return _INWORD.subn("", text)


def collapse_inword_punct(text: str) -> str:
    return _collapse(text)[0]


def _fold_char(ch: str) -> str:
    if ch in _EXTRA_FOLDS:
        return _EXTRA_FOLDS[ch]
    base = "".join(c for c in unicodedata.normalize("NFKD", ch) if not unicodedata.combining(c))
    if base and base.isascii() and base.isalpha():
        return base
    return ch


def _fold(text: str, config: NormalizeConfig) -> tuple[str, int]:
    folded, changed = [], 0
    for ch in text:
        if ch.isascii():
            folded.append(ch)
            continue
        out = _fold_char(ch)
        changed += out != ch
        folded.append(out)
    # orphaned combining marks, e.g. from lowercasing U+0130
    text, orphans = _ORPHAN_MARKS.subn("", "".join(folded))
    changed += orphans

    leet = config.leet_map

    def unleet(match: re.Match) -> str:
        nonlocal changed
        word = match.group()
        alnum = [c for c in word if c.isalnum()]
        letters = sum(c.isalpha() for c in alnum)
        if letters < 2 or not all(c.isalpha() or c in leet for c in alnum):
            return word
        hits = sum(c in leet for c in alnum)
        if not hits:
            return word
        changed += hits
        return "".join(leet.get(c, c) for c in word)

    return _WORDISH.sub(unleet, text), changed


def fold_diacritics(text: str, config: NormalizeConfig = DEFAULT_CONFIG) -> str:
    """Map accented Latin letters to ASCII and undo leet digits in words.

    A digit is only rewritten when its word (letters, mapped digits and
    single in-word punctuation) has at least two letters, so numbers such
    as ``254`` are left alone.
    """
    return _fold(text, config)[0]


def _pass(text: str, config: NormalizeConfig, counts: Counter) -> str:
    text, n = _strip_comments(text)
    counts[Marker.HTML_COMMENT] += n
    text, n = _strip_tags(text, config)
    counts[Marker.BOGUS_TAG] += n
    text, n = _fold(text, config)
    counts[Marker.DIACRITIC] += n
    text, n = _collapse(text)
    counts[Marker.INWORD_PUNCT] += n
    return text.lower()


def normalize(text: str, config: NormalizeConfig = DEFAULT_CONFIG) -> NormalizedText:
    """Run comments -> tags -> folding -> punctuation -> lowercase.

    The stage sequence is repeated until the text stops changing, which
    makes ``normalize`` idempotent even when a stage exposes work for an
    earlier one (lowercasing can yield new foldable characters, tag removal
    can splice a comment opener together).
    """
    counts: Counter = Counter({m: 0 for m in Marker})
    for _ in range(16):
        out = _pass(text, config, counts)
        if out == text:
            break
        text = out
    return NormalizedText(text, dict(counts))


def tokenize(n: NormalizedText | str) -> list[str]:
    text = n.text if isinstance(n, NormalizedText) else n
    return _TOKEN.findall(text)


def message_text(message) -> str:
    """Text a filter sees: the Subject header followed by the body."""
    subject = message.header("Subject", "") or ""
    return f"{subject}\n{message.body}"


def message_tokens(message, config: NormalizeConfig = DEFAULT_CONFIG) -> list[str]:
    return tokenize(normalize(message_text(message), config))


def marker_totals(items: Iterable[NormalizedText]) -> dict[Marker, int]:
    totals = {m: 0 for m in Marker}
    for item in items:
        for marker, n in item.removed_markers.items():
            totals[marker] += n
    return totals
