"""Ingestion of labeled mail archives (mbox, maildir) and ISO-week bucketing."""

from __future__ import annotations

import email
import email.policy
import email.utils
import enum
import hashlib
import io
import os
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

EARLIEST = datetime(1990, 1, 1, tzinfo=timezone.utc)

_ENVELOPE_DATE = re.compile(
    rb"(?P<wday>[A-Z][a-z]{2})\s+(?P<mon>[A-Z][a-z]{2})\s+(?P<day>\d{1,2})\s+"
    rb"(?P<h>\d{1,2}):(?P<m>\d{2})(?::(?P<s>\d{2}))?\s+"
    rb"(?:(?P<tz1>[+-]\d{4}|[A-Z]{3,4})\s+)?(?P<year>\d{4})"
)
_MONTHS = {m: i for i, m in enumerate(
    ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"], 1)}


class Label(enum.Enum):
    SPAM = "spam"
    LEGIT = "legit"
    UNLABELED = "unlabeled"


class CorpusError(ValueError):
    """Base class for ingestion errors."""


class MboxFormatError(CorpusError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MaildirError(CorpusError):
    pass


class UnlabeledMessageError(CorpusError):
    def __init__(self, ids: Sequence[str]):
        super().__init__("unlabeled messages cannot be bucketed: " + ", ".join(ids))
        self.ids = list(ids)


@dataclass(frozen=True)
class Message:
    id: str
    timestamp: datetime | None
    headers: tuple[tuple[str, str], ...]
    body: str
    label: Label
    raw: bytes = field(default=b"", repr=False, compare=False)

    def header(self, name: str, default: str | None = None) -> str | None:
        lname = name.lower()
        for key, value in self.headers:
            if key.lower() == lname:
                return value
        return default

    @property
    def iso_week(self) -> tuple[int, int]:
        if self.timestamp is None:
            raise CorpusError(f"message {self.id} has no timestamp")
        iso = self.timestamp.isocalendar()
        return iso[0], iso[1]


@dataclass(frozen=True)
class QuarantineRecord:
    source: str
    index: int
    reason: str
    offset: int | None = None
    message: Message | None = None


@dataclass(frozen=True)
class ParseResult:
    """Messages that passed ingestion plus the ones held back."""

    source: str
    messages: tuple[Message, ...]
    quarantine: tuple[QuarantineRecord, ...]

    def __iter__(self):
        return iter(self.messages)

    def __len__(self) -> int:
        return len(self.messages)

    @property
    def entries(self) -> int:
        return len(self.messages) + len(self.quarantine)

    def report_row(self) -> dict:
        weeks = sorted(m.iso_week for m in self.messages)
        return {
            "source": self.source,
            "parsed": len(self.messages),
            "quarantined": len(self.quarantine),
            "first_week": format_week(*weeks[0]) if weeks else "",
            "last_week": format_week(*weeks[-1]) if weeks else "",
        }


REPORT_COLUMNS = ("source", "parsed", "quarantined", "first_week", "last_week")


@dataclass(frozen=True)
class WeekBucket:
    year: int
    week_index: int
    spam_count: int
    legit_count: int
    message_ids: tuple[str, ...]

    @property
    def total(self) -> int:
        return self.spam_count + self.legit_count


def format_week(year: int, week: int) -> str:
    return f"{year:04d}-W{week:02d}"


def week_monday(year: int, week: int) -> date:
    return date.fromisocalendar(year, week, 1)


def _decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def _clean_header(value) -> str:
    # compat32 hands back surrogate-escaped text for 8-bit header bytes
    text = str(value)
    return text.encode("utf-8", "surrogateescape").decode("utf-8", "replace")


def parse_date_header(value: str | None) -> datetime | None:
    if not value:
        return None
    try:
        parsed = email.utils.parsedate_to_datetime(value)
    except (TypeError, ValueError, IndexError, OverflowError):
        return None
    if parsed is None:
        return None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc).replace(microsecond=0)


def parse_envelope_date(line: bytes) -> datetime | None:
    """Read the asctime stamp off an mbox ``From `` line (taken as UTC)."""
    match = _ENVELOPE_DATE.search(line)
    if match is None:
        return None
    month = _MONTHS.get(match["mon"].decode())
    if month is None:
        return None
    try:
        return datetime(
            int(match["year"]), month, int(match["day"]),
            int(match["h"]), int(match["m"]), int(match["s"] or 0),
            tzinfo=timezone.utc,
        )
    except ValueError:
        return None


def _in_window(ts: datetime | None, now: datetime) -> bool:
    return ts is not None and EARLIEST <= ts <= now


def _split_head(raw: bytes) -> tuple[bytes, bytes] | None:
    for sep in (b"\r\n\r\n", b"\n\n"):
        pos = raw.find(sep)
        if pos >= 0:
            return raw[:pos], raw[pos + len(sep):]
    return None


_HEADER_LINE = re.compile(rb"^[!-9;-~]+:")


def _message_id(raw: bytes, seen: dict[str, int]) -> str:
    digest = hashlib.sha256(raw).hexdigest()[:20]
    n = seen.get(digest, 0)
    seen[digest] = n + 1
    if n:
        digest = hashlib.sha256(raw + b"#%d" % n).hexdigest()[:20]
    return digest


def _build(raw: bytes, envelope: bytes | None, label: Label, ident: str,
           now: datetime) -> tuple[Message, str | None]:
    """Turn one raw entry into a Message; the second item is a quarantine reason."""
    parsed = email.message_from_bytes(raw, policy=email.policy.compat32)
    headers = tuple((_clean_header(k), _clean_header(v)) for k, v in parsed.items())
    split = _split_head(raw)
    body = _decode(split[1]) if split else ""
    msg = Message(ident, None, headers, body, label, raw)

    if not headers or not _HEADER_LINE.match(raw.lstrip(b"\r\n")):
        return msg, "no header block"
    ts = parse_date_header(msg.header("Date"))
    if not _in_window(ts, now) and envelope is not None:
        ts = parse_envelope_date(envelope)
    if not _in_window(ts, now):
        return msg, "no valid Date header or envelope timestamp"
    return Message(ident, ts, headers, body, label, raw), None


def _ordered(messages: Iterable[Message]) -> tuple[Message, ...]:
    return tuple(sorted(messages, key=lambda m: (m.timestamp, m.id)))


def split_mbox(data: bytes) -> list[tuple[int, bytes, bytes]]:
    """Split mbox bytes into ``(offset, envelope_line, entry_bytes)`` triples."""
    if not data.strip():
        return []
    start = len(data) - len(data.lstrip(b"\r\n"))
    if not data.startswith(b"From ", start):
        raise MboxFormatError("mbox does not begin with a 'From ' line", start)
    starts = [start] + [m.start() + 1 for m in re.finditer(rb"\nFrom ", data)
                        if m.start() + 1 > start]
    out = []
    for i, s in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else len(data)
        chunk = data[s:end]
        nl = chunk.find(b"\n")
        if nl < 0:
            raise MboxFormatError("truncated message: envelope line only", s)
        envelope, entry = chunk[:nl].rstrip(b"\r"), chunk[nl + 1:]
        out.append((s, envelope, entry))
    last_offset, _, last = out[-1]
    if not data.endswith(b"\n") or _split_head(last) is None:
        raise MboxFormatError("truncated final message", last_offset)
    return out


def _unescape_from(entry: bytes) -> bytes:
    # mboxrd: one level of '>' quoting is removed from '>From ' lines
    return re.sub(rb"(?m)^>(>*From )", rb"\1", entry)


def parse_mbox(source: BinaryIO | bytes, default_label: Label, *, name: str = "<mbox>",
               now: datetime | None = None) -> ParseResult:
    """Parse an mbox byte stream; every entry gets ``default_label``.

    Entries whose Date header and envelope stamp are both unusable go to
    ``ParseResult.quarantine`` rather than into ``messages``.
    """
    data = source if isinstance(source, bytes) else source.read()
    now = now or datetime.now(timezone.utc)
    messages, quarantine, seen = [], [], {}
    for index, (offset, envelope, entry) in enumerate(split_mbox(data)):
        raw = _unescape_from(entry)
        msg, reason = _build(raw, envelope, default_label, _message_id(raw, seen), now)
        if reason:
            quarantine.append(QuarantineRecord(name, index, reason, offset, msg))
        else:
            messages.append(msg)
    return ParseResult(name, _ordered(messages), tuple(quarantine))


def read_mbox(path: str | os.PathLike, default_label: Label, **kwargs) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_mbox(fh, default_label, name=kwargs.pop("name", str(path)), **kwargs)


def parse_maildir(root: str | os.PathLike, default_label: Label, *,
                  now: datetime | None = None) -> ParseResult:
    root = Path(root)
    subdirs = [root / sub for sub in ("cur", "new") if (root / sub).is_dir()]
    if not subdirs:
        raise MaildirError(f"{root} has neither cur/ nor new/")
    now = now or datetime.now(timezone.utc)
    files = sorted(p for d in subdirs for p in d.iterdir() if not p.name.startswith("."))
    messages, quarantine, seen = [], [], {}
    for index, path in enumerate(files):
        rel = str(path.relative_to(root))
        try:
            raw = path.read_bytes()
        except OSError as exc:
            quarantine.append(QuarantineRecord(str(root), index, f"unreadable {rel}: {exc.strerror}"))
            continue
        envelope = None
        if raw.startswith(b"From "):
            nl = raw.find(b"\n")
            envelope, raw = raw[:max(nl, 0)], raw[nl + 1:] if nl >= 0 else b""
        msg, reason = _build(raw, envelope, default_label, _message_id(raw, seen), now)
        if reason:
            quarantine.append(QuarantineRecord(str(root), index, f"{rel}: {reason}", None, msg))
        else:
            messages.append(msg)
    return ParseResult(str(root), _ordered(messages), tuple(quarantine))


def load_archive(path: str | os.PathLike, default_label: Label, **kwargs) -> ParseResult:
    """Dispatch on path type: directories are maildirs, files are mbox."""
    if Path(path).is_dir():
        return parse_maildir(path, default_label, **kwargs)
    return read_mbox(path, default_label, **kwargs)


def bucket_by_week(messages: Iterable[Message]) -> list[WeekBucket]:
    messages = list(messages)
    bad = sorted(m.id for m in messages if m.label is Label.UNLABELED)
    if bad:
        raise UnlabeledMessageError(bad)
    missing = sorted(m.id for m in messages if m.timestamp is None)
    if missing:
        raise CorpusError("messages without timestamps: " + ", ".join(missing))
    if not messages:
        return []

    tally: dict[tuple[int, int], list] = {}
    for m in messages:
        slot = tally.setdefault(m.iso_week, [0, 0, []])
        slot[0 if m.label is Label.SPAM else 1] += 1
        slot[2].append(m.id)

    buckets = []
    for key in iter_weeks(min(tally), max(tally)):
        spam, legit, ids = tally.get(key, (0, 0, []))
        buckets.append(WeekBucket(key[0], key[1], spam, legit, tuple(sorted(ids))))
    return buckets


def iter_weeks(first: tuple[int, int], last: tuple[int, int]) -> list[tuple[int, int]]:
    day, end, out = week_monday(*first), week_monday(*last), []
    while day <= end:
        out.append(tuple(day.isocalendar()[:2]))
        day += timedelta(days=7)
    return out


def write_mbox(messages: Iterable[Message], fh: io.BufferedIOBase | BinaryIO) -> None:
    """Serialize messages as mboxrd, with asctime envelope lines."""
    for m in messages:
        stamp = (m.timestamp or EARLIEST).strftime("%a %b %d %H:%M:%S %Y")
        sender = email.utils.parseaddr(m.header("From", "") or "")[1] or "MAILER-DAEMON"
        fh.write(f"From {sender} {stamp}\n".encode())
        for key, value in m.headers:
            fh.write(f"{key}: {value}\n".encode("utf-8"))
        fh.write(b"\n")
        body = m.body if m.body.endswith("\n") else m.body + "\n"
        body = re.sub(r"(?m)^(>*From )", r">\1", body)
        fh.write(body.encode("utf-8"))
        fh.write(b"\n")
