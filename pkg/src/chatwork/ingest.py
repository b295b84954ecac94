"""Chat transcript ingestion.

Turns WhatsApp-style text exports into canonical message logs that keep only
timing, a pseudonymous sender, content-type flags and text length. Also reads
and writes the canonical JSON-lines record format and group rosters.
"""

from __future__ import annotations

import bisect
import hashlib
import hmac
import json
import re
from dataclasses import dataclass, field, fields
from datetime import datetime
from typing import IO, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "ConfigError",
    "ContentFlags",
    "DEFAULT_FORMAT",
    "FormatConfig",
    "Message",
    "MessageLog",
    "ParseError",
    "ParseReport",
    "Roster",
    "RosterError",
    "anonymize",
    "anonymize_roster",
    "classify_content",
    "load_format_config",
    "load_roster",
    "minutes_from_datetime",
    "parse_export",
    "passive_users",
    "read_log",
    "read_records",
    "render_export",
    "write_records",
]

_EPOCH = datetime(1970, 1, 1)
_INVISIBLE = re.compile("[\ufeff\u200e\u200f\u202a-\u202e]")
LINK_PREFIXES = ("http://", "https://", "www.")
FLAG_NAMES = ("text", "media", "emoji", "link")

DEFAULT_EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x200D, 0x200D),  # zero width joiner
    (0x20E3, 0x20E3),  # combining keycap
    (0x2300, 0x23FF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
    (0xFE00, 0xFE0F),  # variation selectors
    (0x1F000, 0x1FAFF),
    (0xE0020, 0xE007F),  # tag sequences
)


class ConfigError(ValueError):
    """Invalid configuration (format config, thresholds, generator params)."""


class ParseError(ValueError):
    """Export that cannot be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class RosterError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ContentFlags:
    has_text: bool = False
    has_media: bool = False
    has_emoji: bool = False
    has_link: bool = False

    def names(self) -> list[str]:
        """Set flags by short name, in canonical order."""
        return [n for n in FLAG_NAMES if getattr(self, "has_" + n)]

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "ContentFlags":
        names = set(names)
        unknown = names - set(FLAG_NAMES)
        if unknown:
            raise ValueError(f"unknown content flags: {sorted(unknown)}")
        return cls(**{"has_" + n: True for n in names})

    def __bool__(self) -> bool:
        return self.has_text or self.has_media or self.has_emoji or self.has_link


@dataclass(frozen=True, slots=True)
class Message:
    group_id: str
    user_id: str
    timestamp: int  # minutes since the Unix epoch
    content: ContentFlags
    text_len: int = 0

    def __post_init__(self):
        if not isinstance(self.timestamp, int) or isinstance(self.timestamp, bool):
            raise TypeError("timestamp must be an integer number of minutes")
        if self.text_len < 0:
            raise ValueError("text_len must be non-negative")
        if not self.content:
            raise ValueError("a message needs at least one content flag")


@dataclass(frozen=True)
class MessageLog:
    """Time-ordered messages of one group.

    Use :meth:`from_messages` to build one from unsorted input; the
    constructor only validates.
    """

    group_id: str
    messages: tuple[Message, ...] = ()
    period: tuple[int, int] | None = None

    def __post_init__(self):
        msgs = tuple(self.messages)
        object.__setattr__(self, "messages", msgs)
        for a, b in zip(msgs, msgs[1:]):
            if b.timestamp < a.timestamp:
                raise ValueError("messages must be sorted by timestamp")
        if self.period is None and msgs:
            object.__setattr__(self, "period", (msgs[0].timestamp, msgs[-1].timestamp))
        if self.period is not None and msgs:
            lo, hi = self.period
            if msgs[0].timestamp < lo or msgs[-1].timestamp > hi:
                raise ValueError("message timestamps fall outside the log period")

    @classmethod
    def from_messages(cls, group_id: str, messages: Iterable[Message],
                      period: tuple[int, int] | None = None) -> "MessageLog":
        # sorted() is stable, so same-minute messages keep input order
        return cls(group_id, tuple(sorted(messages, key=lambda m: m.timestamp)), period)

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    @property
    def timestamps(self) -> list[int]:
        return [m.timestamp for m in self.messages]

    @property
    def senders(self) -> set[str]:
        return {m.user_id for m in self.messages}


@dataclass(frozen=True)
class FormatConfig:
    """How to read one flavour of text export.

    A header line is ``<datetime><separator><speaker><speaker_delimiter><payload>``;
    ``datetime_format`` is a :func:`datetime.strptime` pattern. Header lines
    without a speaker delimiter, or matching one of ``system_patterns``, are
    system notices. Timestamps are local time, shifted to UTC by
    ``tz_offset_min`` (local = UTC + offset).
    """

    datetime_format: str = "%d/%m/%Y, %H:%M"
    separator: str = " - "
    speaker_delimiter: str = ": "
    media_markers: tuple[str, ...] = (
        "<Media omitted>",
        "<Mídia oculta>",
        "<Arquivo de mídia oculto>",
    )
    emoji_ranges: tuple[tuple[int, int], ...] = DEFAULT_EMOJI_RANGES
    system_patterns: tuple[str, ...] = ()
    tz_offset_min: int = 0
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _system_re: tuple[re.Pattern, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.separator:
            raise ConfigError("separator must be non-empty")
        if not self.speaker_delimiter:
            raise ConfigError("speaker_delimiter must be non-empty")
        ranges = tuple(sorted((int(lo), int(hi)) for lo, hi in self.emoji_ranges))
        merged: list[tuple[int, int]] = []
        for lo, hi in ranges:
            if lo > hi or lo < 0:
                raise ConfigError(f"bad emoji range {lo:#x}-{hi:#x}")
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        ranges = tuple(merged)
        object.__setattr__(self, "emoji_ranges", ranges)
        object.__setattr__(self, "media_markers", tuple(self.media_markers))
        object.__setattr__(self, "_starts", tuple(lo for lo, _ in ranges))
        try:
            compiled = tuple(re.compile(p) for p in self.system_patterns)
        except re.error as exc:
            raise ConfigError(f"bad system pattern: {exc}") from None
        object.__setattr__(self, "_system_re", compiled)

    def is_emoji(self, ch: str) -> bool:
        cp = ord(ch)
        i = bisect.bisect_right(self._starts, cp) - 1
        return i >= 0 and cp <= self.emoji_ranges[i][1]

    def with_overrides(self, **overrides) -> "FormatConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return FormatConfig(**values)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "FormatConfig":
        allowed = {f.name for f in fields(cls) if f.init}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown format config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("media_markers", "system_patterns"):
            if key in kwargs:
                if isinstance(kwargs[key], str) or not isinstance(kwargs[key], list):
                    raise ConfigError(f"{key} must be a list of strings")
                kwargs[key] = tuple(kwargs[key])
        if "emoji_ranges" in kwargs:
            try:
                kwargs["emoji_ranges"] = tuple(
                    (_codepoint(lo), _codepoint(hi)) for lo, hi in kwargs["emoji_ranges"]
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"emoji_ranges: {exc}") from None
        if "tz_offset_min" in kwargs and not isinstance(kwargs["tz_offset_min"], int):
            raise ConfigError("tz_offset_min must be an integer")
        for key in ("datetime_format", "separator", "speaker_delimiter"):
            if key in kwargs and not isinstance(kwargs[key], str):
                raise ConfigError(f"{key} must be a string")
        return cls(**kwargs)


def _codepoint(value) -> int:
    if isinstance(value, str):
        v = value.lower()
        if v.startswith(("0x", "u+")):
            v = v[2:]
        return int(v, 16)
    return int(value)


DEFAULT_FORMAT = FormatConfig()


def load_format_config(stream: IO[str]) -> FormatConfig:
    """Read a JSON object of :class:`FormatConfig` fields."""
    try:
        data = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"format config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("format config must be a JSON object")
    return FormatConfig.from_mapping(data)


def minutes_from_datetime(dt: datetime, tz_offset_min: int = 0) -> int:
    """Whole minutes since the epoch; seconds are truncated."""
    delta = dt.replace(tzinfo=None) - _EPOCH
    return delta.days * 1440 + delta.seconds // 60 - tz_offset_min


def classify_content(text: str, fmt: FormatConfig = DEFAULT_FORMAT) -> ContentFlags:
    rest = text
    has_media = False
    for marker in fmt.media_markers:
        if marker and marker in rest:
            has_media = True
            rest = rest.replace(marker, " ")

    has_link = False
    kept = []
    for token in rest.split():
        if token.lower().startswith(LINK_PREFIXES):
            has_link = True
        else:
            kept.append(token)

    has_emoji = has_text = False
    for ch in "".join(kept):
        if fmt.is_emoji(ch):
            has_emoji = True
        else:
            has_text = True
    return ContentFlags(has_text, has_media, has_emoji, has_link)


def _text_len(payload: str, fmt: FormatConfig) -> int:
    for marker in fmt.media_markers:
        if marker:
            payload = payload.replace(marker, "")
    return len(payload.strip())


@dataclass
class ParseReport:
    """Bookkeeping for one parsed export."""

    system_lines: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "system_lines": self.system_lines,
            "skipped": [{"line": n, "reason": r} for n, r in self.skipped],
        }


def _split_header(line: str, fmt: FormatConfig):
    """Return (minute, rest) for a header line, else None."""
    head, sep, rest = line.partition(fmt.separator)
    if not sep:
        return None
    try:
        dt = datetime.strptime(head.strip(), fmt.datetime_format)
    except ValueError:
        return None
    return minutes_from_datetime(dt, fmt.tz_offset_min), rest


def parse_export(stream: IO[str] | Iterable[str], fmt: FormatConfig = DEFAULT_FORMAT,
                 group_id: str = "") -> tuple[MessageLog, ParseReport]:
    """Parse a text export into a message log.

    Lines that do not start with a timestamp continue the previous message.
    Raises :class:`ParseError` if the first non-blank line is not a header.
    """
    report = ParseReport()
    entries: list[list] = []  # [minute, speaker, payload_lines]
    seen_content = False
    current = None

    for line_no, raw in enumerate(stream, start=1):
        line = _INVISIBLE.sub("", raw.rstrip("\r\n"))
        header = _split_header(line, fmt)
        if header is None:
            if not seen_content:
                if not line.strip():
                    continue
                raise ParseError("expected a timestamped header line", line_no)
            if current is None:
                report.skipped.append((line_no, "continuation without a preceding message"))
            else:
                current[2].append(line)
            continue

        seen_content = True
        minute, rest = header
        speaker, delim, payload = rest.partition(fmt.speaker_delimiter)
        if not delim or any(p.search(rest) for p in fmt._system_re):
            report.system_lines += 1
            current = None
            continue
        current = [minute, speaker.strip(), [payload]]
        entries.append(current)

    messages = []
    for minute, speaker, lines in entries:
        payload = "\n".join(lines).rstrip()
        flags = classify_content(payload, fmt)
        if not flags:
            flags = ContentFlags(has_text=True)  # empty payload still counts as a post
        text_len = 0 if flags.names() == ["media"] else _text_len(payload, fmt)
        messages.append(Message(group_id, speaker, minute, flags, text_len))
    return MessageLog.from_messages(group_id, messages), report


def anonymize(log: MessageLog, salt: bytes) -> MessageLog:
    """Replace user ids by a keyed digest (HMAC-SHA256, 16 hex chars)."""
    cache: dict[str, str] = {}

    def pseudo(uid: str) -> str:
        if uid not in cache:
            cache[uid] = _pseudonym(uid, salt)
        return cache[uid]

    msgs = tuple(
        Message(m.group_id, pseudo(m.user_id), m.timestamp, m.content, m.text_len)
        for m in log.messages
    )
    return MessageLog(log.group_id, msgs, log.period)


def _pseudonym(uid: str, salt: bytes) -> str:
    return hmac.new(salt, uid.encode("utf-8"), hashlib.sha256).hexdigest()[:16]


# -- canonical record format -------------------------------------------------

def _record(m: Message) -> str:
    return json.dumps(
        {
            "flags": m.content.names(),
            "group": m.group_id,
            "text_len": m.text_len,
            "ts_min": m.timestamp,
            "user": m.user_id,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def write_records(log: MessageLog, stream: IO[str]) -> int:
    """Write one JSON object per message; returns the number of lines."""
    for m in log.messages:
        stream.write(_record(m))
        stream.write("\n")
    return len(log)


def read_records(stream: IO[str] | Iterable[str]) -> dict[str, MessageLog]:
    """Read canonical records, split by group, in first-seen group order."""
    by_group: dict[str, list[Message]] = {}
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            msg = Message(
                group_id=str(obj["group"]),
                user_id=str(obj["user"]),
                timestamp=int(obj["ts_min"]),
                content=ContentFlags.from_names(obj["flags"]),
                text_len=int(obj["text_len"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad canonical record: {exc}", line_no) from None
        by_group.setdefault(msg.group_id, []).append(msg)
    return {g: MessageLog.from_messages(g, msgs) for g, msgs in by_group.items()}


def read_log(stream: IO[str] | Iterable[str], group_id: str | None = None) -> MessageLog:
    """Read a canonical file that holds a single group."""
    logs = read_records(stream)
    if group_id is not None:
        return logs.get(group_id, MessageLog(group_id))
    if len(logs) > 1:
        raise ValueError(f"file holds {len(logs)} groups; pass group_id")
    if not logs:
        return MessageLog("")
    return next(iter(logs.values()))


def render_export(log: MessageLog, fmt: FormatConfig = DEFAULT_FORMAT,
                  names: Mapping[str, str] | None = None) -> str:
    """Render a log back into text-export form with placeholder payloads.

    Only timing, speakers and content flags are reproduced; used to build
    parser fixtures from synthetic traces.
    """
    marker = fmt.media_markers[0] if fmt.media_markers else "<media>"
    out = []
    for i, m in enumerate(log.messages):
        dt = datetime.utcfromtimestamp((m.timestamp + fmt.tz_offset_min) * 60)
        parts = []
        if m.content.has_media:
            parts.append(marker)
        if m.content.has_text:
            parts.append(_filler(max(m.text_len, 1), i))
        if m.content.has_link:
            parts.append(f"https://example.org/{i}")
        if m.content.has_emoji:
            parts.append("\U0001F600")
        speaker = names.get(m.user_id, m.user_id) if names else m.user_id
        out.append(f"{dt.strftime(fmt.datetime_format)}{fmt.separator}"
                   f"{speaker}{fmt.speaker_delimiter}{' '.join(parts)}\n")
    return "".join(out)


def _filler(n: int, seed: int) -> str:
    words = ("bom", "dia", "grupo", "hoje", "voto", "noticia", "amigos", "sim")
    text, k = [], seed
    while sum(len(w) + 1 for w in text) < n:
        text.append(words[k % len(words)])
        k = k * 7 + 3
    return " ".join(text)[:n].strip() or "a"


# -- rosters -----------------------------------------------------------------

@dataclass(frozen=True)
class Roster:
    group_id: str
    members: frozenset[str] = frozenset()
    admins: frozenset[str] = frozenset()
    category: str | None = None

    def __post_init__(self):
        if not self.admins <= self.members:
            missing = sorted(self.admins - self.members)
            raise RosterError(f"admins not in members: {missing}")


def load_roster(stream: IO[str]) -> Roster:
    try:
        data = json.load(stream)
    except json.JSONDecodeError as exc:
        raise RosterError(f"roster is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or "group" not in data:
        raise RosterError("roster must be an object with a 'group' key")
    members: Sequence = data.get("members", [])
    admins: Sequence = data.get("admins", [])
    if not isinstance(members, list) or not isinstance(admins, list):
        raise RosterError("members and admins must be arrays")
    members = [str(m) for m in members]
    if len(set(members)) != len(members):
        dup = sorted({m for m in members if members.count(m) > 1})
        raise RosterError(f"duplicate member ids: {dup}")
    category = data.get("category")
    return Roster(
        group_id=str(data["group"]),
        members=frozenset(members),
        admins=frozenset(str(a) for a in admins),
        category=None if category is None else str(category),
    )


def anonymize_roster(roster: Roster, salt: bytes) -> Roster:
    return Roster(
        roster.group_id,
        frozenset(_pseudonym(m, salt) for m in roster.members),
        frozenset(_pseudonym(a, salt) for a in roster.admins),
        roster.category,
    )


def passive_users(roster: Roster, log: MessageLog) -> set[str]:
    """Roster members who posted nothing in the log."""
    return set(roster.members) - log.senders
