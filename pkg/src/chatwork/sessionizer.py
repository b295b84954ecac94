"""User and group sessions, silence-gap histograms and threshold selection.

A session is a maximal run of messages in which no gap between consecutive
messages exceeds the threshold. A gap exactly equal to the threshold keeps
the run going; ``threshold + 1`` splits it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from .ingest import ConfigError, MessageLog

__all__ = [
    "DEFAULT_GROUP_THRESHOLD",
    "DEFAULT_USER_THRESHOLD",
    "GapHistogram",
    "GroupSession",
    "InsufficientDataError",
    "Thresholds",
    "UserSession",
    "build_group_sessions",
    "build_user_sessions",
    "combined_elbow",
    "concurrency_profile",
    "elbow_threshold",
    "peak_concurrency",
    "session_records",
    "silence_gap_histogram",
    "split_runs",
]

DEFAULT_USER_THRESHOLD = 15
DEFAULT_GROUP_THRESHOLD = 81


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    user_threshold: int = DEFAULT_USER_THRESHOLD
    group_threshold: int = DEFAULT_GROUP_THRESHOLD

    def __post_init__(self):
        if self.user_threshold <= 0 or self.group_threshold <= 0:
            raise ConfigError("session thresholds must be positive")


@dataclass(frozen=True)
class UserSession:
    user_id: str
    group_id: str
    start: int
    end: int
    message_indices: tuple[int, ...]

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def msg_count(self) -> int:
        return len(self.message_indices)


@dataclass(frozen=True)
class GroupSession:
    group_id: str
    start: int
    end: int
    per_user_counts: Mapping[str, int]
    message_indices: tuple[int, ...] = ()

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def msg_count(self) -> int:
        return sum(self.per_user_counts.values())

    @property
    def user_count(self) -> int:
        return len(self.per_user_counts)


def split_runs(times: Sequence[int], threshold: int) -> list[tuple[int, int]]:
    """Half-open index ranges ``[i, j)`` of maximal runs over sorted ``times``."""
    if not len(times):
        return []
    t = np.asarray(times, dtype=np.int64)
    cuts = np.flatnonzero(np.diff(t) > threshold) + 1
    bounds = [0, *cuts.tolist(), len(t)]
    return list(zip(bounds[:-1], bounds[1:]))


def build_user_sessions(log: MessageLog, user_threshold: int = DEFAULT_USER_THRESHOLD) -> list[UserSession]:
    """Sessions of every user, ordered by start time (ties by first message)."""
    if user_threshold <= 0:
        raise ConfigError("user_threshold must be positive")
    per_user: dict[str, list[int]] = {}
    for idx, m in enumerate(log.messages):
        per_user.setdefault(m.user_id, []).append(idx)

    sessions = []
    for user, indices in per_user.items():
        times = [log.messages[i].timestamp for i in indices]
        for i, j in split_runs(times, user_threshold):
            sessions.append(UserSession(user, log.group_id, times[i], times[j - 1], tuple(indices[i:j])))
    sessions.sort(key=lambda s: (s.start, s.message_indices[0]))
    return sessions


def build_group_sessions(log: MessageLog, group_threshold: int = DEFAULT_GROUP_THRESHOLD) -> list[GroupSession]:
    """Sessions of the pooled group stream."""
    if group_threshold <= 0:
        raise ConfigError("group_threshold must be positive")
    msgs = log.messages
    sessions = []
    for i, j in split_runs(log.timestamps, group_threshold):
        counts = Counter(m.user_id for m in msgs[i:j])
        sessions.append(GroupSession(log.group_id, msgs[i].timestamp, msgs[j - 1].timestamp,
                                     dict(counts), tuple(range(i, j))))
    return sessions


@dataclass(frozen=True)
class GapHistogram:
    """Distinct positive silence gaps (minutes) with how often each occurs."""

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        entries = tuple((int(g), int(f)) for g, f in self.entries)
        gaps = [g for g, _ in entries]
        if any(g <= 0 for g in gaps) or any(f <= 0 for _, f in entries):
            raise ValueError("gaps and frequencies must be positive")
        if gaps != sorted(set(gaps)):
            raise ValueError("gaps must be unique and ascending")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_gaps(cls, gaps: Iterable[int]) -> "GapHistogram":
        tally = Counter(g for g in gaps if g > 0)
        return cls(tuple(sorted(tally.items())))

    def __len__(self) -> int:
        return len(self.entries)

    def merged(self, other: "GapHistogram") -> "GapHistogram":
        tally = Counter(dict(self.entries))
        tally.update(dict(other.entries))
        return GapHistogram(tuple(sorted(tally.items())))


def silence_gap_histogram(log: MessageLog) -> GapHistogram:
    if len(log) < 2:
        raise InsufficientDataError("insufficient data: need at least two messages")
    hist = GapHistogram.from_gaps(np.diff(log.timestamps).tolist())
    if not hist.entries:
        raise InsufficientDataError("insufficient data: all messages share one minute")
    return hist


def elbow_threshold(hist: GapHistogram) -> int:
    """Silence gap where the gap-frequency curve first meets the identity line.

    Gap (x) and frequency (y) are each min-max scaled to [0, 1]; the result
    is the smallest gap whose point satisfies ``y <= x``. Scaling all
    frequencies by a constant does not change the answer.
    """
    if not hist.entries:
        raise InsufficientDataError("empty gap histogram")
    if len(hist) == 1:
        return hist.entries[0][0]
    gaps = np.array([g for g, _ in hist.entries], dtype=float)
    freqs = np.array([f for _, f in hist.entries], dtype=float)
    x = (gaps - gaps[0]) / (gaps[-1] - gaps[0])
    f_span = freqs.max() - freqs.min()
    y = (freqs - freqs.min()) / f_span if f_span > 0 else np.zeros_like(freqs)
    # the last point has x == 1 >= y, so a crossing always exists
    return int(gaps[np.flatnonzero(y <= x)[0]])


def combined_elbow(hists: Sequence[GapHistogram], mode: Literal["mean", "pooled"] = "mean") -> int:
    """Threshold for several groups at once.

    ``mean`` averages the per-group elbows (rounded to a whole minute);
    ``pooled`` sums the histograms first and takes one elbow.
    """
    if not hists:
        raise InsufficientDataError("no histograms")
    if mode == "mean":
        return int(round(float(np.mean([elbow_threshold(h) for h in hists]))))
    if mode == "pooled":
        total = hists[0]
        for h in hists[1:]:
            total = total.merged(h)
        return elbow_threshold(total)
    raise ConfigError(f"unknown aggregation mode {mode!r}")


def concurrency_profile(user_sessions: Iterable[UserSession], gs: GroupSession) -> tuple[list[tuple[int, int]], int]:
    """Per-minute count of open user sessions over ``[gs.start, gs.end]``.

    Returns ``(profile, peak)``.
    """
    width = gs.end - gs.start + 1
    delta = np.zeros(width + 1, dtype=np.int64)
    for s in user_sessions:
        if s.group_id != gs.group_id or s.end < gs.start or s.start > gs.end:
            continue
        delta[max(s.start, gs.start) - gs.start] += 1
        delta[min(s.end, gs.end) - gs.start + 1] -= 1
    counts = np.cumsum(delta[:-1])
    profile = list(zip(range(gs.start, gs.end + 1), counts.tolist()))
    return profile, int(counts.max()) if width else 0


def peak_concurrency(user_sessions: Sequence[UserSession], group_sessions: Sequence[GroupSession]) -> list[int]:
    """Peak number of simultaneous user sessions inside each group session.

    Both session lists must come from the same log. Each user session is only
    checked against the group sessions its first and last message fall in
    (and any in between), which keeps this linear in practice.
    """
    owner = {}
    for k, gs in enumerate(group_sessions):
        for i in gs.message_indices:
            owner[i] = k
    buckets: list[list[UserSession]] = [[] for _ in group_sessions]
    for s in user_sessions:
        for k in range(owner[s.message_indices[0]], owner[s.message_indices[-1]] + 1):
            buckets[k].append(s)
    return [concurrency_profile(b, gs)[1] for b, gs in zip(buckets, group_sessions)]


def session_records(sessions: Iterable[UserSession | GroupSession]) -> list[str]:
    """One canonical JSON line per session."""
    lines = []
    for s in sessions:
        rec = {"group": s.group_id, "start": s.start, "end": s.end, "msg_count": s.msg_count}
        if isinstance(s, UserSession):
            rec["user"] = s.user_id
        else:
            rec["per_user_counts"] = dict(sorted(s.per_user_counts.items()))
        lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    return lines
