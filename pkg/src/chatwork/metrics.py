"""Message-, user- and group-layer metrics.

All percentages are kept at full precision; rounding happens only when a
report is serialized.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .ingest import FLAG_NAMES, MessageLog
from .sessionizer import GroupSession, UserSession

__all__ = [
    "DAY_PERIODS",
    "ContentBreakdown",
    "DayPeriodStats",
    "GroupSessionMetrics",
    "UserMetrics",
    "activity_ratio",
    "content_breakdown",
    "day_period",
    "day_period_iat",
    "group_session_interarrivals",
    "group_session_metrics",
    "group_toff",
    "message_iat",
    "session_entropy",
    "user_message_iat",
    "user_metrics",
    "user_session_metrics",
    "user_toff",
]

DAY_PERIODS = ("early_hours", "morning", "afternoon", "evening")


def day_period(minute: int, tz_offset_min: int = 0) -> str:
    """Local 6-hour block (00-05, 06-11, 12-17, 18-23) of an epoch minute."""
    hour = ((minute + tz_offset_min) % 1440) // 60
    return DAY_PERIODS[hour // 6]


# -- message layer -----------------------------------------------------------

def message_iat(log: MessageLog) -> list[int]:
    if len(log) < 2:
        return []
    return np.diff(log.timestamps).tolist()


def user_message_iat(log: MessageLog) -> list[int]:
    """IATs between consecutive messages of the same user, pooled over users."""
    last: dict[str, int] = {}
    out = []
    for m in log.messages:
        if m.user_id in last:
            out.append(m.timestamp - last[m.user_id])
        last[m.user_id] = m.timestamp
    return out


def activity_ratio(log: MessageLog, bin_min: int = 60) -> list[tuple[int, float]]:
    """Messages per distinct sender in each non-empty bin of ``bin_min`` minutes."""
    if bin_min <= 0:
        raise ValueError("bin must be positive")
    msgs: Counter[int] = Counter()
    users: dict[int, set[str]] = {}
    for m in log.messages:
        b = (m.timestamp // bin_min) * bin_min
        msgs[b] += 1
        users.setdefault(b, set()).add(m.user_id)
    return [(b, msgs[b] / len(users[b])) for b in sorted(msgs)]


@dataclass(frozen=True)
class DayPeriodStats:
    period: str
    mean_iat_min: float | None
    sample_count: int


def day_period_iat(log: MessageLog, tz_offset_min: int = 0) -> list[DayPeriodStats]:
    """Mean message IAT per period of the day.

    Each IAT belongs to the period of its earlier message.
    """
    buckets: dict[str, list[int]] = {p: [] for p in DAY_PERIODS}
    msgs = log.messages
    for a, b in zip(msgs, msgs[1:]):
        buckets[day_period(a.timestamp, tz_offset_min)].append(b.timestamp - a.timestamp)
    return [
        DayPeriodStats(p, (sum(v) / len(v)) if v else None, len(v))
        for p, v in buckets.items()
    ]


@dataclass(frozen=True)
class ContentBreakdown:
    total: int
    counts: dict[str, int]
    by_period: dict[str, dict[str, int]]
    period_totals: dict[str, int]

    @property
    def pct(self) -> dict[str, float]:
        return _pct(self.counts, self.total)

    def period_pct(self, period: str) -> dict[str, float]:
        return _pct(self.by_period[period], self.period_totals[period])


def _pct(counts: Mapping[str, int], total: int) -> dict[str, float]:
    return {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}


def content_breakdown(log: MessageLog, tz_offset_min: int = 0) -> ContentBreakdown:
    """Per-flag message counts, overall and per day period.

    A message can carry several flags, so percentages may sum above 100.
    """
    counts = dict.fromkeys(FLAG_NAMES, 0)
    by_period = {p: dict.fromkeys(FLAG_NAMES, 0) for p in DAY_PERIODS}
    totals = dict.fromkeys(DAY_PERIODS, 0)
    for m in log.messages:
        p = day_period(m.timestamp, tz_offset_min)
        totals[p] += 1
        for name in m.content.names():
            counts[name] += 1
            by_period[p][name] += 1
    return ContentBreakdown(len(log), counts, by_period, totals)


# -- user layer --------------------------------------------------------------

@dataclass(frozen=True)
class UserMetrics:
    user_id: str
    msg_count: int
    msg_pct: float
    group_session_count: int
    group_session_pct: float
    user_session_count: int


def user_metrics(log: MessageLog, user_sessions: Sequence[UserSession],
                 group_sessions: Sequence[GroupSession]) -> list[UserMetrics]:
    """The five per-user metrics for every active user, sorted by user id."""
    total = len(log)
    n_gs = len(group_sessions)
    msg_counts = Counter(m.user_id for m in log.messages)
    gs_counts: Counter[str] = Counter()
    for gs in group_sessions:
        gs_counts.update(gs.per_user_counts.keys())
    us_counts = Counter(s.user_id for s in user_sessions)
    return [
        UserMetrics(
            user_id=u,
            msg_count=c,
            msg_pct=100.0 * c / total,
            group_session_count=gs_counts[u],
            group_session_pct=100.0 * gs_counts[u] / n_gs if n_gs else 0.0,
            user_session_count=us_counts[u],
        )
        for u, c in sorted(msg_counts.items())
    ]


def user_session_metrics(user_sessions: Sequence[UserSession]) -> list[tuple[int, int]]:
    """(message count, duration in minutes) per user session."""
    return [(s.msg_count, s.duration) for s in user_sessions]


def _toff(sessions) -> list[int]:
    ordered = sorted(sessions, key=lambda s: s.start)
    return [b.start - a.end for a, b in zip(ordered, ordered[1:])]


def user_toff(user_sessions: Sequence[UserSession]) -> list[int]:
    """OFF times between consecutive sessions of the same user, pooled."""
    per_user: dict[str, list[UserSession]] = {}
    for s in user_sessions:
        per_user.setdefault(s.user_id, []).append(s)
    out = []
    for u in sorted(per_user):
        out.extend(_toff(per_user[u]))
    return out


def group_toff(group_sessions: Sequence[GroupSession]) -> list[int]:
    return _toff(group_sessions)


def group_session_interarrivals(group_sessions: Sequence[GroupSession]) -> list[int]:
    """Start-to-start times between consecutive group sessions."""
    starts = sorted(s.start for s in group_sessions)
    return [b - a for a, b in zip(starts, starts[1:])]


# -- group layer -------------------------------------------------------------

def session_entropy(gs: GroupSession | Mapping[str, int]) -> float:
    """Shannon entropy (bits) of the per-user message shares, over log2(#users).

    A single-speaker session gets 0.
    """
    counts = gs.per_user_counts if isinstance(gs, GroupSession) else gs
    values = [c for c in counts.values() if c > 0]
    if not values:
        raise ValueError("entropy of an empty session")
    if len(values) == 1:
        return 0.0
    total = sum(values)
    h = -sum((c / total) * math.log2(c / total) for c in values)
    return min(1.0, max(0.0, h / math.log2(len(values))))


@dataclass(frozen=True)
class GroupSessionMetrics:
    msg_count: int
    msg_coverage_pct: float
    user_count: int
    user_coverage_pct: float
    entropy_norm: float
    duration_min: int


def group_session_metrics(group_sessions: Sequence[GroupSession], active_user_count: int,
                          total_messages: int) -> list[GroupSessionMetrics]:
    out = []
    for gs in group_sessions:
        n = gs.msg_count
        out.append(GroupSessionMetrics(
            msg_count=n,
            msg_coverage_pct=100.0 * n / total_messages if total_messages else 0.0,
            user_count=gs.user_count,
            user_coverage_pct=100.0 * gs.user_count / active_user_count if active_user_count else 0.0,
            entropy_norm=session_entropy(gs),
            duration_min=gs.duration,
        ))
    return out
