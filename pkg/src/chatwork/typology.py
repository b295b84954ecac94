"""User roles from participation in sessions versus share of messages.

Session axis: a user is "high" when they appear in more than
``session_pct_high`` percent of the group sessions. Message axis has three
bands split at ``msg_pct_low`` and ``msg_pct_high``:

=================  ======================  ===============  ==========
                   msg < low               low <= msg < hi  msg >= hi
=================  ======================  ===============  ==========
sessions high      interested_audience     opinionated      host
sessions low       casual                  casual           opinionated
=================  ======================  ===============  ==========

Roster members without messages are ``passive``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .ingest import ConfigError, Roster
from .metrics import UserMetrics

__all__ = ["RoleThresholds", "UserRole", "classify_user", "classify_users", "role_counts"]


class UserRole(str, Enum):
    HOST = "host"
    INTERESTED_AUDIENCE = "interested_audience"
    OPINIONATED = "opinionated"
    CASUAL = "casual"
    PASSIVE = "passive"


@dataclass(frozen=True)
class RoleThresholds:
    session_pct_high: float = 10.0
    msg_pct_low: float = 0.1
    msg_pct_high: float = 5.0

    def __post_init__(self):
        for name in ("session_pct_high", "msg_pct_low", "msg_pct_high"):
            v = getattr(self, name)
            if not 0 < v < 100:
                raise ConfigError(f"{name} must lie in (0, 100), got {v}")
        if not self.msg_pct_low < self.msg_pct_high:
            raise ConfigError("msg_pct_low must be below msg_pct_high")


def classify_user(msg_pct: float, session_pct: float, th: RoleThresholds = RoleThresholds()) -> UserRole:
    if session_pct > th.session_pct_high:
        if msg_pct < th.msg_pct_low:
            return UserRole.INTERESTED_AUDIENCE
        return UserRole.HOST if msg_pct >= th.msg_pct_high else UserRole.OPINIONATED
    return UserRole.OPINIONATED if msg_pct >= th.msg_pct_high else UserRole.CASUAL


def classify_users(metrics: Iterable[UserMetrics], roster: Roster | None = None,
                   th: RoleThresholds = RoleThresholds()) -> dict[str, UserRole]:
    """Role of every sender plus every silent roster member, keyed by user id."""
    roles = {m.user_id: classify_user(m.msg_pct, m.group_session_pct, th) for m in metrics}
    if roster is not None:
        for member in sorted(roster.members - roles.keys()):
            roles[member] = UserRole.PASSIVE
    return dict(sorted(roles.items()))


def role_counts(roles: dict[str, UserRole]) -> dict[str, int]:
    counts = {r.value: 0 for r in UserRole}
    for r in roles.values():
        counts[r.value] += 1
    return counts
