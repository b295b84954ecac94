"""Per-group analysis bundle: JSON report document plus CSV tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Literal, Sequence

from . import metrics as M
from .ingest import MessageLog, Roster, passive_users
from .sessionizer import (
    DEFAULT_GROUP_THRESHOLD,
    DEFAULT_USER_THRESHOLD,
    InsufficientDataError,
    build_group_sessions,
    build_user_sessions,
    elbow_threshold,
    peak_concurrency,
    silence_gap_histogram,
)
from .statfit import ecdf, rank_frequency, summary_stats, zipf_fit, zipf_table
from .typology import RoleThresholds, classify_users, role_counts

__all__ = ["AnalysisConfig", "GroupReport", "analyze_log", "dumps_report"]

REPORT_VERSION = 1


@dataclass(frozen=True)
class AnalysisConfig:
    user_threshold: int = DEFAULT_USER_THRESHOLD
    group_threshold: int | Literal["auto"] = DEFAULT_GROUP_THRESHOLD
    tz_offset_min: int = 0
    activity_bin_min: int = 60
    roles: RoleThresholds = field(default_factory=RoleThresholds)
    # how a fixed group threshold was obtained, recorded in the report
    threshold_source: str = "fixed"


@dataclass
class GroupReport:
    group_id: str
    document: dict
    tables: dict[str, tuple[list[str], list[list]]]

    def csv_files(self) -> dict[str, str]:
        out = {}
        for name, (header, rows) in sorted(self.tables.items()):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            out[f"{name}.csv"] = buf.getvalue()
        return out


def _pct(x: float) -> float:
    return round(x, 2)


def _num(x: float | None) -> float | None:
    return None if x is None else round(float(x), 6)


def _dist(samples: Sequence[float]) -> dict | None:
    """Summary statistics plus the ECDF of a sample, or None when empty."""
    if not len(samples):
        return None
    s = summary_stats(samples)
    cdf = ecdf(samples)
    return {
        "summary": {
            "n": s.n, "mean": _num(s.mean), "std": _num(s.std), "min": _num(s.min), "max": _num(s.max),
            "quantiles": {f"p{q}": _num(v) for q, v in s.quantiles.items()},
        },
        "cdf": {"values": [_num(v) for v in cdf.values], "probs": [_num(p) for p in cdf.probs]},
    }


def _column(values: Sequence[float]) -> tuple[list[str], list[list]]:
    return ["value"], [[_num(v) if isinstance(v, float) else v] for v in values]


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _resolve_threshold(log: MessageLog, config: AnalysisConfig) -> tuple[int, dict]:
    hist = None
    try:
        hist = silence_gap_histogram(log)
    except InsufficientDataError:
        pass
    info = {
        "mode": "auto" if config.group_threshold == "auto" else config.threshold_source,
        "elbow": elbow_threshold(hist) if hist else None,
        "gap_histogram": [list(e) for e in hist.entries] if hist else [],
    }
    if config.group_threshold != "auto":
        return int(config.group_threshold), info
    if info["elbow"] is None:
        info["mode"] = "auto-fallback-default"
        return DEFAULT_GROUP_THRESHOLD, info
    return info["elbow"], info


def analyze_log(log: MessageLog, config: AnalysisConfig = AnalysisConfig(),
                roster: Roster | None = None) -> GroupReport:
    group_threshold, threshold_info = _resolve_threshold(log, config)
    doc: dict = {
        "report_version": REPORT_VERSION,
        "group": log.group_id,
        "category": roster.category if roster else None,
        "thresholds": {
            "user_threshold": config.user_threshold,
            "group_threshold": group_threshold,
            "group_threshold_mode": threshold_info["mode"],
            "elbow": threshold_info["elbow"],
            "tz_offset_min": config.tz_offset_min,
        },
        "empty": len(log) == 0,
    }
    tables: dict[str, tuple[list[str], list[list]]] = {}
    tables["gap_histogram"] = (["gap_min", "frequency"], threshold_info["gap_histogram"])
    if not len(log):
        doc.update(message_layer=None, user_layer=None, group_layer=None, typology=None)
        return GroupReport(log.group_id, doc, tables)

    user_sessions = build_user_sessions(log, config.user_threshold)
    group_sessions = build_group_sessions(log, group_threshold)
    total = len(log)

    # message layer
    iat = M.message_iat(log)
    ratio = M.activity_ratio(log, config.activity_bin_min)
    content = M.content_breakdown(log, config.tz_offset_min)
    doc["message_layer"] = {
        "n_messages": total,
        "period": list(log.period),
        "iat": _dist(iat),
        "activity_ratio": {"bin_min": config.activity_bin_min,
                           "series": [[b, _num(r)] for b, r in ratio]},
        "day_period_iat": [
            {"period": s.period, "mean_iat_min": _num(s.mean_iat_min), "sample_count": s.sample_count}
            for s in M.day_period_iat(log, config.tz_offset_min)
        ],
        "content": {
            "counts": content.counts,
            "pct": {k: _pct(v) for k, v in content.pct.items()},
            "by_period": {
                p: {"total": content.period_totals[p],
                    "pct": {k: _pct(v) for k, v in content.period_pct(p).items()}}
                for p in M.DAY_PERIODS
            },
        },
    }
    tables["message_iat"] = _column(iat)
    tables["activity_ratio"] = (["bin_start", "ratio"], [[b, _num(r)] for b, r in ratio])

    # user layer
    users = M.user_metrics(log, user_sessions, group_sessions)
    us_metrics = M.user_session_metrics(user_sessions)
    utoff = M.user_toff(user_sessions)
    uiat = M.user_message_iat(log)
    pairs = rank_frequency({u.user_id: u.msg_count for u in users})
    fit = zipf_fit(pairs) if len(pairs) >= 2 else None
    passive = sorted(passive_users(roster, log)) if roster else None
    doc["user_layer"] = {
        "active_users": len(users),
        "passive_users": len(passive) if passive is not None else None,
        "roster_members": len(roster.members) if roster else None,
        "users": [
            {"user": u.user_id, "msg_count": u.msg_count, "msg_pct": _pct(u.msg_pct),
             "group_session_count": u.group_session_count,
             "group_session_pct": _pct(u.group_session_pct),
             "user_session_count": u.user_session_count}
            for u in users
        ],
        "distributions": {
            "msg_count": _dist([u.msg_count for u in users]),
            "msg_pct": _dist([u.msg_pct for u in users]),
            "group_session_count": _dist([u.group_session_count for u in users]),
            "group_session_pct": _dist([u.group_session_pct for u in users]),
            "user_session_count": _dist([u.user_session_count for u in users]),
        },
        "user_iat": _dist(uiat),
        "user_toff": _dist(utoff),
        "user_sessions": {
            "count": len(user_sessions),
            "msg_count": _dist([c for c, _ in us_metrics]),
            "duration_min": _dist([d for _, d in us_metrics]),
        },
        "zipf": {
            "fit": None if fit is None else {
                "slope": _num(fit.slope), "intercept": _num(fit.intercept),
                "r2": _num(fit.r2), "n_points": fit.n_points,
            },
            "rank_frequency": [list(p) for p in pairs],
        },
    }
    tables["user_metrics"] = (
        ["user", "msg_count", "msg_pct", "group_session_count", "group_session_pct", "user_session_count"],
        [[u.user_id, u.msg_count, _pct(u.msg_pct), u.group_session_count,
          _pct(u.group_session_pct), u.user_session_count] for u in users],
    )
    tables["user_iat"] = _column(uiat)
    tables["user_toff"] = _column(utoff)
    tables["user_sessions"] = (["msg_count", "duration_min"], [list(x) for x in us_metrics])
    tables["rank_frequency"] = (
        ["rank", "frequency", "fitted"],
        [[r, f, _num(y)] for r, f, y in zipf_table(pairs, fit)] if fit else [[r, f, None] for r, f in pairs],
    )

    # group layer
    gs_metrics = M.group_session_metrics(group_sessions, len(users), total)
    peaks = peak_concurrency(user_sessions, group_sessions)
    gtoff = M.group_toff(group_sessions)
    g_inter = M.group_session_interarrivals(group_sessions)
    doc["group_layer"] = {
        "n_sessions": len(group_sessions),
        "toff": _dist(gtoff),
        "session_interarrival": _dist(g_inter),
        "sessions": [
            {"start": gs.start, "end": gs.end, "msg_count": m.msg_count,
             "msg_coverage_pct": _pct(m.msg_coverage_pct), "user_count": m.user_count,
             "user_coverage_pct": _pct(m.user_coverage_pct), "entropy_norm": _num(m.entropy_norm),
             "duration_min": m.duration_min, "peak_concurrency": peak}
            for gs, m, peak in zip(group_sessions, gs_metrics, peaks)
        ],
        "distributions": {
            "msg_count": _dist([m.msg_count for m in gs_metrics]),
            "msg_coverage_pct": _dist([m.msg_coverage_pct for m in gs_metrics]),
            "user_count": _dist([m.user_count for m in gs_metrics]),
            "user_coverage_pct": _dist([m.user_coverage_pct for m in gs_metrics]),
            "entropy_norm": _dist([m.entropy_norm for m in gs_metrics]),
            "duration_min": _dist([m.duration_min for m in gs_metrics]),
            "peak_concurrency": _dist(peaks),
        },
    }
    tables["group_sessions"] = (
        ["start", "end", "msg_count", "msg_coverage_pct", "user_count", "user_coverage_pct",
         "entropy_norm", "duration_min", "peak_concurrency"],
        [[gs.start, gs.end, m.msg_count, _pct(m.msg_coverage_pct), m.user_count,
          _pct(m.user_coverage_pct), _num(m.entropy_norm), m.duration_min, peak]
         for gs, m, peak in zip(group_sessions, gs_metrics, peaks)],
    )
    tables["group_toff"] = _column(gtoff)

    # typology
    roles = classify_users(users, roster, config.roles)
    by_user = {u.user_id: u for u in users}
    th = config.roles
    doc["typology"] = {
        "thresholds": {"session_pct_high": th.session_pct_high, "msg_pct_low": th.msg_pct_low,
                       "msg_pct_high": th.msg_pct_high},
        "counts": role_counts(roles),
        "roles": {u: r.value for u, r in roles.items()},
    }
    tables["typology"] = (
        ["user", "msg_pct", "session_pct", "role"],
        [[u, _pct(by_user[u].msg_pct) if u in by_user else 0.0,
          _pct(by_user[u].group_session_pct) if u in by_user else 0.0, r.value]
         for u, r in roles.items()],
    )
    return GroupReport(log.group_id, doc, tables)
