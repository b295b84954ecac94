"""Workload characterization of group-chat message logs.

Messages are grouped into user sessions and group sessions (ON/OFF model),
then described at three layers: messages, users and groups.
"""

from .generator import Dist, GeneratorParams, generate_trace, round_trip_check
from .ingest import (
    ContentFlags,
    FormatConfig,
    Message,
    MessageLog,
    Roster,
    anonymize,
    classify_content,
    load_roster,
    parse_export,
    read_records,
    write_records,
)
from .metrics import (
    activity_ratio,
    content_breakdown,
    day_period_iat,
    group_session_metrics,
    group_toff,
    message_iat,
    session_entropy,
    user_metrics,
    user_session_metrics,
    user_toff,
)
from .report import AnalysisConfig, analyze_log
from .sessionizer import (
    GapHistogram,
    GroupSession,
    Thresholds,
    UserSession,
    build_group_sessions,
    build_user_sessions,
    concurrency_profile,
    elbow_threshold,
    silence_gap_histogram,
)
from .statfit import ecdf, rank_frequency, summary_stats, zipf_fit
from .typology import RoleThresholds, UserRole, classify_users

__version__ = "0.1.0"
