"""Message shares, participation entropy, rank-frequency fit and user roles.

Run from the repository root:  python3 demos/03_who_talks.py
"""
# %%
from collections import Counter

import numpy as np

from chatwork.generator import GeneratorParams, generate_trace
from chatwork.ingest import Roster
from chatwork.metrics import content_breakdown, group_session_metrics, user_metrics
from chatwork.sessionizer import build_group_sessions, build_user_sessions
from chatwork.statfit import ecdf, rank_frequency, summary_stats, zipf_fit
from chatwork.typology import classify_users, role_counts

log = generate_trace(GeneratorParams(n_users=80, horizon_min=30 * 1440, skew=1.3, seed=5))
us, gs = build_user_sessions(log), build_group_sessions(log)
print(f"{len(log)} messages, {len(us)} user sessions, {len(gs)} group sessions")

# %%
# What people post.  A message can count towards several types.
cb = content_breakdown(log)
print({k: round(v, 1) for k, v in cb.pct.items()})

# %%
# Evenness of each group session: 0 means one person did all the talking.
gsm = group_session_metrics(gs, len(log.senders), len(log))
multi = [m.entropy_norm for m in gsm if m.user_count > 1]
s = summary_stats(multi)
print(f"entropy over {s.n} multi-user sessions: median {s.quantiles[50]:.2f}, p5 {s.quantiles[5]:.2f}")
cdf = ecdf(multi)
print(f"share of sessions with entropy <= 0.5: {cdf(0.5):.2f}")

# %%
# Rank-frequency of message counts on log-log axes.
pairs = rank_frequency(Counter(m.user_id for m in log))
fit = zipf_fit(pairs)
print(f"Zipf slope {fit.slope:.2f}, R^2 {fit.r2:.3f}; top 3 users post "
      f"{100 * sum(f for _, f in pairs[:3]) / len(log):.0f}% of messages")

# %%
# Roles.  The roster adds members who never posted, who come out passive.
metrics = user_metrics(log, us, gs)
roster = Roster("synthetic", frozenset(log.senders) | {f"lurker{i}" for i in range(20)})
roles = classify_users(metrics, roster)
print(role_counts(roles))
top = max(metrics, key=lambda m: m.msg_pct)
print(f"most active: {top.user_id} with {top.msg_pct:.1f}% of messages in "
      f"{top.group_session_pct:.1f}% of sessions -> {roles[top.user_id].value}")
print("median msg share:", np.median([m.msg_pct for m in metrics]).round(2))
