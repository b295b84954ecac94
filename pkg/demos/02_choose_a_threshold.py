"""Picking the group-session threshold from the silence-gap histogram.

Run from the repository root:  python3 demos/02_choose_a_threshold.py
"""
# %%
from chatwork.generator import Dist, GeneratorParams, generate_trace
from chatwork.sessionizer import (
    build_group_sessions,
    combined_elbow,
    elbow_threshold,
    silence_gap_histogram,
)

# Two synthetic groups with different rhythms stand in for real exports.
busy = generate_trace(GeneratorParams(n_users=60, horizon_min=14 * 1440, seed=1,
                                      off=Dist("exponential", 200.0), group_id="busy"))
quiet = generate_trace(GeneratorParams(n_users=15, horizon_min=14 * 1440, seed=2,
                                       off=Dist("exponential", 900.0), group_id="quiet"))

# %%
# Count how often each silence length occurs.  Short gaps dominate.
hists = {}
for log in (busy, quiet):
    h = silence_gap_histogram(log)
    hists[log.group_id] = h
    head = ", ".join(f"{g}m:{f}" for g, f in h.entries[:6])
    print(f"{log.group_id:6s} {len(log):5d} msgs  gaps {head} ...")

# %%
# The elbow is where the normalized frequency curve drops under the
# diagonal.  Scaling the frequencies does not move it.
for name, h in hists.items():
    print(f"{name}: elbow at {elbow_threshold(h)} min")

print("mean of per-group elbows:", combined_elbow(list(hists.values()), "mean"))
print("elbow of pooled histogram:", combined_elbow(list(hists.values()), "pooled"))

# %%
# How much the choice matters: session counts over a range of thresholds.
for th in (5, 15, 30, 60, 81, 120, 240):
    print(f"threshold {th:3d}: busy {len(build_group_sessions(busy, th)):4d} sessions, "
          f"quiet {len(build_group_sessions(quiet, th)):4d}")
