"""Generate ON/OFF traffic, run the estimators on it, compare with the truth.

Run from the repository root:  python3 demos/04_synthetic_round_trip.py
"""
# %%
from chatwork.generator import Dist, GeneratorParams, generate_with_truth, round_trip_check
from chatwork.metrics import user_toff
from chatwork.sessionizer import build_user_sessions
from chatwork.statfit import summary_stats

# OFF periods are drawn with mean 81 minutes and stretched by user rank
# raised to ``skew``, so low-ranked users post far less often.
params = GeneratorParams(n_users=200, horizon_min=500_000, seed=2017, skew=1.0,
                         on=Dist("exponential", 5.0), off=Dist("exponential", 81.0),
                         iat=Dist("exponential", 2.0))
log, truth = generate_with_truth(params)
print(f"{len(log)} messages from {len(truth.per_user_messages)} users, {truth.on_periods} ON periods")

# %%
# Sessionizing recovers the ON periods, except where an OFF gap happened to
# be shorter than the threshold and two periods merged.
sessions = build_user_sessions(log, 15)
print(f"recovered {len(sessions)} sessions ({len(sessions) / truth.on_periods:.1%} of ON periods)")
print("recovered T_off:", {k: round(v, 1) for k, v in summary_stats(user_toff(sessions)).as_dict().items()
                           if k in ("mean", "min", "max")})

# %%
rep = round_trip_check(params)
print(f"Zipf slope {rep.fitted_zipf_slope:.3f} (expected {rep.expected_zipf_slope}), R^2 {rep.zipf_r2:.3f}")
print(f"OFF draws: mean {rep.off_sample_mean:.1f} vs parameter {rep.off_mean_param}")

# %%
# With no skew every user behaves the same and the rank-frequency curve is flat.
flat = GeneratorParams(n_users=50, horizon_min=800_000, seed=3, skew=0.0,
                       on=Dist("exponential", 1.0), off=Dist("exponential", 200.0),
                       iat=Dist("exponential", 2.0))
print(f"skew 0: slope {round_trip_check(flat).fitted_zipf_slope:.3f}")
