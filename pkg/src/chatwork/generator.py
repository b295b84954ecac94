"""Synthetic group traces from an ON/OFF session model.

Every user alternates OFF (silent) and ON (session) periods. A session opens
with a message and continues with messages spaced by sampled inter-arrival
times until the ON period ends. User ``u`` (1-based) has its OFF periods
stretched by ``u ** skew``, so message volume falls off roughly as
``u ** -skew`` and the rank-frequency curve follows a Zipf law.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime
from typing import IO, Mapping

import numpy as np

from .ingest import ConfigError, ContentFlags, Message, MessageLog, minutes_from_datetime

__all__ = [
    "Dist",
    "GeneratorParams",
    "GroundTruth",
    "RoundTripReport",
    "generate_trace",
    "generate_with_truth",
    "load_params",
    "round_trip_check",
    "sample_durations",
]

FAMILIES = ("exponential", "lognormal")
DEFAULT_START = minutes_from_datetime(datetime(2017, 10, 10))


@dataclass(frozen=True)
class Dist:
    """A positive duration distribution in minutes.

    ``lognormal`` is parametrized by its mean and the log-space ``sigma``.
    """

    family: str = "exponential"
    mean: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown distribution family {self.family!r}")
        if not (self.mean > 0 and self.sigma > 0):
            raise ConfigError("distribution parameters must be positive")

    @property
    def variance(self) -> float:
        if self.family == "exponential":
            return self.mean ** 2
        return (math.exp(self.sigma ** 2) - 1) * self.mean ** 2

    def sample(self, rng: np.random.Generator, size=None, scale: float = 1.0):
        if self.family == "exponential":
            return rng.exponential(self.mean * scale, size)
        mu = math.log(self.mean * scale) - self.sigma ** 2 / 2
        return rng.lognormal(mu, self.sigma, size)


def sample_durations(dist: Dist, n: int, seed: int = 0) -> np.ndarray:
    return dist.sample(np.random.default_rng(seed), n)


def _default_mix() -> dict[str, float]:
    return {"text": 0.62, "media": 0.2, "emoji": 0.08, "text+link": 0.06, "text+emoji": 0.04}


@dataclass(frozen=True)
class GeneratorParams:
    """Model parameters. Defaults are illustrative, not fitted to any data."""

    n_users: int = 50
    horizon_min: int = 28 * 1440
    on: Dist = Dist("exponential", 20.0)
    off: Dist = Dist("exponential", 600.0)
    iat: Dist = Dist("exponential", 3.0)
    skew: float = 1.0
    content_mix: Mapping[str, float] = field(default_factory=_default_mix)
    seed: int = 0
    group_id: str = "synthetic"
    start_minute: int = DEFAULT_START

    def __post_init__(self):
        if self.n_users < 0 or self.horizon_min < 0:
            raise ConfigError("n_users and horizon_min must be non-negative")
        if self.skew < 0:
            raise ConfigError("skew must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.content_mix:
            raise ConfigError("content_mix is empty")
        for pattern, p in self.content_mix.items():
            _pattern_flags(pattern)
            if p < 0:
                raise ConfigError(f"negative probability for {pattern!r}")
        if abs(sum(self.content_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("content_mix probabilities must sum to 1")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "GeneratorParams":
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown generator params: {sorted(unknown)}")
        kwargs = dict(data)
        try:
            for key in ("on", "off", "iat"):
                if key in kwargs:
                    kwargs[key] = Dist(**kwargs[key])
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["content_mix"] = dict(self.content_mix)
        return d


def load_params(stream: IO[str], **overrides) -> GeneratorParams:
    try:
        data = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"params file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("params file must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return GeneratorParams.from_mapping(data)


def _pattern_flags(pattern: str) -> ContentFlags:
    try:
        flags = ContentFlags.from_names(p.strip() for p in pattern.split("+"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not flags:
        raise ConfigError(f"empty content pattern {pattern!r}")
    return flags


@dataclass
class GroundTruth:
    """What the generator actually drew, for checking estimators."""

    on_periods: int = 0
    # OFF draws before the per-user skew stretch, i.e. samples of ``params.off``
    off_draws: list[float] = field(default_factory=list)
    # gap from the last message of an ON period to the first of the next one
    toff: list[int] = field(default_factory=list)
    per_user_messages: dict[str, int] = field(default_factory=dict)


def _user_id(u: int) -> str:
    return f"user{u:04d}"


class _Draws:
    """Block-buffered draws from one distribution on a shared generator."""

    BLOCK = 4096

    def __init__(self, dist: Dist, rng: np.random.Generator):
        self.dist, self.rng = dist, rng
        self.buf: list[float] = []
        self.pos = 0

    def next(self) -> float:
        if self.pos == len(self.buf):
            self.buf = self.dist.sample(self.rng, self.BLOCK).tolist()
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]


def generate_with_truth(params: GeneratorParams) -> tuple[MessageLog, GroundTruth]:
    rng = np.random.default_rng(params.seed)
    on_draws, off_draws, iat_draws = (_Draws(d, rng) for d in (params.on, params.off, params.iat))
    truth = GroundTruth()
    times: list[int] = []
    owners: list[int] = []
    horizon = params.horizon_min

    for u in range(1, params.n_users + 1):
        scale = float(u) ** params.skew
        t = rng.uniform(0.0, params.off.mean * scale)
        prev_last = None
        n_user = 0
        while t < horizon:
            end = min(t + on_draws.next(), horizon)
            minutes = [int(t)]
            cursor = t + iat_draws.next()
            while cursor <= end:
                minutes.append(int(cursor))
                cursor += iat_draws.next()
            if prev_last is not None:
                truth.toff.append(minutes[0] - prev_last)
            prev_last = minutes[-1]
            times.extend(minutes)
            owners.extend([u] * len(minutes))
            n_user += len(minutes)
            truth.on_periods += 1
            off = off_draws.next()
            truth.off_draws.append(off)
            t = end + off * scale
        if n_user:
            truth.per_user_messages[_user_id(u)] = n_user

    n = len(times)
    patterns = list(params.content_mix)
    probs = np.array([params.content_mix[p] for p in patterns], dtype=float)
    choice = rng.choice(len(patterns), size=n, p=probs / probs.sum()) if n else np.array([], int)
    lengths = rng.poisson(40.0, size=n) + 1 if n else np.array([], int)
    flags = [_pattern_flags(p) for p in patterns]

    user_ids = [""] + [_user_id(u) for u in range(1, params.n_users + 1)]
    order = sorted(range(n), key=times.__getitem__)
    messages = []
    for i in order:
        f = flags[choice[i]]
        text_len = int(lengths[i]) if (f.has_text or f.has_link or f.has_emoji) else 0
        messages.append(Message(params.group_id, user_ids[owners[i]],
                                params.start_minute + times[i], f, text_len))
    period = (params.start_minute, params.start_minute + horizon) if horizon else None
    return MessageLog(params.group_id, tuple(messages), period if messages else None), truth


def generate_trace(params: GeneratorParams) -> MessageLog:
    """Deterministic synthetic log; same params and seed give the same log."""
    return generate_with_truth(params)[0]


@dataclass(frozen=True)
class RoundTripReport:
    generated_on_periods: int
    recovered_user_sessions: int
    session_count_rel_err: float
    true_toff_mean: float | None
    recovered_toff_mean: float | None
    toff_rel_err: float | None
    off_mean_param: float
    off_sample_mean: float | None
    expected_zipf_slope: float
    fitted_zipf_slope: float | None
    zipf_r2: float | None
    zipf_slope_abs_err: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else float("inf") if a else 0.0


def round_trip_check(params: GeneratorParams, user_threshold: int = 15) -> RoundTripReport:
    """Generate a trace, sessionize it, and compare with what was generated."""
    from .metrics import user_toff
    from .sessionizer import build_user_sessions
    from .statfit import rank_frequency, zipf_fit

    log, truth = generate_with_truth(params)
    sessions = build_user_sessions(log, user_threshold)
    recovered_toff = user_toff(sessions)
    true_toff = float(np.mean(truth.toff)) if truth.toff else None
    rec_toff = float(np.mean(recovered_toff)) if recovered_toff else None

    fit = None
    if len(truth.per_user_messages) >= 2:
        counts: dict[str, int] = {}
        for m in log.messages:
            counts[m.user_id] = counts.get(m.user_id, 0) + 1
        fit = zipf_fit(rank_frequency(counts))

    return RoundTripReport(
        generated_on_periods=truth.on_periods,
        recovered_user_sessions=len(sessions),
        session_count_rel_err=_rel(len(sessions), truth.on_periods),
        true_toff_mean=true_toff,
        recovered_toff_mean=rec_toff,
        toff_rel_err=_rel(rec_toff, true_toff) if true_toff and rec_toff is not None else None,
        off_mean_param=params.off.mean,
        off_sample_mean=float(np.mean(truth.off_draws)) if truth.off_draws else None,
        expected_zipf_slope=-params.skew,
        fitted_zipf_slope=fit.slope if fit else None,
        zipf_r2=fit.r2 if fit else None,
        zipf_slope_abs_err=abs(fit.slope + params.skew) if fit else None,
    )

