"""Empirical distributions and rank-frequency (Zipf) fitting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "CdfSeries",
    "QUANTILES",
    "SummaryStats",
    "ZipfFit",
    "ecdf",
    "rank_frequency",
    "summary_stats",
    "zipf_fit",
    "zipf_table",
]

QUANTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class CdfSeries:
    """Right-continuous step function over the distinct sample values."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.probs))

    def __call__(self, x: float) -> float:
        i = np.searchsorted(self.values, x, side="right")
        return 0.0 if i == 0 else self.probs[i - 1]


def ecdf(samples: Sequence[float]) -> CdfSeries:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("ecdf of an empty sample")
    values, counts = np.unique(x, return_counts=True)
    probs = np.cumsum(counts) / x.size
    probs[-1] = 1.0
    return CdfSeries(tuple(values.tolist()), tuple(probs.tolist()))


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    std: float  # population standard deviation
    min: float
    max: float
    quantiles: dict[int, float]

    def as_dict(self) -> dict:
        return {
            "n": self.n, "mean": self.mean, "std": self.std, "min": self.min, "max": self.max,
            "quantiles": {f"p{q}": v for q, v in self.quantiles.items()},
        }


def summary_stats(samples: Sequence[float]) -> SummaryStats:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("summary of an empty sample")
    qs = np.percentile(x, QUANTILES)
    return SummaryStats(
        n=int(x.size),
        mean=float(x.mean()),
        std=float(x.std()),
        min=float(x.min()),
        max=float(x.max()),
        quantiles={q: float(v) for q, v in zip(QUANTILES, qs)},
    )


def rank_frequency(msg_counts: Mapping[str, int]) -> list[tuple[int, int]]:
    """Ranks 1..k by descending count; equal counts are ordered by user id."""
    if not msg_counts:
        raise ValueError("rank_frequency of an empty mapping")
    ordered = sorted(msg_counts.items(), key=lambda kv: (-kv[1], str(kv[0])))
    return [(rank, count) for rank, (_, count) in enumerate(ordered, start=1)]


@dataclass(frozen=True)
class ZipfFit:
    """Least-squares line ``log10(freq) = slope * log10(rank) + intercept``."""

    slope: float
    intercept: float
    r2: float
    n_points: int

    def predict(self, rank):
        return 10.0 ** (self.intercept + self.slope * np.log10(rank))

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "n_points": self.n_points}


def zipf_fit(pairs: Sequence[tuple[float, float]]) -> ZipfFit:
    if len(pairs) < 2:
        raise ValueError("zipf_fit needs at least two (rank, frequency) pairs")
    arr = np.asarray(pairs, dtype=float)
    rank, freq = arr[:, 0], arr[:, 1]
    if np.any(freq <= 0) or np.any(rank <= 0):
        raise ValueError("ranks and frequencies must be positive for a log-log fit")
    x, y = np.log10(rank), np.log10(freq)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("zipf_fit needs at least two distinct ranks")
    if np.all(freq == freq[0]):
        # a flat curve is fitted exactly by a zero slope; the mean of equal
        # logs can be off by an ulp, so don't let rounding noise set r2
        return ZipfFit(0.0, float(y[0]), 1.0, len(pairs))
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = yc - slope * xc
    ss_res, ss_tot = float(resid @ resid), float(yc @ yc)
    r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return ZipfFit(slope, intercept, r2, len(pairs))


def zipf_table(pairs: Sequence[tuple[int, int]], fit: ZipfFit) -> list[tuple[int, int, float]]:
    """(rank, frequency, fitted frequency) triples for export."""
    return [(r, f, float(fit.predict(r))) for r, f in pairs]
