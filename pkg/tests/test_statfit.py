import math

import pytest
from hypothesis import given, strategies as st

import oracles
from chatwork.statfit import ecdf, rank_frequency, summary_stats, zipf_fit, zipf_table


class TestEcdf:
    def test_example(self):
        f = ecdf([1, 2, 2, 4])
        assert f(2) == 0.75
        assert f(0.5) == 0.0 and f(1) == 0.25 and f(3) == 0.75 and f(4) == 1.0
        assert f.points == [(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]

    def test_single_sample(self):
        assert ecdf([7]).points == [(7.0, 1.0)]

    def test_empty(self):
        with pytest.raises(ValueError):
            ecdf([])

    def test_matches_sorted_scan(self, rng):
        samples = [rng.random() for _ in range(1000)]
        f = ecdf(samples)
        for x in [rng.random() for _ in range(200)] + samples[:50]:
            assert f(x) == pytest.approx(oracles.ecdf_at(samples, x), abs=1e-12)
        assert f.probs[-1] == 1.0

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=60))
    def test_monotone(self, xs):
        probs = ecdf(xs).probs
        assert all(a < b for a, b in zip(probs, probs[1:]))


class TestSummary:
    def test_example(self):
        s = summary_stats([1, 2, 3])
        assert s.mean == 2.0
        assert s.std == pytest.approx(0.816497, abs=1e-6)
        assert (s.min, s.max, s.quantiles[50]) == (1.0, 3.0, 2.0)

    def test_constant(self):
        s = summary_stats([4] * 9)
        assert s.std == 0.0 and set(s.quantiles.values()) == {4.0}

    def test_two_pass_oracle(self, rng):
        xs = [rng.lognormvariate(3, 1.5) for _ in range(5000)]
        mean, std = oracles.two_pass(xs)
        s = summary_stats(xs)
        assert s.mean == pytest.approx(mean, rel=1e-12)
        assert s.std == pytest.approx(std, rel=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            summary_stats([])


class TestRankFrequency:
    def test_example(self):
        assert rank_frequency({"u1": 5, "u2": 9}) == [(1, 9), (2, 5)]

    def test_ties_are_deterministic(self):
        assert rank_frequency({"b": 3, "a": 3, "c": 1}) == [(1, 3), (2, 3), (3, 1)]

    @given(st.dictionaries(st.text(min_size=1, max_size=4), st.integers(1, 10**6), min_size=1))
    def test_nonincreasing(self, counts):
        pairs = rank_frequency(counts)
        assert [r for r, _ in pairs] == list(range(1, len(counts) + 1))
        assert all(a[1] >= b[1] for a, b in zip(pairs, pairs[1:]))
        assert sorted(f for _, f in pairs) == sorted(counts.values())


class TestZipf:
    def test_exact_power_law(self):
        fit = zipf_fit([(r, 1000 / r) for r in range(1, 51)])
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.intercept == pytest.approx(3.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_two_points_fit_exactly(self):
        fit = zipf_fit([(1, 80), (2, 13)])
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)
        assert fit.slope == pytest.approx(math.log10(13 / 80) / math.log10(2), abs=1e-12)

    def test_flat_curve(self):
        fit = zipf_fit([(1, 5), (2, 5), (3, 5)])
        assert fit.slope == 0.0 and fit.r2 == 1.0

    def test_matches_normal_equations(self, rng):
        for _ in range(50):
            k = rng.randint(3, 300)
            pairs = [(r, max(1, int(5000 * r ** -rng.uniform(0.3, 2) * rng.uniform(0.5, 2))))
                     for r in range(1, k + 1)]
            fit = zipf_fit(pairs)
            slope, intercept, r2 = oracles.loglog_ols(pairs)
            assert fit.slope == pytest.approx(slope, abs=1e-9)
            assert fit.intercept == pytest.approx(intercept, abs=1e-9)
            assert fit.r2 == pytest.approx(r2, abs=1e-9)
            assert 0.0 <= fit.r2 <= 1.0

    @given(st.lists(st.integers(1, 10**5), min_size=2, max_size=40), st.integers(1, 6))
    def test_scaling_shifts_intercept_only(self, freqs, power):
        pairs = [(r, f) for r, f in enumerate(sorted(freqs, reverse=True), start=1)]
        base = zipf_fit(pairs)
        scaled = zipf_fit([(r, f * 10 ** power) for r, f in pairs])
        assert scaled.slope == pytest.approx(base.slope, abs=1e-9)
        assert scaled.intercept == pytest.approx(base.intercept + power, abs=1e-9)
        assert scaled.r2 == pytest.approx(base.r2, abs=1e-9)

    @pytest.mark.parametrize("pairs", [[(1, 5)], [(1, 5), (2, 0)], [(1, 5), (1, 3)], []])
    def test_invalid(self, pairs):
        with pytest.raises(ValueError):
            zipf_fit(pairs)

    def test_table(self):
        pairs = [(1, 100), (2, 50), (4, 25)]
        rows = zipf_table(pairs, zipf_fit(pairs))
        assert [(r, f) for r, f, _ in rows] == pairs
        assert [y for *_, y in rows] == pytest.approx([100, 50, 25], rel=1e-9)


def test_flat_curve_with_inexact_log_mean():
    # mean of three equal log10(27) values is not bit-identical to log10(27)
    for pairs in ([(1, 27), (2, 27), (3, 27)], [(1, 270), (2, 270), (3, 270)]):
        fit = zipf_fit(pairs)
        assert (fit.slope, fit.r2) == (0.0, 1.0)
