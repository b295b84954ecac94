import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from chatwork.ingest import ContentFlags, Message, MessageLog
from chatwork.metrics import (
    activity_ratio,
    content_breakdown,
    day_period,
    day_period_iat,
    group_session_interarrivals,
    group_session_metrics,
    group_toff,
    message_iat,
    session_entropy,
    user_message_iat,
    user_metrics,
    user_session_metrics,
    user_toff,
)
from chatwork.sessionizer import GroupSession, UserSession, build_group_sessions, build_user_sessions

from conftest import make_log, random_records, traces


def hm(h, m):
    return h * 60 + m


class TestMessageIat:
    def test_example(self):
        assert message_iat(make_log([(0, "a"), (3, "b"), (10, "a")])) == [3, 7]

    def test_same_minute(self):
        assert message_iat(make_log([(5, "a"), (5, "b")])) == [0]

    def test_too_short(self):
        assert message_iat(make_log([(5, "a")])) == []

    @given(traces())
    def test_telescoping(self, recs):
        log = make_log(recs)
        iat = message_iat(log)
        assert len(iat) == len(log) - 1
        assert sum(iat) == log.timestamps[-1] - log.timestamps[0]
        assert iat == [b - a for a, b in zip(log.timestamps, log.timestamps[1:])]

    def test_user_iat(self):
        log = make_log([(0, "a"), (2, "b"), (5, "a"), (9, "b"), (11, "a")])
        assert user_message_iat(log) == [5, 7, 6]


class TestActivityRatio:
    def test_one_bin(self):
        log = make_log([(i, "ab"[i % 2]) for i in range(10)])
        assert activity_ratio(log) == [(0, 5.0)]

    def test_single_message(self):
        assert activity_ratio(make_log([(61, "a")])) == [(60, 1.0)]

    def test_three_bins_hand_tally(self):
        # bin 0: 3 msgs by a,b; bin 60 empty; bin 120: 1 by c; bin 180: 4 by a,b,c,d
        recs = [(1, "a"), (2, "a"), (59, "b"), (130, "c"),
                (180, "a"), (181, "b"), (190, "c"), (239, "d")]
        assert activity_ratio(make_log(recs)) == [(0, 1.5), (120, 1.0), (180, 1.0)]

    def test_bad_bin(self):
        with pytest.raises(ValueError):
            activity_ratio(make_log([(0, "a")]), 0)


class TestDayPeriods:
    def test_boundaries(self):
        assert [day_period(hm(h, 0)) for h in (0, 5, 6, 11, 12, 17, 18, 23)] == [
            "early_hours", "early_hours", "morning", "morning",
            "afternoon", "afternoon", "evening", "evening"]

    def test_tz_offset(self):
        assert day_period(hm(9, 0), tz_offset_min=-180) == "morning"
        assert day_period(hm(8, 0), tz_offset_min=-180) == "early_hours"

    def test_morning_only(self):
        stats = {s.period: s for s in day_period_iat(make_log([(hm(9, 1), "a"), (hm(9, 40), "b")]))}
        assert stats["morning"].sample_count == 1 and stats["morning"].mean_iat_min == 39
        for p in ("early_hours", "afternoon", "evening"):
            assert stats[p].sample_count == 0 and stats[p].mean_iat_min is None

    def test_attributed_to_earlier_message(self):
        stats = {s.period: s for s in day_period_iat(make_log([(hm(5, 59), "a"), (hm(6, 1), "b")]))}
        assert stats["early_hours"].sample_count == 1
        assert stats["morning"].sample_count == 0

    def test_matches_bucket_then_average(self, rng):
        for _ in range(30):
            recs = sorted((rng.randint(0, 3 * 1440), "u") for _ in range(rng.randint(2, 60)))
            tz = rng.choice([0, -180, 330])
            buckets = {}
            for (a, _), (b, _) in zip(recs, recs[1:]):
                hour = ((a + tz) // 60) % 24
                name = ["early_hours", "morning", "afternoon", "evening"][hour // 6]
                buckets.setdefault(name, []).append(b - a)
            for s in day_period_iat(make_log(recs), tz):
                vals = buckets.get(s.period, [])
                assert s.sample_count == len(vals)
                if vals:
                    assert s.mean_iat_min == pytest.approx(sum(vals) / len(vals), abs=1e-12)


def flagged_log(flags_list, start=0):
    return MessageLog.from_messages(
        "g", [Message("g", "u", start + i, f) for i, f in enumerate(flags_list)])


class TestContentBreakdown:
    def test_three_text_one_media(self):
        cb = content_breakdown(flagged_log([ContentFlags(has_text=True)] * 3 + [ContentFlags(has_media=True)]))
        assert cb.pct["text"] == 75.0 and cb.pct["media"] == 25.0

    def test_overlap(self):
        cb = content_breakdown(flagged_log([ContentFlags(has_text=True, has_link=True)]))
        assert cb.pct["text"] == 100.0 and cb.pct["link"] == 100.0

    def test_table_shaped_fixture(self):
        # 69,914 messages whose per-type tallies are text 50,210, media 14,012,
        # emoji 7,842, link 5,041 (media-only, text-only, emoji-only, text+emoji, text+link)
        mix = [(ContentFlags(has_media=True), 14012), (ContentFlags(has_text=True), 43019),
               (ContentFlags(has_emoji=True), 5692),
               (ContentFlags(has_text=True, has_emoji=True), 2150),
               (ContentFlags(has_text=True, has_link=True), 5041)]
        flags = [f for f, n in mix for _ in range(n)]
        cb = content_breakdown(flagged_log(flags))
        assert cb.total == 69914
        assert cb.counts == {"text": 50210, "media": 14012, "emoji": 7842, "link": 5041}
        assert round(cb.pct["media"], 1) == 20.0
        assert round(cb.pct["emoji"], 1) == 11.2

    def test_per_period(self):
        log = flagged_log([ContentFlags(has_media=True), ContentFlags(has_text=True)], start=hm(13, 0))
        cb = content_breakdown(log)
        assert cb.period_totals["afternoon"] == 2
        assert cb.period_pct("afternoon")["media"] == 50.0
        assert cb.period_pct("morning")["media"] == 0.0


class TestUserMetrics:
    def test_msg_pct(self):
        recs = [(i, "a" if i < 25 else "b") for i in range(100)]
        log = make_log(recs)
        um = {u.user_id: u for u in user_metrics(log, build_user_sessions(log), build_group_sessions(log))}
        assert um["a"].msg_pct == 25.0 and um["a"].msg_count == 25

    def test_group_session_pct(self):
        # ten group sessions 1000 min apart; user x posts in two of them
        recs = [(1000 * k, "y") for k in range(10)] + [(1, "x"), (5001, "x")]
        log = make_log(sorted(recs))
        um = {u.user_id: u for u in user_metrics(log, build_user_sessions(log), build_group_sessions(log))}
        assert um["x"].group_session_count == 2
        assert um["x"].group_session_pct == 20.0

    def test_matches_recount(self, rng):
        for _ in range(50):
            recs = random_records(rng)
            log = make_log(recs)
            us, gs = build_user_sessions(log, 15), build_group_sessions(log, 40)
            o_us = oracles.user_sessions(recs, 15)
            o_gs = oracles.group_sessions(recs, 40)
            for m in user_metrics(log, us, gs):
                n = sum(1 for _, u in recs if u == m.user_id)
                in_gs = sum(1 for _, _, c in o_gs if m.user_id in c)
                assert m.msg_count == n
                assert m.msg_pct == pytest.approx(100 * n / len(recs), abs=1e-12)
                assert m.group_session_count == in_gs
                assert m.group_session_pct == pytest.approx(100 * in_gs / len(o_gs), abs=1e-12)
                assert m.user_session_count == sum(1 for s in o_us if s[0] == m.user_id)


class TestUserSessionMetrics:
    def test_examples(self):
        log = make_log([(0, "a"), (10, "a"), (100, "b")])
        assert user_session_metrics(build_user_sessions(log, 15)) == [(2, 10), (1, 0)]

    def test_matches_oracle(self, rng):
        for _ in range(30):
            recs = random_records(rng)
            got = user_session_metrics(build_user_sessions(make_log(recs), 15))
            want = [(len(idx), e - s) for _, s, e, idx in oracles.user_sessions(recs, 15)]
            assert got == want


class TestToff:
    def test_user_example(self):
        us = [UserSession("a", "g", 0, 10, (0, 1)), UserSession("a", "g", 40, 45, (2, 3))]
        assert user_toff(us) == [30]

    def test_single_session(self):
        assert user_toff([UserSession("a", "g", 0, 10, (0,))]) == []
        assert group_toff([GroupSession("g", 0, 10, {"a": 1})]) == []

    def test_group_example(self):
        gs = [GroupSession("g", 0, 40, {"a": 2}), GroupSession("g", 200, 200, {"b": 1})]
        assert group_toff(gs) == [160]
        assert group_session_interarrivals(gs) == [200]

    def test_user_toff_is_per_user(self):
        log = make_log([(0, "a"), (5, "b"), (100, "a"), (300, "b")])
        assert sorted(user_toff(build_user_sessions(log, 15))) == [100, 295]

    def test_matches_oracle(self, rng):
        for _ in range(50):
            recs = random_records(rng)
            th = rng.randint(1, 60)
            o = oracles.user_sessions(recs, th)
            want = []
            for u in sorted({s[0] for s in o}):
                mine = [s for s in o if s[0] == u]
                want += [b[1] - a[2] for a, b in zip(mine, mine[1:])]
            assert user_toff(build_user_sessions(make_log(recs), th)) == want
            og = oracles.group_sessions(recs, th)
            assert group_toff(build_group_sessions(make_log(recs), th)) == \
                [b[0] - a[1] for a, b in zip(og, og[1:])]


class TestEntropy:
    def test_single_speaker(self):
        assert session_entropy({"a": 9}) == 0.0

    def test_two_even(self):
        assert session_entropy({"a": 5, "b": 5}) == 1.0

    def test_three_to_one(self):
        # H = -(3/4 log2 3/4 + 1/4 log2 1/4) = 0.811278...; log2(2) = 1
        assert session_entropy({"a": 3, "b": 1}) == pytest.approx(0.811278, abs=1e-6)
        assert session_entropy({"a": 3, "b": 1}) == pytest.approx(oracles.entropy_norm([3, 1]), abs=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            session_entropy({})

    def test_accepts_group_session(self):
        assert session_entropy(GroupSession("g", 0, 1, {"a": 1, "b": 1})) == 1.0

    @given(st.lists(st.integers(1, 1000), min_size=1, max_size=30))
    def test_bounds(self, counts):
        h = session_entropy({f"u{i}": c for i, c in enumerate(counts)})
        assert 0.0 <= h <= 1.0
        if len(counts) == 1:
            assert h == 0.0
        if len(counts) >= 2 and len(set(counts)) > 1:
            assert h < 1.0


class TestGroupSessionMetrics:
    def test_coverage(self):
        gs = [GroupSession("g", 0, 30, {"a": 6, "b": 4})]
        (m,) = group_session_metrics(gs, active_user_count=2, total_messages=100)
        assert m.msg_coverage_pct == 10.0
        assert m.user_coverage_pct == 100.0
        assert (m.msg_count, m.user_count, m.duration_min) == (10, 2, 30)

    def test_fixture_recount(self, rng):
        for _ in range(30):
            recs = random_records(rng)
            log = make_log(recs)
            active = len({u for _, u in recs})
            got = group_session_metrics(build_group_sessions(log, 25), active, len(recs))
            for m, (s, e, counts) in zip(got, oracles.group_sessions(recs, 25)):
                n = sum(counts.values())
                assert m.msg_count == n
                assert m.msg_coverage_pct == pytest.approx(100 * n / len(recs), abs=1e-12)
                assert m.user_count == len(counts)
                assert m.user_coverage_pct == pytest.approx(100 * len(counts) / active, abs=1e-12)
                assert m.entropy_norm == pytest.approx(oracles.entropy_norm(list(counts.values())), abs=1e-12)
                assert m.duration_min == e - s


@settings(max_examples=100, deadline=None)
@given(traces(), st.integers(1, 120))
def test_coverage_sums_to_100(recs, th):
    log = make_log(recs)
    us, gs = build_user_sessions(log), build_group_sessions(log, th)
    users = user_metrics(log, us, gs)
    gsm = group_session_metrics(gs, len(users), len(log))
    assert math.fsum(m.msg_coverage_pct for m in gsm) == pytest.approx(100.0, abs=1e-9)
    assert math.fsum(u.msg_pct for u in users) == pytest.approx(100.0, abs=1e-9)
    assert all(0 <= u.msg_pct <= 100 and 0 <= u.group_session_pct <= 100 for u in users)


@settings(max_examples=60, deadline=None)
@given(traces(), st.permutations("abcdefg"))
def test_relabeling_users_changes_no_aggregate(recs, perm):
    mapping = dict(zip("abcdefg", perm))
    log = make_log(recs)
    relabeled = make_log([(t, mapping[u]) for t, u in recs])

    def aggregates(lg):
        us, gs = build_user_sessions(lg), build_group_sessions(lg, 30)
        users = user_metrics(lg, us, gs)
        return (
            sorted((u.msg_count, u.group_session_count, u.user_session_count) for u in users),
            [(m.msg_count, m.user_count, round(m.entropy_norm, 12), m.duration_min)
             for m in group_session_metrics(gs, len(users), len(lg))],
            sorted(user_toff(us)),
            group_toff(gs),
        )

    assert aggregates(log) == aggregates(relabeled)
