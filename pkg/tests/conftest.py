import random

import pytest
from hypothesis import strategies as st

from chatwork.ingest import ContentFlags, Message, MessageLog

TEXT = ContentFlags(has_text=True)


def make_log(records, group="g", flags=TEXT):
    """Build a log from (minute, user) pairs, keeping their order for ties."""
    msgs = [Message(group, u, t, flags) for t, u in records]
    return MessageLog.from_messages(group, msgs)


def random_records(rng, n_max=100, users=6, span=600):
    n = rng.randint(1, n_max)
    times = sorted(rng.randint(0, span) for _ in range(n))
    return [(t, f"u{rng.randrange(users)}") for t in times]


@pytest.fixture
def rng():
    return random.Random(20171010)


@st.composite
def traces(draw, max_size=60, max_gap=200):
    gaps = draw(st.lists(st.integers(0, max_gap), min_size=1, max_size=max_size))
    users = draw(st.lists(st.sampled_from("abcdefg"), min_size=len(gaps), max_size=len(gaps)))
    t, recs = 0, []
    for g, u in zip(gaps, users):
        t += g
        recs.append((t, u))
    return recs
