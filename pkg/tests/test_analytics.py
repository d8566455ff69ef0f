import datetime as dt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tweettone.analytics import (
    CountryToneCounts, aggregate, indicators, merge_aggregates, rank_countries, temporal_series,
)
from tweettone.geoloc import GeoTaggedTweet
from tweettone.tones import JOY, SADNESS, TONES, tone_vector

from .reference_rankings import HAPPIEST, SADDEST


def tagged(country, tones=(), day=25, tid="t"):
    return GeoTaggedTweet(tid, "u", dt.date(2020, 3, day), country, tone_vector(tones))


def counts_with(country, joy, sadness, total=None):
    tones = [0] * 7
    tones[JOY], tones[SADNESS] = joy, sadness
    return CountryToneCounts(country, total if total is not None else joy + sadness, tuple(tones))


def test_multi_label_counting():
    out = aggregate([tagged("Spain", ["joy", "analytical"])])
    assert out["Spain"].total_tweets == 1
    assert out["Spain"].tone_counts == (0, 0, 0, 1, 0, 1, 0)
    assert aggregate([]) == {}


def test_zero_tone_tweets_count_in_total():
    out = aggregate([tagged("Kenya"), tagged("Kenya", ["sadness"])])
    assert out["Kenya"].total_tweets == 2 and sum(out["Kenya"].tone_counts) == 1


def test_happiest_ratios_and_order():
    rows = [indicators(counts_with(c, joy, sad)) for c, joy, sad, _ in HAPPIEST]
    for row, (_, _, _, printed) in zip(rows, HAPPIEST):
        assert row.joy_sadness_ratio == pytest.approx(printed, abs=0.01)
    ranked = rank_countries(list(reversed(rows)), "joy_sadness_ratio", min_total=0, top_n=10)
    assert [r.country for r in ranked] == [c for c, *_ in HAPPIEST]


def test_saddest_ratios_and_order():
    rows = [indicators(counts_with(c, joy, sad)) for c, sad, joy, _ in SADDEST]
    for row, (_, _, _, printed) in zip(rows, SADDEST):
        assert row.sadness_joy_ratio == pytest.approx(printed, abs=0.01)
    ranked = rank_countries(rows[::-1], "sadness_joy_ratio", min_total=0, top_n=10)
    assert [r.country for r in ranked] == [c for c, *_ in SADDEST]


def test_stated_indicators_and_degenerate_ratio():
    row = indicators(counts_with("X", joy=5, sadness=0, total=10))
    assert row.stated_hi == 0.5 and row.stated_si == 0.0
    assert row.sadness_joy_ratio == 0.0 and row.joy_sadness_ratio is None
    with pytest.raises(ValueError):
        indicators(counts_with("Y", 0, 0, total=0))


def test_rank_ties_and_filters():
    rows = [indicators(counts_with(c, 4, 2, total=200)) for c in ("Norway", "Chile")]
    rows.append(indicators(counts_with("Peru", 9, 1, total=50)))
    assert [r.country for r in rank_countries(rows, min_total=100)] == ["Chile", "Norway"]
    assert rank_countries(rows, min_total=10_000) == []
    assert len(rank_countries(rows, min_total=0, top_n=1)) == 1
    with pytest.raises(ValueError):
        rank_countries(rows, key="bogus")


country_counts = st.builds(
    lambda c, j, s, extra: counts_with(c, j, s, total=max(j, s) + extra),
    st.sampled_from(["A", "B", "C", "D", "E", "F"]), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50),
)


@given(st.lists(country_counts, max_size=12, unique_by=lambda c: c.country),
       st.sampled_from(["joy_sadness_ratio", "sadness_joy_ratio", "stated_hi", "stated_si"]),
       st.integers(0, 60), st.integers(1, 8))
def test_ranking_is_sorted_prefix_of_filtered_set(counts, key, min_total, top_n):
    rows = [indicators(c) for c in counts if c.total_tweets > 0]
    out = rank_countries(rows, key, min_total, top_n)
    eligible = sorted((r for r in rows if r.total >= min_total and getattr(r, key) is not None),
                      key=lambda r: (-getattr(r, key), r.country))
    assert out == eligible[:top_n]
    for r in rows:
        assert 0.0 <= r.stated_hi <= 1.0 and 0.0 <= r.stated_si <= 1.0


tweets = st.lists(
    st.builds(tagged, st.sampled_from(["Spain", "Kenya", "Japan", "Oslo"]),
              st.lists(st.sampled_from(TONES), unique=True, max_size=3), st.integers(25, 31)),
    max_size=40,
)


@given(tweets, st.integers(0, 2**32 - 1))
def test_shard_then_merge_equals_whole(items, seed):
    shard_of = np.random.default_rng(seed).integers(0, 4, size=len(items))
    shards = [[t for t, s in zip(items, shard_of) if s == k] for k in range(4)]
    assert merge_aggregates(*(aggregate(s) for s in shards)) == aggregate(items)


def test_merge_rejects_different_countries():
    with pytest.raises(ValueError):
        counts_with("A", 1, 1).merge(counts_with("B", 1, 1))


def test_single_tweet_series():
    series = temporal_series([tagged("Spain", ["joy"])])
    assert len(series) == 7
    assert {(tone, n) for _, _, tone, n in series} == {(t, int(t == "joy")) for t in TONES}


def test_gap_day_is_zero_filled():
    series = temporal_series([tagged("Spain", ["joy"], day=25), tagged("Spain", ["fear"], day=27)])
    days = sorted({d for _, d, _, _ in series})
    assert days == [dt.date(2020, 3, 25), dt.date(2020, 3, 26), dt.date(2020, 3, 27)]
    assert all(n == 0 for _, d, _, n in series if d.day == 26)


def test_thirty_tweets_three_days_hand_tally():
    # day 25: 12 joy; day 26: 10 sadness + 3 of them also joy; day 27: 8 with no tone
    items = [tagged("Kenya", ["joy"], 25, f"a{i}") for i in range(12)]
    items += [tagged("Kenya", ["sadness", "joy"] if i < 3 else ["sadness"], 26, f"b{i}") for i in range(10)]
    items += [tagged("Kenya", [], 27, f"c{i}") for i in range(8)]
    got = {(d.day, tone): n for _, d, tone, n in temporal_series(items, overall=True)}
    assert got[(25, "joy")] == 12 and got[(26, "joy")] == 3 and got[(26, "sadness")] == 10
    assert sum(n for (day, _), n in got.items() if day == 27) == 0
    assert sum(got.values()) == 25


def test_country_filter():
    items = [tagged("Spain", ["joy"]), tagged("Kenya", ["fear"], day=28)]
    series = temporal_series(items, countries=["Kenya"])
    assert {c for c, *_ in series} == {"Kenya"}
    assert {d.day for _, d, _, _ in series} == {28}
    overall = temporal_series(items, overall=True)
    assert {c for c, *_ in overall} == {"ALL"} and len(overall) == 4 * 7


@given(tweets)
def test_series_sums_match_aggregate(items):
    agg = aggregate(items)
    sums = {}
    for country, _, tone, n in temporal_series(items):
        sums[(country, tone)] = sums.get((country, tone), 0) + n
    for country, c in agg.items():
        for i, tone in enumerate(TONES):
            assert sums[(country, tone)] == c.tone_counts[i]
