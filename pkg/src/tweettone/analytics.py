"""Country-level tone counts, happiness/sadness indicators and daily series.

Two families of indicator are reported side by side. ``stated_hi`` and
``stated_si`` divide joy (sadness) counts by the country's total tweets.
Rankings are built on the joy/sadness and sadness/joy ratios instead, so
those are computed too and are what ``rank_countries`` uses by default.
"""

import csv
import datetime as dt
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .io import atomic_write, format_float
from .tones import JOY, N_TONES, SADNESS, TONES


@dataclass(frozen=True)
class CountryToneCounts:
    country: str
    total_tweets: int
    tone_counts: tuple

    def merge(self, other):
        if other.country != self.country:
            raise ValueError(f"cannot merge counts for {self.country} and {other.country}")
        return CountryToneCounts(
            self.country,
            self.total_tweets + other.total_tweets,
            tuple(a + b for a, b in zip(self.tone_counts, other.tone_counts)),
        )


def aggregate(tagged):
    """Count tweets and per-tone assignments per country.

    Every tweet adds one to its country's total, including tweets with no
    tone; each set tone bit adds one to that tone's count.
    """
    totals = defaultdict(int)
    tones = defaultdict(lambda: [0] * N_TONES)
    for t in tagged:
        totals[t.country] += 1
        row = tones[t.country]
        for i, bit in enumerate(t.tones):
            if bit:
                row[i] += 1
    return {c: CountryToneCounts(c, totals[c], tuple(tones[c])) for c in sorted(totals)}


def merge_aggregates(*parts):
    out = {}
    for part in parts:
        for country, counts in part.items():
            out[country] = out[country].merge(counts) if country in out else counts
    return dict(sorted(out.items()))


def tone_histogram(tone_vectors):
    """Number of items carrying each tone, keyed by tone name."""
    counts = [0] * N_TONES
    for vec in tone_vectors:
        for i, bit in enumerate(vec):
            if bit:
                counts[i] += 1
    return dict(zip(TONES, counts))


@dataclass(frozen=True)
class IndicatorRow:
    country: str
    total: int
    joy_count: int
    sadness_count: int
    stated_hi: float
    stated_si: float
    joy_sadness_ratio: Optional[float]
    sadness_joy_ratio: Optional[float]


def indicators(counts):
    total = counts.total_tweets
    if total <= 0:
        raise ValueError(f"{counts.country}: total_tweets must be positive")
    joy = counts.tone_counts[JOY]
    sad = counts.tone_counts[SADNESS]
    return IndicatorRow(
        country=counts.country,
        total=total,
        joy_count=joy,
        sadness_count=sad,
        stated_hi=joy / total,
        stated_si=sad / total,
        joy_sadness_ratio=joy / sad if sad else None,
        sadness_joy_ratio=sad / joy if joy else None,
    )


INDICATOR_KEYS = ("joy_sadness_ratio", "sadness_joy_ratio", "stated_hi", "stated_si")


def rank_countries(rows, key="joy_sadness_ratio", min_total=100, top_n=10):
    """Countries with ``total >= min_total`` and a defined ``key``, best first.

    Ties on the key are broken by country name.
    """
    if key not in INDICATOR_KEYS:
        raise ValueError(f"unknown indicator {key!r}; expected one of {INDICATOR_KEYS}")
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    eligible = [r for r in rows if r.total >= min_total and getattr(r, key) is not None]
    eligible.sort(key=lambda r: (-getattr(r, key), r.country))
    return eligible[:top_n]


def _date_range(first, last):
    return [first + dt.timedelta(days=i) for i in range((last - first).days + 1)]


def temporal_series(tagged, countries=None, overall=False):
    """Per (country, date, tone) counts over the observed date range.

    Missing days are zero-filled. ``countries`` restricts the output to
    those countries. With ``overall=True`` all countries are pooled under
    the label ``"ALL"``. Rows are sorted by country, date, tone index.
    """
    wanted = set(countries) if countries is not None else None
    counts = defaultdict(lambda: [0] * N_TONES)
    seen = set()
    dates = []
    for t in tagged:
        if wanted is not None and t.country not in wanted:
            continue
        label = "ALL" if overall else t.country
        seen.add(label)
        dates.append(t.posted_at)
        row = counts[(label, t.posted_at)]
        for i, bit in enumerate(t.tones):
            if bit:
                row[i] += 1
    if not dates:
        return []
    days = _date_range(min(dates), max(dates))
    out = []
    for label in sorted(seen):
        for day in days:
            row = counts.get((label, day), [0] * N_TONES)
            out.extend((label, day, TONES[i], row[i]) for i in range(N_TONES))
    return out


def write_indicator_report(path, rows):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "total", "joy", "sadness", "stated_hi", "stated_si",
                    "joy_sadness_ratio", "sadness_joy_ratio"])
        for r in rows:
            w.writerow([
                r.country, r.total, r.joy_count, r.sadness_count,
                format_float(r.stated_hi), format_float(r.stated_si),
                "" if r.joy_sadness_ratio is None else format_float(r.joy_sadness_ratio),
                "" if r.sadness_joy_ratio is None else format_float(r.sadness_joy_ratio),
            ])


def write_country_counts(path, counts):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "total", *TONES])
        for c in counts.values():
            w.writerow([c.country, c.total_tweets, *c.tone_counts])


def write_ranking(path, ranked, key):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "country", "total", "joy", "sadness", key])
        for i, r in enumerate(ranked, start=1):
            w.writerow([i, r.country, r.total, r.joy_count, r.sadness_count, format_float(getattr(r, key))])


def write_temporal_series(path, series):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "date", "tone", "count"])
        for country, day, tone, count in series:
            w.writerow([country, day.isoformat(), tone, count])


def write_tone_histogram(path, histogram):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tone", "count"])
        for tone in TONES:
            w.writerow([tone, histogram[tone]])
