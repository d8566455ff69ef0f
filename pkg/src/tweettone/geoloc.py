"""Offline geoparsing of free-text profile locations to countries."""

import csv
import datetime as dt
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .io import atomic_write
from .tones import format_tone_list, parse_tone_list

TAGGED_COLUMNS = ("tweet_id", "user_id", "posted_at", "country", "tones")


class GazetteerError(ValueError):
    pass


def normalize_place(text):
    """Casefold, drop punctuation except hyphens, collapse whitespace."""
    text = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).casefold())
    text = "".join(ch for ch in text if ch == "-" or not unicodedata.category(ch).startswith("P"))
    return " ".join(text.split())


@dataclass(frozen=True)
class Gazetteer:
    entries: dict  # normalized alias -> canonical country

    @property
    def countries(self):
        return frozenset(self.entries.values())

    def __len__(self):
        return len(self.entries)

    def lookup(self, alias):
        return self.entries.get(normalize_place(alias))


def bundled_gazetteer_path():
    return resources.files("tweettone") / "data" / "gazetteer.tsv"


def load_gazetteer(path=None):
    """Read an ``alias<TAB>country`` TSV; ``#`` lines are comments.

    An alias that normalizes to the same key as an earlier one must name
    the same country.
    """
    path = bundled_gazetteer_path() if path is None else Path(path)
    entries = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise GazetteerError(f"{path}: line {lineno}: expected 'alias<TAB>country'")
            alias, country = normalize_place(parts[0]), parts[1].strip()
            if not alias:
                raise GazetteerError(f"{path}: line {lineno}: alias is empty after normalization")
            prior = entries.get(alias)
            if prior is not None and prior != country:
                raise GazetteerError(f"{path}: line {lineno}: conflicting alias {alias!r}: {prior} vs {country}")
            entries[alias] = country
    if not entries:
        raise GazetteerError(f"{path}: gazetteer is empty")
    return Gazetteer(entries)


def resolve_location(location_text, gz):
    """Map a profile location to a canonical country, or None.

    Comma-separated segments are tried right to left. Within a segment the
    whole segment is tried first, then word n-grams from longest to
    shortest (rightmost first at each length). The first hit wins.
    """
    if not location_text:
        return None
    for segment in reversed(location_text.split(",")):
        words = normalize_place(segment).split()
        for n in range(len(words), 0, -1):
            for start in range(len(words) - n, -1, -1):
                country = gz.entries.get(" ".join(words[start:start + n]))
                if country is not None:
                    return country
    return None


@dataclass(frozen=True)
class GeoTaggedTweet:
    tweet_id: str
    user_id: str
    posted_at: dt.date
    country: str
    tones: tuple


@dataclass
class GeotagResult:
    tagged: list
    missing_location: int = 0
    unresolved_location: int = 0
    unresolved: Counter = field(default_factory=Counter)

    @property
    def dropped(self):
        return self.missing_location + self.unresolved_location

    def report(self, sample_size=20):
        samples = sorted(self.unresolved.items(), key=lambda kv: (-kv[1], kv[0]))[:sample_size]
        return {
            "input": len(self.tagged) + self.dropped,
            "tagged": len(self.tagged),
            "dropped": self.dropped,
            "missing_location": self.missing_location,
            "unresolved_location": self.unresolved_location,
            "unresolved_samples": [{"location_text": s, "count": c} for s, c in samples],
        }


def geotag(items, gz):
    """Attach countries to ``(TweetRecord, tone vector)`` pairs.

    Tweets with no location text, or text the gazetteer cannot resolve,
    are dropped and counted separately.
    """
    result = GeotagResult(tagged=[])
    for tweet, tones in items:
        text = tweet.location_text
        if text is None or not text.strip():
            result.missing_location += 1
            continue
        country = resolve_location(text, gz)
        if country is None:
            result.unresolved_location += 1
            result.unresolved[text.strip()] += 1
            continue
        result.tagged.append(GeoTaggedTweet(tweet.tweet_id, tweet.user_id, tweet.posted_at, country, tuple(tones)))
    return result


def write_tagged(path, tagged):
    with atomic_write(path, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TAGGED_COLUMNS)
        for t in tagged:
            w.writerow([t.tweet_id, t.user_id, t.posted_at.isoformat(), t.country, format_tone_list(t.tones)])


def read_tagged(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TAGGED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
        return [
            GeoTaggedTweet(r["tweet_id"], r["user_id"], dt.date.fromisoformat(r["posted_at"]),
                           r["country"], parse_tone_list(r["tones"]))
            for r in reader
        ]


def write_drop_report(path, result, sample_size=20):
    with atomic_write(path) as fh:
        json.dump(result.report(sample_size), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
