"""Tweet ingestion, the retweet quality filter, per-day sampling and label join."""

import csv
import datetime as dt
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .io import atomic_write
from .tones import TONES, UnknownToneError, tone_names, tone_vector

TWEET_COLUMNS = ("tweet_id", "user_id", "text", "retweet_count", "followers", "location_text", "posted_at")


class CorpusError(ValueError):
    pass


class MalformedRowError(CorpusError):
    def __init__(self, row, field_name, message):
        super().__init__(f"row {row}: {field_name}: {message}")
        self.row = row
        self.field = field_name
        self.reason = f"{field_name}: {message}"


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    text: str
    retweet_count: int
    followers: int
    location_text: Optional[str]
    posted_at: dt.date


@dataclass(frozen=True)
class LabeledExample:
    tweet: TweetRecord
    labels: tuple


@dataclass(frozen=True)
class Reject:
    row: int
    reason: str


@dataclass
class LoadResult:
    records: list
    rejects: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


@dataclass
class JoinResult:
    examples: list
    unlabeled: list = field(default_factory=list)


def parse_date(value):
    """Parse an ISO-8601 date or datetime into a UTC calendar day."""
    value = value.strip()
    if not value:
        raise ValueError("empty date")
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        pass
    stamp = dt.datetime.fromisoformat(value.replace("Z", "+00:00"))
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc)
    return stamp.date()


def _count(row, name, raw):
    try:
        value = int(str(raw).strip())
    except (TypeError, ValueError):
        raise MalformedRowError(row, name, f"not an integer: {raw!r}") from None
    if value < 0:
        raise MalformedRowError(row, name, f"negative value {value}")
    return value


def _record_from_fields(row, fields, seen):
    tweet_id = (fields.get("tweet_id") or "").strip()
    if not tweet_id:
        raise MalformedRowError(row, "tweet_id", "empty")
    if tweet_id in seen:
        raise MalformedRowError(row, "tweet_id", f"duplicate id {tweet_id!r}")
    text = fields.get("text") or ""
    if not text.strip():
        raise MalformedRowError(row, "text", "empty")
    try:
        posted_at = parse_date(str(fields.get("posted_at") or ""))
    except ValueError:
        raise MalformedRowError(row, "posted_at", f"unparseable date {fields.get('posted_at')!r}") from None
    location = fields.get("location_text")
    location = location if location and location.strip() else None
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=str(fields.get("user_id") or "").strip(),
        text=text,
        retweet_count=_count(row, "retweet_count", fields.get("retweet_count")),
        followers=_count(row, "followers", fields.get("followers")),
        location_text=location,
        posted_at=posted_at,
    )


def _csv_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TWEET_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise CorpusError(f"{path}: missing required column(s): {', '.join(missing)}")
        for i, fields in enumerate(reader, start=1):
            yield i, fields


def _jsonl_rows(path):
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield i, exc
                continue
            yield i, obj


def load_tweets(path, format=None, strict=False):
    """Load tweets from CSV or JSON-lines.

    Malformed rows are quarantined in ``LoadResult.rejects`` with a reason
    naming the field; ``strict=True`` raises :class:`MalformedRowError`
    on the first one instead. Rows are numbered from 1, header excluded.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"tweet file not found: {path}")
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"
    if format == "csv":
        rows = _csv_rows(path)
    elif format == "jsonl":
        rows = _jsonl_rows(path)
    else:
        raise CorpusError(f"unsupported tweet format: {format!r}")

    result = LoadResult(records=[])
    seen = set()
    for row, fields in rows:
        try:
            if isinstance(fields, Exception):
                raise MalformedRowError(row, "json", str(fields))
            if format == "jsonl":
                missing = [c for c in TWEET_COLUMNS if c not in fields and c != "location_text"]
                if missing:
                    raise MalformedRowError(row, missing[0], "missing key")
            rec = _record_from_fields(row, fields, seen)
        except MalformedRowError as exc:
            if strict:
                raise
            result.rejects.append(Reject(row, exc.reason))
            continue
        seen.add(rec.tweet_id)
        result.records.append(rec)
    return result


def write_rejects(path, rejects):
    with atomic_write(path) as fh:
        for r in rejects:
            fh.write(json.dumps({"row": r.row, "reason": r.reason}, ensure_ascii=False) + "\n")


def write_tweets_csv(path, tweets):
    with atomic_write(path, newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TWEET_COLUMNS)
        for t in tweets:
            writer.writerow([
                t.tweet_id, t.user_id, t.text, t.retweet_count, t.followers,
                t.location_text or "", t.posted_at.isoformat(),
            ])


def filter_quality(tweets, min_retweets=2):
    """Keep tweets with at least ``min_retweets`` retweets, in input order.

    The default of 2 is the strict "more than one retweet" rule that removes
    most bot traffic.
    """
    if min_retweets < 0:
        raise ValueError("min_retweets must be >= 0")
    return [t for t in tweets if t.retweet_count >= min_retweets]


def sample_per_day(tweets, per_day=2000, seed=0):
    """Draw up to ``per_day`` tweets uniformly without replacement from each day.

    Each day's group is put in tweet_id order before drawing, so the result
    depends only on the set of tweets, ``per_day`` and ``seed``. Output is
    sorted by (posted_at, tweet_id).
    """
    if per_day < 1:
        raise ValueError("per_day must be >= 1")
    by_day = defaultdict(list)
    for t in tweets:
        by_day[t.posted_at].append(t)
    rng = np.random.default_rng(seed)
    out = []
    for day in sorted(by_day):
        group = sorted(by_day[day], key=lambda t: t.tweet_id)
        if len(group) > per_day:
            idx = rng.choice(len(group), size=per_day, replace=False)
            group = [group[i] for i in sorted(idx)]
        out.extend(group)
    return out


def load_labels(path):
    """Read a JSON-lines label file into ``{tweet_id: tone vector}``."""
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tweet_id = str(obj["tweet_id"])
                tones = obj["tones"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}: line {lineno}: bad label record ({exc})") from None
            if tweet_id in labels:
                raise CorpusError(f"{path}: line {lineno}: duplicate tweet_id {tweet_id!r}")
            labels[tweet_id] = tone_vector(tones)
    return labels


def join_labels(tweets, labels):
    """Inner-join tweets with a label file (path) or an already-loaded mapping.

    Unknown tone names raise :class:`~tweettone.tones.UnknownToneError`.
    Tweets without a label are listed in ``JoinResult.unlabeled``.
    """
    if not isinstance(labels, dict):
        labels = load_labels(labels)
    result = JoinResult(examples=[])
    for t in tweets:
        vec = labels.get(t.tweet_id)
        if vec is None:
            result.unlabeled.append(t.tweet_id)
        else:
            result.examples.append(LabeledExample(t, vec))
    return result


def _tweet_to_json(t):
    return {
        "tweet_id": t.tweet_id,
        "user_id": t.user_id,
        "text": t.text,
        "retweet_count": t.retweet_count,
        "followers": t.followers,
        "location_text": t.location_text,
        "posted_at": t.posted_at.isoformat(),
    }


def write_examples(path, examples):
    """Write labelled examples as JSON-lines (tweet fields plus ``tones``)."""
    with atomic_write(path) as fh:
        for ex in examples:
            obj = _tweet_to_json(ex.tweet)
            obj["tones"] = tone_names(ex.labels)
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def read_examples(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            try:
                tweet = _record_from_fields(lineno, obj, ())
            except MalformedRowError as exc:
                raise CorpusError(f"{path}: {exc}") from None
            out.append(LabeledExample(tweet, tone_vector(obj["tones"])))
    return out


__all__ = [
    "TONES",
    "TWEET_COLUMNS",
    "CorpusError",
    "JoinResult",
    "LabeledExample",
    "LoadResult",
    "MalformedRowError",
    "Reject",
    "TweetRecord",
    "UnknownToneError",
    "filter_quality",
    "join_labels",
    "load_labels",
    "load_tweets",
    "parse_date",
    "read_examples",
    "sample_per_day",
    "write_examples",
    "write_rejects",
    "write_tweets_csv",
]
