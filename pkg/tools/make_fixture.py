"""Regenerate the bundled 100-row fixture and its ground truth.

The truth file is derived from the construction tables below (which row
was built for which country, which rows are broken), never from the
package's own parsing or geoparsing code.

    python tools/make_fixture.py
"""

import csv
import datetime as dt
import json
import random
from collections import Counter
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "tweettone" / "data" / "fixture"
TONES = ("confident", "anger", "fear", "joy", "sadness", "analytical", "tentative")

WORDS = {
    "confident": ["definitely", "certain", "we will win"],
    "anger": ["furious", "outrageous", "so angry"],
    "fear": ["scared", "terrified", "panic"],
    "joy": ["happy", "grateful", "lovely day"],
    "sadness": ["sad", "heartbroken", "miss my family"],
    "analytical": ["data shows", "statistics", "case numbers"],
    "tentative": ["maybe", "perhaps", "not sure"],
}
FILLER = ["stay home", "#covid", "#stayathome", "lockdown", "@who", "quarantine", "today", "everyone"]

# (country, [location strings], count)
COUNTRY_BLOCKS = [
    ("Spain", ["Madrid, Spain", "Barcelona", "España", "spain"], 14),
    ("Kenya", ["Nairobi", "Mombasa, Kenya", "nairobi kenya"], 12),
    ("Germany", ["Berlin", "München, Deutschland", "Hamburg, Germany"], 12),
    ("Botswana", ["Gaborone", "Gaborone, Botswana"], 10),
    ("United Kingdom", ["London, UK", "Manchester, England", "Edinburgh, Scotland"], 10),
    ("Japan", ["Tokyo", "東京", "Osaka, Japan"], 8),
]
MISSING = 15
UNRESOLVABLE = ["the moon 🌙", "Earth", "somewhere over the rainbow", "Worldwide", "in your heart"]
N_UNRESOLVABLE = 14

# data-row number (1-based) -> (field, bad value)
MALFORMED = {
    12: ("tweet_id", ""),
    27: ("retweet_count", "-3"),
    45: ("posted_at", "2020-13-40"),
    63: ("text", "   "),
    88: ("followers", "many"),
}
UNLABELED_EVERY = 13  # every 13th valid tweet has no label
DAYS = [dt.date(2020, 3, 25) + dt.timedelta(days=i) for i in range(7)]


def main():
    rng = random.Random(20200325)
    locations = []
    for country, names, n in COUNTRY_BLOCKS:
        locations += [(country, names[i % len(names)]) for i in range(n)]
    locations += [(None, "")] * MISSING
    locations += [("?", UNRESOLVABLE[i % len(UNRESOLVABLE)]) for i in range(N_UNRESOLVABLE)]
    assert len(locations) == 95
    rng.shuffle(locations)

    rows, labels = [], []
    valid = []
    loc_iter = iter(locations)
    for row in range(1, 101):
        tweet_id = f"fx{row:03d}"
        k = rng.choice([0, 1, 1, 2, 2, 3])
        tones = sorted(rng.sample(range(7), k))
        words = [rng.choice(WORDS[TONES[t]]) for t in tones] + rng.sample(FILLER, rng.randint(1, 3))
        rng.shuffle(words)
        text = " ".join(words).capitalize() + rng.choice(["", "!", ".", " 😷"])
        record = {
            "tweet_id": tweet_id,
            "user_id": f"u{rng.randint(1, 60):03d}",
            "text": text,
            "retweet_count": str(rng.choice([0, 1, 1, 2, 3, 5, 8, 13])),
            "followers": str(rng.randint(0, 5000)),
            "location_text": "",
            "posted_at": DAYS[(row - 1) % 7].isoformat(),
        }
        if row in MALFORMED:
            fld, bad = MALFORMED[row]
            record[fld] = bad
            record["location_text"] = "Madrid, Spain"
            rows.append(record)
            continue
        country, loc = next(loc_iter)
        record["location_text"] = loc
        rows.append(record)
        valid.append((record, country, tones))

    for i, (record, _, tones) in enumerate(valid):
        if i % UNLABELED_EVERY == UNLABELED_EVERY - 1:
            continue
        labels.append({"tweet_id": record["tweet_id"], "tones": [TONES[t] for t in tones]})

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "tweets.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    with open(OUT / "labels.jsonl", "w", encoding="utf-8") as fh:
        for obj in labels:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")

    labelled = {obj["tweet_id"] for obj in labels}

    def country_truth(items):
        totals, tones = Counter(), {}
        for record, country, tvec in items:
            if country in (None, "?"):
                continue
            totals[country] += 1
            row = tones.setdefault(country, [0] * 7)
            for t in tvec:
                row[t] += 1
        return {c: {"total": totals[c], "tones": tones[c]} for c in sorted(totals)}

    def drops(items):
        return {
            "input": len(items),
            "missing_location": sum(1 for _, c, _ in items if c is None),
            "unresolved_location": sum(1 for _, c, _ in items if c == "?"),
            "tagged": sum(1 for _, c, _ in items if c not in (None, "?")),
        }

    label_items = [v for v in valid if v[0]["tweet_id"] in labelled]
    truth = {
        "rows": 100,
        "valid": len(valid),
        "rejected_rows": sorted(MALFORMED),
        "retweets_ge_2": sum(1 for r, _, _ in valid if int(r["retweet_count"]) >= 2),
        "labelled": len(labels),
        "location_of": {r["tweet_id"]: c for r, c, _ in valid if c not in (None, "?")},
        "geotag_all_tweets": drops(valid),
        "geotag_labelled_tweets": drops(label_items),
        "country_counts_labelled": country_truth(label_items),
    }
    with open(OUT / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps({k: v for k, v in truth.items() if k != "location_of"}, indent=1))


if __name__ == "__main__":
    main()
