"""Command-line front end, one subcommand per pipeline stage.

    prepare   load -> retweet filter -> per-day sample -> join labels
    train     split -> vocabulary -> train; checkpoint + history
    eval      LRAP and eval loss of a checkpoint on a prepared split
    predict   tone probabilities + thresholded tones for a tweet file
    geotag    resolve locations, join with predictions, drop unresolvable
    analyze   per-country counts, indicators and rankings
    report    per-day tone series by country and overall

Every output is written to a temp file and renamed into place, so a
failed run never leaves a partial artifact behind.
"""

import argparse
import json
import logging
import sys

from . import analytics, corpus, geoloc, inference
from .config import DEFAULTS, ConfigError, RunConfig
from .io import atomic_write
from .neuralnet import init_model, load_checkpoint, save_checkpoint
from .textprep import Vocabulary, build_vocab
from .training import encode_examples, evaluate, split, train

log = logging.getLogger("tweettone")

COMMANDS = {
    "prepare": "filter, sample and label the raw tweet file",
    "train": "split the prepared data and train a tone model",
    "eval": "print LRAP and eval loss of a checkpoint",
    "predict": "write tone probabilities and tones for a tweet file",
    "geotag": "resolve profile locations to countries",
    "analyze": "per-country tone counts, indicators and rankings",
    "report": "per-day tone series by country",
}


def _write_json(path, obj):
    with atomic_write(path) as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_prepare(cfg):
    tweets_path = cfg.require_file("paths.tweets")
    labels_path = cfg.require_file("paths.labels")
    loaded = corpus.load_tweets(tweets_path)
    kept = corpus.filter_quality(loaded.records, cfg["sample.min_retweets"])
    sampled = corpus.sample_per_day(kept, cfg["sample.per_day"], cfg["sample.seed"])
    joined = corpus.join_labels(sampled, labels_path)

    corpus.write_rejects(cfg.artifact("rejects.jsonl"), loaded.rejects)
    analytics.write_tone_histogram(cfg.artifact("tone_histogram.csv"),
                                   analytics.tone_histogram(ex.labels for ex in joined.examples))
    corpus.write_examples(cfg.artifact("prepared.jsonl"), joined.examples)
    log.info("prepare: %d loaded, %d rejected, %d after retweet filter, %d sampled, %d labelled, %d unlabelled",
             len(loaded.records), len(loaded.rejects), len(kept), len(sampled),
             len(joined.examples), len(joined.unlabeled))


def cmd_train(cfg):
    examples = corpus.read_examples(cfg.require_file(cfg.artifact("prepared.jsonl"), "prepared dataset"))
    tcfg = cfg.train_config()
    train_set, test_set = split(examples, tcfg.split_ratio, tcfg.seed)
    vocab = build_vocab([ex.tweet for ex in train_set], cfg["vocab.max_size"], cfg["vocab.min_freq"])
    model = init_model(cfg.model_config(len(vocab)))
    params, history = train(model, (train_set, test_set), tcfg, vocab, log=log.info)

    _write_json(cfg.artifact("split.json"), {
        "train": sorted(ex.tweet.tweet_id for ex in train_set),
        "test": sorted(ex.tweet.tweet_id for ex in test_set),
    })
    vocab.save(cfg.vocab)
    history.write_csv(cfg.artifact("history.csv"))
    save_checkpoint(params, cfg.checkpoint)
    log.info("train: %d train / %d test examples, %d optimizer steps", len(train_set), len(test_set), len(history))


def _load_model(cfg):
    params = load_checkpoint(cfg.require_file(cfg.checkpoint, "checkpoint"))
    vocab = Vocabulary.load(cfg.require_file(cfg.vocab, "vocabulary"))
    inference.check_compatible(params, vocab)
    return params, vocab


def cmd_eval(cfg):
    params, vocab = _load_model(cfg)
    examples = corpus.read_examples(cfg.require_file(cfg.artifact("prepared.jsonl"), "prepared dataset"))
    which = cfg["eval.split"]
    if which != "all":
        with open(cfg.require_file(cfg.artifact("split.json"), "split file"), encoding="utf-8") as fh:
            ids = set(json.load(fh)[which])
        examples = [ex for ex in examples if ex.tweet.tweet_id in ids]
    if not examples:
        raise ValueError(f"no examples in the {which!r} split")
    loss, score = evaluate(params, *encode_examples(examples, vocab, params.config.max_len))
    _write_json(cfg.artifact("eval.json"), {"split": which, "n": len(examples), "lrap": score, "eval_loss": loss})
    print(f"lrap={score:.6f} eval_loss={loss:.6f} n={len(examples)} split={which}")


def cmd_predict(cfg):
    params, vocab = _load_model(cfg)
    loaded = corpus.load_tweets(cfg.require_file(cfg.predict_tweets, "paths.predict_tweets"))
    preds = inference.predict(params, vocab, loaded.records, cfg["infer.batch_size"], cfg["infer.threshold"])
    n = inference.write_predictions(cfg.artifact("predictions.csv"), preds)
    log.info("predict: %d tweets (%d rejected rows)", n, len(loaded.rejects))


def cmd_geotag(cfg):
    gz_path = cfg["paths.gazetteer"]
    gz = geoloc.load_gazetteer(cfg.require_file("paths.gazetteer") if gz_path else None)
    tweets = corpus.load_tweets(cfg.require_file(cfg.predict_tweets, "paths.predict_tweets")).records
    if cfg["geotag.tones"] == "labels":
        tones = corpus.load_labels(cfg.require_file("paths.labels"))
    else:
        tones = {p.tweet_id: p.tones for p in inference.read_predictions(
            cfg.require_file(cfg.artifact("predictions.csv"), "predictions"))}
    pairs = [(t, tones[t.tweet_id]) for t in tweets if t.tweet_id in tones]
    result = geoloc.geotag(pairs, gz)
    geoloc.write_drop_report(cfg.artifact("drop_report.json"), result, cfg["geotag.sample_size"])
    geoloc.write_tagged(cfg.artifact("tagged.csv"), result.tagged)
    log.info("geotag: %d tagged, %d without location, %d unresolved",
             len(result.tagged), result.missing_location, result.unresolved_location)


def cmd_analyze(cfg):
    tagged = geoloc.read_tagged(cfg.require_file(cfg.artifact("tagged.csv"), "tagged tweets"))
    counts = analytics.aggregate(tagged)
    rows = [analytics.indicators(c) for c in counts.values()]
    analytics.write_country_counts(cfg.artifact("country_tone_counts.csv"), counts)
    analytics.write_indicator_report(cfg.artifact("indicators.csv"), rows)
    for key, name in (("joy_sadness_ratio", "ranking_happiness.csv"), ("sadness_joy_ratio", "ranking_sadness.csv")):
        ranked = analytics.rank_countries(rows, key, cfg["analyze.min_total"], cfg["analyze.top_n"])
        analytics.write_ranking(cfg.artifact(name), ranked, key)
    log.info("analyze: %d countries", len(counts))


def cmd_report(cfg):
    tagged = geoloc.read_tagged(cfg.require_file(cfg.artifact("tagged.csv"), "tagged tweets"))
    wanted = [c.strip() for c in cfg["report.countries"].split(",") if c.strip()] or None
    analytics.write_temporal_series(cfg.artifact("temporal.csv"), analytics.temporal_series(tagged, wanted))
    analytics.write_temporal_series(cfg.artifact("temporal_overall.csv"),
                                    analytics.temporal_series(tagged, wanted, overall=True))


HANDLERS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "geotag": cmd_geotag,
    "analyze": cmd_analyze,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="tweettone", description="Tweet tone pipeline")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("-q", "--quiet", action="store_true")
        for key in DEFAULTS:
            p.add_argument(f"--{key}", dest=key, metavar="VALUE", default=None)
    return parser


def run_command(argv):
    """Run one pipeline command; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    overrides = {k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None}
    try:
        cfg = RunConfig.build(args.config, overrides)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](cfg)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"tweettone {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
