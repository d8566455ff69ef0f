"""Run configuration: ``section.key=value`` files with flag overrides.

Every key has a typed default. Relative paths in a config file resolve
against the file's directory; paths given on the command line resolve
against the working directory.
"""

from dataclasses import dataclass
from pathlib import Path

from .neuralnet import ModelConfig
from .training import TrainConfig


class ConfigError(ValueError):
    pass


# key -> (type, default); a default of None means "unset"
DEFAULTS = {
    "paths.tweets": (Path, None),
    "paths.labels": (Path, None),
    "paths.gazetteer": (Path, None),
    "paths.predict_tweets": (Path, None),
    "paths.out_dir": (Path, Path("out")),
    "paths.checkpoint": (Path, None),
    "paths.vocab": (Path, None),
    "sample.min_retweets": (int, 2),
    "sample.per_day": (int, 2000),
    "sample.seed": (int, 0),
    "vocab.max_size": (int, 8000),
    "vocab.min_freq": (int, 1),
    "model.d_model": (int, 64),
    "model.n_heads": (int, 4),
    "model.n_layers": (int, 2),
    "model.d_ffn": (int, 128),
    "model.max_len": (int, 64),
    "model.seed": (int, 0),
    "train.learning_rate": (float, 1e-3),
    "train.sub_batch": (int, 2),
    "train.grad_accum_steps": (int, 16),
    "train.epochs": (int, 3),
    "train.split_ratio": (float, 0.8),
    "train.seed": (int, 0),
    "train.eval_every": (int, 50),
    "eval.split": (str, "test"),
    "infer.threshold": (float, 0.5),
    "infer.batch_size": (int, 64),
    "geotag.tones": (str, "predictions"),
    "geotag.sample_size": (int, 20),
    "analyze.min_total": (int, 100),
    "analyze.top_n": (int, 10),
    "report.countries": (str, ""),
}

CHOICES = {
    "eval.split": ("test", "train", "all"),
    "geotag.tones": ("predictions", "labels"),
}


def _convert(key, raw, base_dir):
    kind, _ = DEFAULTS[key]
    raw = raw.strip()
    try:
        if kind is Path:
            if not raw:
                return None
            p = Path(raw).expanduser()
            return p if p.is_absolute() or base_dir is None else base_dir / p
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key}: expected one of {', '.join(CHOICES[key])}, got {value!r}")
    return value


def parse_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = _convert(key, raw, path.parent)
    return values


@dataclass
class RunConfig:
    values: dict

    @classmethod
    def build(cls, config_file=None, overrides=None):
        values = {k: default for k, (_, default) in DEFAULTS.items()}
        if config_file is not None:
            values.update(parse_config_file(config_file))
        for key, raw in (overrides or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = _convert(key, raw, None)
        return cls(values)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def out_dir(self):
        return self.values["paths.out_dir"]

    def artifact(self, name):
        return self.out_dir / name

    @property
    def checkpoint(self):
        return self.values["paths.checkpoint"] or self.artifact("model.ckpt")

    @property
    def vocab(self):
        return self.values["paths.vocab"] or self.artifact("vocab.tsv")

    @property
    def predict_tweets(self):
        return self.values["paths.predict_tweets"] or self.values["paths.tweets"]

    def require_file(self, key_or_path, label=None):
        path = self.values[key_or_path] if isinstance(key_or_path, str) else key_or_path
        label = label or key_or_path
        if path is None:
            raise ConfigError(f"{label} is not set")
        if not Path(path).is_file():
            raise ConfigError(f"{label}: file not found: {path}")
        return Path(path)

    def model_config(self, vocab_size):
        return ModelConfig(
            vocab_size=vocab_size,
            d_model=self["model.d_model"],
            n_heads=self["model.n_heads"],
            n_layers=self["model.n_layers"],
            d_ffn=self["model.d_ffn"],
            max_len=self["model.max_len"],
            seed=self["model.seed"],
        ).validate()

    def train_config(self):
        return TrainConfig(
            learning_rate=self["train.learning_rate"],
            sub_batch=self["train.sub_batch"],
            grad_accum_steps=self["train.grad_accum_steps"],
            epochs=self["train.epochs"],
            split_ratio=self["train.split_ratio"],
            seed=self["train.seed"],
            eval_every=self["train.eval_every"],
        ).validate()
