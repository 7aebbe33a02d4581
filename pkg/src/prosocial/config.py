"""Flat key = value run configuration with typed keys.

One file describes a whole pipeline run; command-line --set overrides
are applied on top.  Relative paths are resolved against the config
file's directory so a run directory can be moved wholesale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ConfigError

_PATH_KEYS = frozenset(
    {
        "comments",
        "posts",
        "out_dir",
        "bots",
        "categories",
        "embeddings",
        "genders",
        "pairs",
        "info_model",
        "mentoring_model",
        "politeness_model",
        "supportiveness_model",
        "toxicity_cache",
    }
)


@dataclass
class PipelineConfig:
    comments: str = "comments.ndjson"
    posts: str = "posts.ndjson"
    out_dir: str = "out"
    bots: str = ""
    categories: str = ""
    embeddings: str = ""
    genders: str = ""
    pairs: str = ""
    info_model: str = ""
    mentoring_model: str = ""
    politeness_model: str = ""
    supportiveness_model: str = ""
    toxicity_cache: str = ""
    toxicity_endpoint: str = ""
    toxicity_rate_limit: float = 1.0
    ask_subreddits: str = "askthings"
    seed: int = 0
    jobs: int = 1
    offline: bool = False
    max_tlc_words: int = 3500
    downsample_min: int = 100
    downsample_max: int = 500
    negative_samples: int = 1000
    classifier_l2: float = 1.0
    lda_topics: int = 20
    lda_alpha: float = 2.5
    lda_beta: float = 0.01
    lda_sweeps: int = 1000
    lda_infer_sweeps: int = 100
    ridge_lambda: float = 1.0
    ranker_l2: float = 1.0
    gbt_eta: float = 0.05
    gbt_gamma: float = 1.0
    gbt_lambda: float = 3.0
    gbt_alpha: float = 1.0
    gbt_min_child_weight: float = 1.0
    gbt_subsample: float = 0.8
    gbt_colsample: float = 0.8
    gbt_max_depth: int = 4
    gbt_rounds: int = 5000
    gbt_early_stopping: int = 50
    synth_conversations: int = 100
    synth_contaminate: bool = False

    def ask_subreddit_set(self) -> frozenset[str]:
        return frozenset(
            s.strip().lower()
            for s in self.ask_subreddits.split(",")
            if s.strip()
        )


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"config key {key!r} expects a boolean, got {raw!r}")


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if kind == "bool":
            return _parse_bool(key, raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(
            f"config key {key!r} expects {kind}, got {raw!r}"
        ) from exc


def _apply(config: PipelineConfig, key: str, raw: str) -> None:
    setattr(config, key, _convert(key, raw))


def _resolve_paths(config: PipelineConfig, base_dir: str) -> None:
    for key in _PATH_KEYS:
        value = getattr(config, key)
        if value and not os.path.isabs(value):
            setattr(config, key, os.path.normpath(os.path.join(base_dir, value)))


def load_config(
    path: str | None = None,
    overrides: list[str] | None = None,
) -> PipelineConfig:
    """Config from an optional file plus key=value override strings.

    Overrides are applied after the file.  Paths in both are resolved
    against the config file's directory (the working directory when no
    file is given).
    """
    config = PipelineConfig()
    base_dir = os.getcwd()
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        base_dir = os.path.dirname(os.path.abspath(path))
        with open(path, "r", encoding="utf-8") as fh:
            for number, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(
                        f"{path}:{number}: expected 'key = value', got {line!r}"
                    )
                _apply(config, key.strip(), value)
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _apply(config, key.strip(), value)
    _resolve_paths(config, base_dir)
    return config
