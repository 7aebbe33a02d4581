"""Pluggable politeness and supportiveness text regressors.

The default backend scores strategy-lexicon hits squashed into [-1,1];
an external serialized linear regressor can be dropped in per kind via
configuration without touching callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import ArtifactError, ConfigError
from ..textlex import match_weighted_terms, tokenize

_KINDS = ("politeness", "supportiveness")
_FALLBACK_FILES = {
    "politeness": "politeness.tsv",
    "supportiveness": "supportiveness.tsv",
}
_MODEL_FORMAT = "text-regressor/1"


@dataclass(frozen=True)
class LinearTextModel:
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float


@dataclass(frozen=True)
class TextRegressorHandle:
    kind: str
    backend: str  # "lexicon-fallback" or "external-model-file"
    lexicon: dict[str, float] | None = None
    model: LinearTextModel | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown regressor kind {self.kind!r}")


def _load_strategy_lexicon(kind: str, path: str | None) -> dict[str, float]:
    if path is not None:
        out: dict[str, float] = {}
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = resources.files("prosocial.data").joinpath(_FALLBACK_FILES[kind]).read_text("utf-8")
    out = {}
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, weight = line.partition("\t")
        out[term.strip().lower()] = float(weight)
    return out


def load_regressor_handle(kind: str, model_path: str | None = None,
                          lexicon_path: str | None = None) -> TextRegressorHandle:
    """External model when a path is configured, lexicon fallback otherwise."""
    if kind not in _KINDS:
        raise ConfigError(f"unknown regressor kind {kind!r}")
    if model_path is not None:
        try:
            model = _load_linear_model(model_path)
        except FileNotFoundError as exc:
            raise ConfigError(f"{kind} model file not found: {model_path}") from exc
        return TextRegressorHandle(kind=kind, backend="external-model-file", model=model)
    return TextRegressorHandle(
        kind=kind, backend="lexicon-fallback",
        lexicon=_load_strategy_lexicon(kind, lexicon_path),
    )


def _clamp(value: float) -> float:
    return max(-1.0, min(1.0, value))


def _score(text: str, handle: TextRegressorHandle) -> float:
    if handle.backend == "lexicon-fallback":
        h = sum(match_weighted_terms(text, handle.lexicon))
        return _clamp(h / (abs(h) + 1.0))
    model = handle.model
    z = model.bias
    for tok in tokenize(text).tokens:
        idx = model.vocabulary.get(tok)
        if idx is not None:
            z += model.weights[idx]
    return _clamp(float(z))


def politeness_score(text: str, handle: TextRegressorHandle) -> float:
    if handle.kind != "politeness":
        raise ValueError("handle is not a politeness regressor")
    return _score(text, handle)


def supportiveness_score(text: str, handle: TextRegressorHandle) -> float:
    if handle.kind != "supportiveness":
        raise ValueError("handle is not a supportiveness regressor")
    return _score(text, handle)


def _load_linear_model(path: str) -> LinearTextModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"format: {_MODEL_FORMAT}":
        raise ArtifactError(f"{path}: not a {_MODEL_FORMAT} model file")
    header: dict[str, str] = {}
    body: list[str] = []
    for line in lines[1:]:
        if "\t" in line:
            body.append(line)
        else:
            key, _, value = line.partition(":")
            header[key.strip()] = value.strip()
    try:
        count = int(header["terms"])
        vocab: dict[str, int] = {}
        weights = np.empty(count)
        for i, line in enumerate(body[:count]):
            term, _, weight = line.rpartition("\t")
            vocab[term] = i
            weights[i] = float(weight)
        return LinearTextModel(vocabulary=vocab, weights=weights,
                               bias=float(header["bias"]))
    except (KeyError, ValueError, IndexError) as exc:
        raise ArtifactError(f"{path}: corrupt regressor file ({exc})") from exc


def save_linear_model(model: LinearTextModel, path: str) -> None:
    inverse = sorted(model.vocabulary, key=model.vocabulary.get)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"format: {_MODEL_FORMAT}\n")
        fh.write(f"bias: {float(model.bias)!r}\n")
        fh.write(f"terms: {len(inverse)}\n")
        for i, term in enumerate(inverse):
            fh.write(f"{term}\t{float(model.weights[i])!r}\n")
