"""Comment-level scorers: learned classifiers, regressors, toxicity."""

from __future__ import annotations

from .ngram import (
    LabelingRules,
    NgramLogisticModel,
    ScorableComment,
    classify_text,
    extract_ngrams,
    heuristic_label_corpus,
    load_ngram_model,
    save_ngram_model,
    train_ngram_classifier,
)
from .regressors import (
    TextRegressorHandle,
    load_regressor_handle,
    politeness_score,
    supportiveness_score,
)
from .toxicity import (
    ToxicityClient,
    ToxicityConfig,
    fallback_toxicity_score,
    toxicity_metrics,
)

__all__ = [
    "LabelingRules", "NgramLogisticModel", "ScorableComment",
    "classify_text", "extract_ngrams", "heuristic_label_corpus",
    "load_ngram_model", "save_ngram_model", "train_ngram_classifier",
    "TextRegressorHandle", "load_regressor_handle", "politeness_score",
    "supportiveness_score", "ToxicityClient", "ToxicityConfig",
    "fallback_toxicity_score", "toxicity_metrics",
]
