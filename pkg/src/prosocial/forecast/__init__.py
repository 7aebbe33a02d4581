"""Trajectory forecasting from (post, TLC, context) alone."""

from __future__ import annotations

from .lda import LdaModel, lda_fit, lda_infer, topic_word_distribution
from .features import (
    EmbeddingReducer,
    FeatureContext,
    build_features,
    feature_names,
    fit_embedding_reducer,
    load_category_map,
    load_embedding_table,
    load_gender_table,
)
from .models import (
    GbtModel,
    GbtParams,
    RidgeModel,
    gbt_fit,
    gbt_predict,
    load_gbt_model,
    load_ridge_model,
    ridge_fit,
    ridge_predict,
    save_gbt_model,
    save_ridge_model,
)
from .evaluate import (
    CategoryStats,
    HalfSplitReport,
    category_mse,
    evaluate_regression,
    half_split_analysis,
    half_split_scores,
)

__all__ = [
    "LdaModel", "lda_fit", "lda_infer", "topic_word_distribution",
    "EmbeddingReducer", "FeatureContext", "build_features", "feature_names",
    "fit_embedding_reducer", "load_category_map", "load_embedding_table",
    "load_gender_table",
    "GbtModel", "GbtParams", "RidgeModel", "gbt_fit", "gbt_predict",
    "load_gbt_model", "load_ridge_model", "ridge_fit", "ridge_predict",
    "save_gbt_model", "save_ridge_model",
    "CategoryStats", "HalfSplitReport", "category_mse",
    "evaluate_regression", "half_split_analysis", "half_split_scores",
]
