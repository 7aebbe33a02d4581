"""Forecaster evaluation: regression quality, per-category error
distributions, and the early-vs-late half-split analysis."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ..corpus import Comment, Conversation
from ..errors import NumericError
from ..rank_eval import ks_two_sample, wilcoxon_rank_sum
from ..trajectory import PanelContext, TrajectoryModel, assemble_panel, trajectory_score

HALF_SPLIT_TOLERANCE = 1e-9


def evaluate_regression(
    predictions: Sequence[float], truth: Sequence[float]
) -> tuple[float, float]:
    """(MSE, R^2) with R^2 = 1 - SSE/SST against the truth mean."""
    preds = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    if preds.shape != y.shape or preds.ndim != 1:
        raise ValueError("predictions and truth must be equal-length vectors")
    if preds.shape[0] == 0:
        raise ValueError("cannot evaluate zero predictions")
    sse = float(np.sum((preds - y) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise NumericError("truth has zero variance; R^2 is undefined")
    mse = sse / preds.shape[0]
    return mse, 1.0 - sse / sst


@dataclass(frozen=True)
class CategoryStats:
    category: str
    count: int
    mse: float
    ks_d: float | None
    ks_p: float | None


def category_mse(
    squared_errors: Mapping[str, float],
    conversation_subreddits: Mapping[str, str],
    category_map: Mapping[str, str],
) -> list[CategoryStats]:
    """Per-category MSE plus a KS test of each category against the rest.

    Subreddits missing from the map fall into "uncategorized".  The KS
    fields are None when either side of the comparison is empty.
    """
    by_category: dict[str, list[float]] = {}
    for conv_id, err in squared_errors.items():
        sub = conversation_subreddits.get(conv_id, "").lower()
        category = category_map.get(sub, "uncategorized")
        by_category.setdefault(category, []).append(err)

    out: list[CategoryStats] = []
    for category in sorted(by_category):
        errors = by_category[category]
        rest = [
            e
            for other, errs in by_category.items()
            if other != category
            for e in errs
        ]
        if errors and rest:
            d, p = ks_two_sample(errors, rest)
        else:
            d, p = None, None
        out.append(
            CategoryStats(
                category=category,
                count=len(errors),
                mse=float(np.mean(errors)),
                ks_d=d,
                ks_p=p,
            )
        )
    return out


@dataclass(frozen=True)
class HalfSplitReport:
    strata: dict[str, tuple[str, ...]]
    stratum_mse: dict[str, float | None]
    excluded_odd: int
    wilcoxon_u: float | None
    wilcoxon_p: float | None


def _half_conversation(conv: Conversation, keep: set[str]) -> Conversation:
    """Sub-conversation of the kept replies, grafted to kept ancestors.

    A kept reply whose parent was dropped is reattached to its nearest
    kept ancestor (ultimately the TLC), preserving reply counts.
    """
    parent_of = {r.id: r.parent_id for r in conv.walk_replies()}

    def nearest_kept(comment_id: str) -> str:
        current = parent_of.get(comment_id)
        while current is not None and current != conv.tlc.id:
            if current in keep:
                return current
            current = parent_of.get(current)
        return conv.tlc.id

    grafted: list[Comment] = []
    for reply in conv.walk_replies():
        if reply.id not in keep:
            continue
        target = nearest_kept(reply.id)
        if target != reply.parent_id:
            reply = replace(reply, parent_id=target)
        grafted.append(reply)
    return Conversation(conv.post, conv.tlc, grafted)


def half_split_scores(
    conv: Conversation,
    model: TrajectoryModel,
    ctx: PanelContext,
) -> tuple[float, float]:
    """Trajectory scores of the first and second temporal half."""
    replies = sorted(conv.walk_replies(), key=lambda r: (r.created_utc, r.id))
    half = len(replies) // 2
    early_ids = {r.id for r in replies[:half]}
    late_ids = {r.id for r in replies[half:]}
    early = _half_conversation(conv, early_ids)
    late = _half_conversation(conv, late_ids)
    score_early = trajectory_score(model, assemble_panel(early, ctx))
    score_late = trajectory_score(model, assemble_panel(late, ctx))
    return score_early, score_late


def half_split_analysis(
    conversations: Sequence[Conversation],
    model: TrajectoryModel,
    ctx: PanelContext,
    squared_errors: Mapping[str, float] | None = None,
) -> HalfSplitReport:
    """Stratify even-length conversations by where prosociality lands.

    Each conversation's replies are cut in temporal halves and each
    half is scored as a conversation of its own.  Strata are "early"
    (first half higher), "late", and "even" (equal within tolerance).
    Odd-length conversations are excluded and counted.  When forecaster
    squared errors are supplied, the report carries per-stratum MSE and
    a rank-sum test of early-stratum errors against late-stratum ones.
    """
    strata: dict[str, list[str]] = {"early": [], "late": [], "even": []}
    excluded = 0
    for conv in conversations:
        if len(conv.walk_replies()) % 2 == 1:
            excluded += 1
            continue
        score_early, score_late = half_split_scores(conv, model, ctx)
        if abs(score_early - score_late) <= HALF_SPLIT_TOLERANCE:
            strata["even"].append(conv.id)
        elif score_early > score_late:
            strata["early"].append(conv.id)
        else:
            strata["late"].append(conv.id)

    stratum_mse: dict[str, float | None] = {}
    samples: dict[str, list[float]] = {}
    for name, ids in strata.items():
        if squared_errors is None:
            stratum_mse[name] = None
            samples[name] = []
            continue
        errs = [squared_errors[i] for i in ids if i in squared_errors]
        samples[name] = errs
        stratum_mse[name] = float(np.mean(errs)) if errs else None

    if samples["early"] and samples["late"]:
        u, p = wilcoxon_rank_sum(samples["early"], samples["late"])
    else:
        u, p = None, None

    return HalfSplitReport(
        strata={name: tuple(ids) for name, ids in strata.items()},
        stratum_mse=stratum_mse,
        excluded_odd=excluded,
        wilcoxon_u=u,
        wilcoxon_p=p,
    )
