"""Metric-panel assembly, standardization, PCA, and the trajectory score.

The panel is a fixed-order 22-value vector per conversation. Fitting
standardizes the panels (population variance), eigendecomposes the
covariance with a cyclic Jacobi solver, and orients the first component
so that higher scores mean more prosocial activity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .accommodation import conversation_accommodation, load_marker_catalog
from .errors import ArtifactError, NumericError, PanelError, TrainingError
from .lexical import (
    DomainLists,
    GratitudeLexicon,
    classify_urls,
    count_gratitude,
    count_laughter,
    detect_compliments,
    has_first_person,
    load_domain_lists,
    load_gratitude_lexicon,
)
from .scorers.ngram import NgramLogisticModel, classify_text
from .scorers.regressors import TextRegressorHandle, load_regressor_handle, _score as _regressor_score
from .scorers.toxicity import ToxicityClient, ToxicityConfig, toxicity_metrics
from .structural import structural_metrics
from .textlex import SentimentLexicon, load_sentiment_lexicon

METRIC_NAMES: tuple[str, ...] = (
    "information_sharing",
    "link_replies",
    "educational_link_replies",
    "gratitude",
    "politeness",
    "linguistic_accommodation",
    "community_score",
    "supportiveness",
    "subsequent_comments",
    "direct_replies",
    "conversation_depth",
    "sustained_partners",
    "sustained_turns",
    "compliments",
    "laughter",
    "personal_disclosure",
    "donations",
    "mentorship",
    "pct_nontoxic_untuned",
    "pct_nontoxic_tuned",
    "toxic_untuned",
    "toxic_tuned",
)

# metrics whose loadings define the "more prosocial" direction; the two
# toxic-reply counters are excluded because they point the other way
PROSOCIAL_METRICS: tuple[str, ...] = tuple(
    m for m in METRIC_NAMES if m not in ("toxic_untuned", "toxic_tuned")
)

_METRIC_INDEX = {name: i for i, name in enumerate(METRIC_NAMES)}


@dataclass(frozen=True)
class MetricPanel:
    values: np.ndarray
    defined_mask: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(METRIC_NAMES),):
            raise ValueError("panel must hold exactly one value per metric")
        if self.defined_mask.shape != self.values.shape:
            raise ValueError("mask shape differs from values")

    def value(self, name: str) -> float:
        return float(self.values[_METRIC_INDEX[name]])

    def defined(self, name: str) -> bool:
        return bool(self.defined_mask[_METRIC_INDEX[name]])


@dataclass
class PanelContext:
    """Every scorer the panel needs, loaded once and shared read-only."""

    sentiment: SentimentLexicon
    domains: DomainLists
    gratitude: GratitudeLexicon
    markers: dict[str, frozenset[str]]
    politeness: TextRegressorHandle
    supportiveness: TextRegressorHandle
    toxicity: ToxicityClient
    info_model: NgramLogisticModel | None = None
    mentoring_model: NgramLogisticModel | None = None

    @classmethod
    def default(cls, toxicity_client: ToxicityClient | None = None,
                info_model: NgramLogisticModel | None = None,
                mentoring_model: NgramLogisticModel | None = None) -> "PanelContext":
        return cls(
            sentiment=load_sentiment_lexicon(),
            domains=load_domain_lists(),
            gratitude=load_gratitude_lexicon(),
            markers=load_marker_catalog(),
            politeness=load_regressor_handle("politeness"),
            supportiveness=load_regressor_handle("supportiveness"),
            toxicity=toxicity_client or ToxicityClient(ToxicityConfig(offline=True)),
            info_model=info_model,
            mentoring_model=mentoring_model,
        )


def assemble_panel(conversation, ctx: PanelContext) -> MetricPanel:
    """Compute all 22 metrics for one conversation.

    Undefined metrics (accommodation without exchanges, mean politeness
    or supportiveness with no replies) carry value 0 and mask False.
    """
    values = np.zeros(len(METRIC_NAMES))
    mask = np.ones(len(METRIC_NAMES), dtype=bool)

    def put(name: str, value: float, defined: bool = True) -> None:
        idx = _METRIC_INDEX[name]
        values[idx] = value if defined else 0.0
        mask[idx] = defined

    replies = conversation.walk_replies()

    try:
        info = 0
        links = edu = don = 0
        for reply in replies:
            total, e, d = classify_urls(reply.body, ctx.domains)
            links += total
            edu += e
            don += d
            positive = e > 0
            if not positive and ctx.info_model is not None:
                positive = classify_text(ctx.info_model, reply.body)[1]
            if positive:
                info += 1
        put("information_sharing", info)
        put("link_replies", links)
        put("educational_link_replies", edu)
        put("donations", don)
    except Exception as exc:  # noqa: BLE001 - report which metric broke
        raise PanelError("information_sharing", str(exc)) from exc

    try:
        put("gratitude", sum(count_gratitude(r.body, ctx.gratitude) for r in replies))
    except Exception as exc:
        raise PanelError("gratitude", str(exc)) from exc

    try:
        if replies:
            mean_pol = sum(_regressor_score(r.body, ctx.politeness) for r in replies) / len(replies)
            put("politeness", mean_pol)
        else:
            put("politeness", 0.0, defined=False)
    except Exception as exc:
        raise PanelError("politeness", str(exc)) from exc

    try:
        accommodation = conversation_accommodation(conversation, ctx.markers)
        put("linguistic_accommodation", accommodation if accommodation is not None else 0.0,
            defined=accommodation is not None)
    except Exception as exc:
        raise PanelError("linguistic_accommodation", str(exc)) from exc

    try:
        if replies:
            mean_sup = sum(_regressor_score(r.body, ctx.supportiveness) for r in replies) / len(replies)
            put("supportiveness", mean_sup)
        else:
            put("supportiveness", 0.0, defined=False)
    except Exception as exc:
        raise PanelError("supportiveness", str(exc)) from exc

    try:
        st = structural_metrics(conversation)
        put("community_score", st.community_score)
        put("subsequent_comments", st.subsequent_comments)
        put("direct_replies", st.direct_replies)
        put("conversation_depth", st.depth)
        put("sustained_partners", st.sustained_partners)
        put("sustained_turns", st.sustained_turns)
    except Exception as exc:
        raise PanelError("subsequent_comments", str(exc)) from exc

    try:
        put("compliments", sum(detect_compliments(r.body, ctx.sentiment) for r in replies))
    except Exception as exc:
        raise PanelError("compliments", str(exc)) from exc

    try:
        put("laughter", sum(count_laughter(r.body) for r in replies))
    except Exception as exc:
        raise PanelError("laughter", str(exc)) from exc

    try:
        put("personal_disclosure", sum(1 for r in replies if has_first_person(r.body)))
    except Exception as exc:
        raise PanelError("personal_disclosure", str(exc)) from exc

    try:
        mentor = 0
        if ctx.mentoring_model is not None:
            mentor = sum(1 for r in replies if classify_text(ctx.mentoring_model, r.body)[1])
        put("mentorship", mentor)
    except Exception as exc:
        raise PanelError("mentorship", str(exc)) from exc

    try:
        scores = [ctx.toxicity.score(r.body) for r in replies]
        cfg = ctx.toxicity.config
        untuned, tuned, pct_untuned, pct_tuned = toxicity_metrics(
            scores, cfg.untuned_threshold, cfg.tuned_threshold)
        put("toxic_untuned", untuned)
        put("toxic_tuned", tuned)
        put("pct_nontoxic_untuned", pct_untuned)
        put("pct_nontoxic_tuned", pct_tuned)
    except Exception as exc:
        raise PanelError("pct_nontoxic_untuned", str(exc)) from exc

    return MetricPanel(values=values, defined_mask=mask)


def fit_standardizer(panels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population std; zero variance shows up as std 0."""
    if panels.ndim != 2 or panels.shape[0] < 2:
        raise TrainingError("standardizer needs at least 2 panels")
    if not np.all(np.isfinite(panels)):
        raise NumericError("non-finite panel values")
    return panels.mean(axis=0), panels.std(axis=0)


def symmetric_eigen(matrix: np.ndarray, tol: float = 1e-13,
                    max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and column eigenvectors by cyclic Jacobi."""
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise NumericError("non-finite matrix entries")
    a = (a + a.T) / 2.0
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a) + 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                others = [i for i in range(n) if i != p and i != q]
                aip = a[others, p].copy()
                aiq = a[others, q].copy()
                new_p = c * aip - s * aiq
                new_q = s * aip + c * aiq
                a[others, p] = new_p
                a[p, others] = new_p
                a[others, q] = new_q
                a[q, others] = new_q
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = a[q, p] = 0.0
                vip = v[:, p].copy()
                viq = v[:, q].copy()
                v[:, p] = c * vip - s * viq
                v[:, q] = s * vip + c * viq
    eigvals = np.diag(a).copy()
    order = np.argsort(-eigvals, kind="stable")
    return eigvals[order], v[:, order]


def fit_pca(standardized: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(loadings rows, explained-variance ratios) of the covariance matrix.

    Components come out in descending-eigenvalue order with a
    deterministic orientation: each component's largest-magnitude
    coordinate is positive.
    """
    z = np.asarray(standardized, dtype=float)
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite standardized values")
    n = z.shape[0]
    cov = z.T @ z / n
    eigvals, eigvecs = symmetric_eigen(cov)
    eigvals = np.clip(eigvals, 0.0, None)
    trace = float(np.sum(eigvals))
    if trace <= 0.0:
        raise NumericError("zero total variance")
    loadings = eigvecs.T.copy()
    for i in range(loadings.shape[0]):
        pivot = int(np.argmax(np.abs(loadings[i])))
        if loadings[i, pivot] < 0:
            loadings[i] = -loadings[i]
    return loadings, eigvals / trace


@dataclass(frozen=True)
class TrajectoryModel:
    metric_names: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    kept: np.ndarray  # bool per metric; zero-variance metrics excluded
    loadings: np.ndarray  # components x metrics, sign convention applied
    explained_variance_ratio: np.ndarray
    sign_convention: np.ndarray  # per component, relative to solver output

    def standardize(self, values: np.ndarray) -> np.ndarray:
        safe = np.where(self.kept, self.stds, 1.0)
        z = (values - self.means) / safe
        return np.where(self.kept, z, 0.0)


def fit_trajectory_model(panels: Sequence[MetricPanel] | np.ndarray) -> TrajectoryModel:
    """Standardize, decompose, and orient the first component prosocially."""
    if isinstance(panels, np.ndarray):
        matrix = np.asarray(panels, dtype=float)
    else:
        matrix = np.stack([p.values for p in panels])
    if matrix.ndim != 2 or matrix.shape[1] != len(METRIC_NAMES):
        raise ValueError("panel matrix must have one column per metric")
    means, stds = fit_standardizer(matrix)
    kept = stds > 0.0
    if int(np.sum(kept)) < 2:
        raise TrainingError("fewer than 2 metrics with variance; cannot fit PCA")
    z = (matrix[:, kept] - means[kept]) / stds[kept]
    core_loadings, ratios = fit_pca(z)

    m = len(METRIC_NAMES)
    k = core_loadings.shape[0]
    loadings = np.zeros((k, m))
    loadings[:, kept] = core_loadings
    sign = np.ones(k)

    prosocial_idx = [_METRIC_INDEX[name] for name in PROSOCIAL_METRICS]
    if float(np.mean(loadings[0, prosocial_idx])) < 0.0:
        sign[0] = -1.0
        loadings[0] = -loadings[0]
    return TrajectoryModel(
        metric_names=METRIC_NAMES,
        means=means,
        stds=stds,
        kept=kept,
        loadings=loadings,
        explained_variance_ratio=ratios,
        sign_convention=sign,
    )


def trajectory_score(model: TrajectoryModel, panel: MetricPanel | np.ndarray) -> float:
    values = panel.values if isinstance(panel, MetricPanel) else np.asarray(panel, dtype=float)
    return float(model.loadings[0] @ model.standardize(values))


def explained_variance(model: TrajectoryModel, k: int) -> float:
    if not 1 <= k <= len(model.explained_variance_ratio):
        raise ValueError(f"k must be in 1..{len(model.explained_variance_ratio)}")
    return float(np.sum(model.explained_variance_ratio[:k]))


_MODEL_FORMAT = "trajectory/1"


def _fmt_vector(vec: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in vec)


def save_trajectory_model(model: TrajectoryModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"format: {_MODEL_FORMAT}\n")
        fh.write("metrics: " + ",".join(model.metric_names) + "\n")
        fh.write("means: " + _fmt_vector(model.means) + "\n")
        fh.write("stds: " + _fmt_vector(model.stds) + "\n")
        fh.write("kept: " + " ".join("1" if k else "0" for k in model.kept) + "\n")
        fh.write("sign_convention: " + _fmt_vector(model.sign_convention) + "\n")
        fh.write("explained_variance_ratio: " + _fmt_vector(model.explained_variance_ratio) + "\n")
        fh.write(f"components: {model.loadings.shape[0]}\n")
        for row in model.loadings:
            fh.write("loading: " + _fmt_vector(row) + "\n")


def load_trajectory_model(path: str) -> TrajectoryModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"format: {_MODEL_FORMAT}":
        raise ArtifactError(f"{path}: not a {_MODEL_FORMAT} model file")
    fields: dict[str, str] = {}
    rows: list[np.ndarray] = []
    for line in lines[1:]:
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "loading":
            rows.append(np.array([float(x) for x in value.split()]))
        else:
            fields[key] = value
    try:
        names = tuple(fields["metrics"].split(","))
        model = TrajectoryModel(
            metric_names=names,
            means=np.array([float(x) for x in fields["means"].split()]),
            stds=np.array([float(x) for x in fields["stds"].split()]),
            kept=np.array([x == "1" for x in fields["kept"].split()]),
            loadings=np.stack(rows),
            explained_variance_ratio=np.array(
                [float(x) for x in fields["explained_variance_ratio"].split()]),
            sign_convention=np.array([float(x) for x in fields["sign_convention"].split()]),
        )
    except (KeyError, ValueError) as exc:
        raise ArtifactError(f"{path}: corrupt trajectory model ({exc})") from exc
    if int(fields.get("components", len(rows))) != len(rows):
        raise ArtifactError(f"{path}: component count mismatch")
    return model


def check_manifest(model: TrajectoryModel, metric_names: Sequence[str]) -> None:
    """Refuse to score panels whose metric order differs from the model's."""
    if tuple(metric_names) != tuple(model.metric_names):
        raise ArtifactError("panel metric manifest does not match the trajectory model")
