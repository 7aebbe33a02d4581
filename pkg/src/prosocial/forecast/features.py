"""Forecast feature vector built from the post and first comment only.

The vector deliberately sees nothing downstream of the first comment,
so a forecaster trained on it predicts the conversation's trajectory
rather than summarizing it.  Layout, in order:

  [0:14]   first-comment text metrics (counts and scores on its body):
           information, links, educational links, gratitude,
           politeness, supportiveness, compliments, laughter,
           first-person disclosure, donation links, mentorship,
           toxicity score, toxic at 0.5, toxic at 0.8
  [14:34]  post topic distribution (20)
  [34:54]  first-comment topic distribution (20)
  [54]     cosine similarity of the two topic distributions
  [55]     jaccard similarity of non-stop-word token sets
  [56:61]  word count, sentiment, subjectivity, misspellings,
           reading grade of the first comment
  [61:64]  author gender one-hot (unknown, m, f)
  [64:80]  subreddit embedding reduced to 16 dims
  [80:86]  cyclic time of first comment: sin/cos for day-of-month,
           day-of-week, hour-of-day
  [86]     log1p minutes between post and first comment
"""

from __future__ import annotations

import datetime
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..corpus import Comment, Post
from ..lexical import (
    classify_urls,
    count_gratitude,
    count_laughter,
    detect_compliments,
    has_first_person,
)
from ..scorers.ngram import classify_text
from ..scorers.regressors import politeness_score, supportiveness_score
from ..textlex import (
    count_misspellings,
    flesch_kincaid_grade,
    load_stopwords,
    sentiment_compound,
    subjectivity_score,
    tokenize,
    word_count,
)
from ..trajectory import PanelContext, fit_pca, symmetric_eigen
from .lda import DEFAULT_INFER_SWEEPS, LdaModel, lda_infer

EMBEDDING_DIMS = 16
EMBEDDING_WIDTH = 300

_TLC_BLOCK = (
    "tlc_information",
    "tlc_links",
    "tlc_educational_links",
    "tlc_gratitude",
    "tlc_politeness",
    "tlc_supportiveness",
    "tlc_compliments",
    "tlc_laughter",
    "tlc_disclosure",
    "tlc_donations",
    "tlc_mentorship",
    "tlc_toxicity",
    "tlc_toxic_at_05",
    "tlc_toxic_at_08",
)

_GENDERS = ("unknown", "m", "f")


def load_embedding_table(path: str) -> dict[str, np.ndarray]:
    """Read "name<space>300 reals" lines; names are lowercased."""
    table: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != EMBEDDING_WIDTH + 1:
                raise ValueError(
                    f"embedding line for {parts[0]!r} has {len(parts) - 1} "
                    f"values, expected {EMBEDDING_WIDTH}"
                )
            table[parts[0].lower()] = np.asarray(
                [float(x) for x in parts[1:]], dtype=np.float64
            )
    return table


@dataclass(frozen=True)
class EmbeddingReducer:
    """Projects known subreddit vectors onto their leading components.

    Unknown subreddits get a reproducible pseudo-random vector keyed by
    name and seed, so feature extraction never fails on new data.
    """

    vectors: dict[str, np.ndarray]
    means: np.ndarray
    stds: np.ndarray
    components: np.ndarray  # dims x width, zero rows when rank is short
    dims: int = EMBEDDING_DIMS

    def reduce(self, subreddit: str, seed: int = 0) -> np.ndarray:
        key = subreddit.lower()
        vec = self.vectors.get(key)
        if vec is None:
            digest = hashlib.sha256(key.encode("utf-8")).digest()
            salt = int.from_bytes(digest[:8], "big")
            rng = np.random.default_rng((salt + seed) % (2**64))
            return rng.standard_normal(self.dims)
        z = (vec - self.means) / self.stds
        return self.components @ z


def fit_embedding_reducer(
    table: dict[str, np.ndarray],
    dims: int = EMBEDDING_DIMS,
) -> EmbeddingReducer:
    """Fit a linear reduction of the embedding table.

    The table has far more columns than rows at any realistic size, so
    the eigenproblem is solved on the row-space Gram matrix and mapped
    back, which keeps the cost quadratic in the number of subreddits.
    """
    if not table:
        raise ValueError("embedding table is empty")
    names = sorted(table)
    matrix = np.stack([table[n] for n in names]).astype(np.float64)
    n, width = matrix.shape

    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    stds = np.where(stds > 0.0, stds, 1.0)
    z = (matrix - means) / stds

    components = np.zeros((dims, width), dtype=np.float64)
    if n >= 2:
        if n <= width:
            gram = (z @ z.T) / n
            values, vectors = symmetric_eigen(gram)
            rank = 0
            for i, lam in enumerate(values):
                if rank >= dims or lam <= 1e-12:
                    break
                direction = z.T @ vectors[:, i]
                norm = float(np.linalg.norm(direction))
                if norm <= 0.0:
                    continue
                direction /= norm
                pivot = int(np.argmax(np.abs(direction)))
                if direction[pivot] < 0.0:
                    direction = -direction
                components[rank] = direction
                rank += 1
        else:
            loadings, _ = fit_pca(z)
            take = min(dims, len(loadings))
            for i in range(take):
                components[i] = loadings[i]
    return EmbeddingReducer(
        vectors=dict(table),
        means=means,
        stds=stds,
        components=components,
        dims=dims,
    )


@dataclass
class FeatureContext:
    """Everything feature extraction needs beyond the two texts."""

    panel: PanelContext
    lda_post: LdaModel
    lda_tlc: LdaModel
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    embedding: EmbeddingReducer | None = None
    genders: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    infer_sweeps: int = DEFAULT_INFER_SWEEPS


def feature_names(topics: int = 20, dims: int = EMBEDDING_DIMS) -> tuple[str, ...]:
    names: list[str] = list(_TLC_BLOCK)
    names += [f"topic_post_{i:02d}" for i in range(topics)]
    names += [f"topic_tlc_{i:02d}" for i in range(topics)]
    names += ["topic_cosine", "jaccard"]
    names += [
        "tlc_word_count",
        "tlc_sentiment",
        "tlc_subjectivity",
        "tlc_misspellings",
        "tlc_fk_grade",
    ]
    names += [f"gender_{g}" for g in _GENDERS]
    names += [f"subreddit_embed_{i:02d}" for i in range(dims)]
    names += [
        "dom_sin", "dom_cos",
        "dow_sin", "dow_cos",
        "hod_sin", "hod_cos",
    ]
    names += ["minutes_since_post"]
    return tuple(names)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _content_tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    return [t for t in tokenize(text).tokens if t not in stopwords]


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def _tlc_block(body: str, ctx: FeatureContext) -> list[float]:
    panel = ctx.panel
    total, edu, don = classify_urls(body, panel.domains)
    info_positive = edu > 0
    if panel.info_model is not None:
        _, flag = classify_text(panel.info_model, body)
        info_positive = info_positive or flag
    mentorship = 0.0
    if panel.mentoring_model is not None:
        _, flag = classify_text(panel.mentoring_model, body)
        mentorship = 1.0 if flag else 0.0
    tox = panel.toxicity.score(body)
    return [
        1.0 if info_positive else 0.0,
        float(total),
        float(edu),
        float(count_gratitude(body, panel.gratitude)),
        politeness_score(body, panel.politeness),
        supportiveness_score(body, panel.supportiveness),
        float(detect_compliments(body, panel.sentiment)),
        float(count_laughter(body)),
        1.0 if has_first_person(body) else 0.0,
        float(don),
        mentorship,
        tox,
        1.0 if tox > 0.5 else 0.0,
        1.0 if tox > 0.8 else 0.0,
    ]


def _cyclic(frac: float) -> tuple[float, float]:
    angle = 2.0 * math.pi * frac
    return math.sin(angle), math.cos(angle)


def build_features(post: Post, tlc: Comment, ctx: FeatureContext) -> np.ndarray:
    """Extract the documented 87-value vector for one conversation."""
    post_text = f"{post.title}\n{post.selftext}".strip()
    body = tlc.body

    values: list[float] = _tlc_block(body, ctx)

    post_tokens = _content_tokens(post_text, ctx.stopwords)
    tlc_tokens = _content_tokens(body, ctx.stopwords)
    theta_post = lda_infer(
        ctx.lda_post, post_tokens, sweeps=ctx.infer_sweeps, seed=ctx.seed
    )
    theta_tlc = lda_infer(
        ctx.lda_tlc, tlc_tokens, sweeps=ctx.infer_sweeps, seed=ctx.seed
    )
    values += theta_post.tolist()
    values += theta_tlc.tolist()
    values.append(_cosine(theta_post, theta_tlc))
    values.append(_jaccard(set(post_tokens), set(tlc_tokens)))

    values.append(float(word_count(body)))
    values.append(sentiment_compound(body, ctx.panel.sentiment))
    values.append(subjectivity_score(body))
    values.append(float(count_misspellings(body)))
    values.append(flesch_kincaid_grade(body))

    gender = ctx.genders.get(tlc.author.lower(), "unknown")
    if gender not in _GENDERS:
        gender = "unknown"
    values += [1.0 if gender == g else 0.0 for g in _GENDERS]

    if ctx.embedding is not None:
        values += ctx.embedding.reduce(tlc.subreddit, seed=ctx.seed).tolist()
    else:
        values += [0.0] * EMBEDDING_DIMS

    when = datetime.datetime.fromtimestamp(
        tlc.created_utc, tz=datetime.timezone.utc
    )
    for frac in (
        (when.day - 1) / 31.0,
        when.weekday() / 7.0,
        when.hour / 24.0,
    ):
        s, c = _cyclic(frac)
        values.append(s)
        values.append(c)

    delta_minutes = max(0.0, (tlc.created_utc - post.created_utc) / 60.0)
    values.append(math.log1p(delta_minutes))

    out = np.asarray(values, dtype=np.float64)
    expected = len(feature_names(topics=ctx.lda_post.topics))
    if out.shape[0] != expected:
        raise AssertionError(
            f"feature vector has {out.shape[0]} values, expected {expected}"
        )
    return out


def load_gender_table(path: str) -> dict[str, str]:
    """Read "author<TAB>gender" lines; authors are lowercased."""
    table: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            author, _, gender = line.partition("\t")
            table[author.lower()] = gender.strip().lower()
    return table


def load_category_map(path: str) -> dict[str, str]:
    """Read "subreddit<TAB>category" lines; subreddits are lowercased."""
    table: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            sub, _, category = line.partition("\t")
            table[sub.lower()] = category.strip()
    return table
