"""Latent topic model fit by collapsed Gibbs sampling.

Documents are bags of tokens with stop words already removed by the
caller.  The fitted model keeps the topic-word count table so that new
documents can be folded in later without touching the training corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError

DEFAULT_TOPICS = 20
DEFAULT_ALPHA = 2.5
DEFAULT_BETA = 0.01
DEFAULT_FIT_SWEEPS = 1000
DEFAULT_INFER_SWEEPS = 100


@dataclass(frozen=True)
class LdaModel:
    """Frozen outcome of a Gibbs run: vocabulary plus count tables."""

    vocabulary: tuple[str, ...]
    topic_word: np.ndarray
    topic_totals: np.ndarray
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        topics, width = self.topic_word.shape
        if width != len(self.vocabulary):
            raise ValueError("topic_word width does not match vocabulary")
        if self.topic_totals.shape != (topics,):
            raise ValueError("topic_totals length does not match topic count")

    @property
    def topics(self) -> int:
        return int(self.topic_word.shape[0])

    def word_index(self) -> dict[str, int]:
        return {word: i for i, word in enumerate(self.vocabulary)}


def _sample_topic(
    weights: np.ndarray,
    u: float,
) -> int:
    cum = np.cumsum(weights)
    total = cum[-1]
    return int(np.searchsorted(cum, u * total, side="right"))


def lda_fit(
    documents: list[list[str]],
    topics: int = DEFAULT_TOPICS,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    sweeps: int = DEFAULT_FIT_SWEEPS,
    seed: int = 0,
) -> LdaModel:
    """Fit a topic model over the documents.

    Raises TrainingError if the corpus is empty or contains no tokens
    at all, since the sampler has no vocabulary to work with.
    """
    if topics < 1:
        raise ValueError("topics must be positive")
    if not documents:
        raise TrainingError("topic model needs at least one document")
    vocab = sorted({w for doc in documents for w in doc})
    if not vocab:
        raise TrainingError("topic model corpus has an empty vocabulary")
    index = {w: i for i, w in enumerate(vocab)}
    v = len(vocab)

    # Flatten to parallel arrays: one entry per token occurrence.
    doc_ids: list[int] = []
    word_ids: list[int] = []
    for d, doc in enumerate(documents):
        for w in doc:
            doc_ids.append(d)
            word_ids.append(index[w])
    doc_arr = np.asarray(doc_ids, dtype=np.int64)
    word_arr = np.asarray(word_ids, dtype=np.int64)
    n_tokens = doc_arr.shape[0]

    rng = np.random.default_rng(seed)
    assignment = rng.integers(0, topics, size=n_tokens)

    topic_word = np.zeros((topics, v), dtype=np.float64)
    topic_totals = np.zeros(topics, dtype=np.float64)
    doc_topic = np.zeros((len(documents), topics), dtype=np.float64)
    np.add.at(topic_word, (assignment, word_arr), 1.0)
    np.add.at(topic_totals, assignment, 1.0)
    np.add.at(doc_topic, (doc_arr, assignment), 1.0)

    beta_v = beta * v
    for _ in range(sweeps):
        uniforms = rng.random(n_tokens)
        for i in range(n_tokens):
            w = word_arr[i]
            d = doc_arr[i]
            z = assignment[i]
            topic_word[z, w] -= 1.0
            topic_totals[z] -= 1.0
            doc_topic[d, z] -= 1.0
            weights = (topic_word[:, w] + beta) * (doc_topic[d] + alpha)
            weights /= topic_totals + beta_v
            z = _sample_topic(weights, uniforms[i])
            assignment[i] = z
            topic_word[z, w] += 1.0
            topic_totals[z] += 1.0
            doc_topic[d, z] += 1.0

    return LdaModel(
        vocabulary=tuple(vocab),
        topic_word=topic_word,
        topic_totals=topic_totals,
        alpha=alpha,
        beta=beta,
    )


def lda_infer(
    model: LdaModel,
    document: list[str],
    sweeps: int = DEFAULT_INFER_SWEEPS,
    seed: int = 0,
) -> np.ndarray:
    """Fold a new document into a fitted model.

    The training counts stay frozen; only the document's own topic
    counts move.  Tokens outside the model vocabulary are dropped, and
    a document with no known tokens gets the uniform distribution.
    """
    topics = model.topics
    index = model.word_index()
    word_arr = np.asarray(
        [index[w] for w in document if w in index], dtype=np.int64
    )
    n_tokens = word_arr.shape[0]
    if n_tokens == 0:
        return np.full(topics, 1.0 / topics)

    rng = np.random.default_rng(seed)
    assignment = rng.integers(0, topics, size=n_tokens)
    doc_topic = np.zeros(topics, dtype=np.float64)
    np.add.at(doc_topic, assignment, 1.0)

    beta_v = model.beta * len(model.vocabulary)
    word_given_topic = (model.topic_word + model.beta) / (
        model.topic_totals[:, None] + beta_v
    )
    for _ in range(sweeps):
        uniforms = rng.random(n_tokens)
        for i in range(n_tokens):
            z = assignment[i]
            doc_topic[z] -= 1.0
            weights = word_given_topic[:, word_arr[i]] * (
                doc_topic + model.alpha
            )
            z = _sample_topic(weights, uniforms[i])
            assignment[i] = z
            doc_topic[z] += 1.0

    theta = (doc_topic + model.alpha) / (n_tokens + topics * model.alpha)
    return theta


def topic_word_distribution(model: LdaModel) -> np.ndarray:
    """Per-topic word distributions; each row sums to one."""
    beta_v = model.beta * len(model.vocabulary)
    return (model.topic_word + model.beta) / (
        model.topic_totals[:, None] + beta_v
    )


LDA_FORMAT = "lda/1"


def save_lda_model(model: LdaModel, path: str) -> None:
    lines = [LDA_FORMAT]
    lines.append(f"topics\t{model.topics}")
    lines.append(f"alpha\t{model.alpha!r}")
    lines.append(f"beta\t{model.beta!r}")
    lines.append(
        "totals\t" + "\t".join(repr(float(v)) for v in model.topic_totals)
    )
    for i, word in enumerate(model.vocabulary):
        counts = "\t".join(repr(float(v)) for v in model.topic_word[:, i])
        lines.append(f"word\t{word}\t{counts}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_lda_model(path: str) -> LdaModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != LDA_FORMAT:
        raise ValueError(f"not a {LDA_FORMAT} file: {path}")
    topics = 0
    alpha = beta = 0.0
    totals: np.ndarray | None = None
    vocab: list[str] = []
    columns: list[list[float]] = []
    for line in lines[1:]:
        parts = line.split("\t")
        if parts[0] == "topics":
            topics = int(parts[1])
        elif parts[0] == "alpha":
            alpha = float(parts[1])
        elif parts[0] == "beta":
            beta = float(parts[1])
        elif parts[0] == "totals":
            totals = np.asarray([float(v) for v in parts[1:]])
        elif parts[0] == "word":
            vocab.append(parts[1])
            columns.append([float(v) for v in parts[2:]])
        else:
            raise ValueError(f"unknown topic model line: {parts[0]!r}")
    if totals is None or topics == 0:
        raise ValueError(f"incomplete topic model file: {path}")
    topic_word = (
        np.asarray(columns).T if columns else np.zeros((topics, 0))
    )
    return LdaModel(
        vocabulary=tuple(vocab),
        topic_word=topic_word,
        topic_totals=totals,
        alpha=alpha,
        beta=beta,
    )
