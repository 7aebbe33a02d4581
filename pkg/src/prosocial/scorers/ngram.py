"""Unigram+bigram logistic classifiers with heuristic corpus labeling.

Used for the information-sharing and mentoring metrics. Training picks
the minimum n-gram frequency by cross-validated F1, then fits the final
model on the full corpus by L2-regularized maximum likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, sparse

from ..errors import ArtifactError, TrainingError
from ..textlex import tokenize

MIN_FREQ_CANDIDATES = (100, 50, 25, 15, 10)
DEFAULT_THRESHOLD = 0.7


def extract_ngrams(text: str) -> list[str]:
    """Unigrams and bigrams over the shared token stream; bigrams space-joined."""
    tokens = tokenize(text).tokens
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


@dataclass(frozen=True)
class NgramLogisticModel:
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float
    min_ngram_frequency: int
    decision_threshold: float = DEFAULT_THRESHOLD
    kind: str = ""

    def __post_init__(self):
        if len(self.weights) != len(self.vocabulary):
            raise ValueError("weights and vocabulary sizes differ")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision threshold must lie in (0,1)")


def _sigmoid(z: float | np.ndarray):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def classify_text(model: NgramLogisticModel, text: str) -> tuple[float, bool]:
    """(probability, positive) for one comment body."""
    z = model.bias
    vocab, w = model.vocabulary, model.weights
    for gram in extract_ngrams(text):
        idx = vocab.get(gram)
        if idx is not None:
            z += w[idx]
    prob = float(_sigmoid(z))
    return prob, prob >= model.decision_threshold


def build_vocabulary(gram_lists: Sequence[list[str]], min_freq: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for grams in gram_lists:
        for g in grams:
            counts[g] = counts.get(g, 0) + 1
    kept = sorted(g for g, c in counts.items() if c >= min_freq)
    return {g: i for i, g in enumerate(kept)}


def _count_matrix(gram_lists: Sequence[list[str]], vocab: dict[str, int]) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for grams in gram_lists:
        row: dict[int, float] = {}
        for g in grams:
            idx = vocab.get(g)
            if idx is not None:
                row[idx] = row.get(idx, 0.0) + 1.0
        for idx in sorted(row):
            indices.append(idx)
            data.append(row[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(gram_lists), len(vocab)),
    )


def _fit_logistic(X: sparse.csr_matrix, y: np.ndarray, l2: float,
                  max_iter: int = 200) -> tuple[np.ndarray, float]:
    """L2-penalized logistic MLE; the bias is never penalized."""
    n, d = X.shape

    def objective(params: np.ndarray):
        w, b = params[:d], params[d]
        z = X.dot(w) + b
        # log(1+exp(z)) - y*z, computed stably
        loss = float(np.sum(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
        p = _sigmoid(z)
        grad_w = X.T.dot(p - y) + l2 * w
        grad_b = float(np.sum(p - y))
        return loss, np.concatenate([grad_w, [grad_b]])

    x0 = np.zeros(d + 1)
    result = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B",
                               options={"maxiter": max_iter})
    return result.x[:d].copy(), float(result.x[d])


def _f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def train_ngram_classifier(
    corpus: Sequence[tuple[str, int]],
    min_freq_candidates: Sequence[int] = MIN_FREQ_CANDIDATES,
    folds: int = 5,
    seed: int = 0,
    l2: float = 1.0,
    decision_threshold: float = DEFAULT_THRESHOLD,
    kind: str = "",
) -> NgramLogisticModel:
    """Cross-validate the frequency floor, then fit on the full corpus.

    Fold F1 is measured at probability 0.5; the returned model still
    applies the configured deployment threshold. Candidate order breaks
    mean-F1 ties.
    """
    if not corpus:
        raise TrainingError("empty training corpus")
    texts = [t for t, _ in corpus]
    y = np.asarray([int(l) for _, l in corpus], dtype=float)
    if len(set(y.tolist())) < 2:
        raise TrainingError("training corpus contains a single class")
    grams = [extract_ngrams(t) for t in texts]

    n = len(grams)
    order = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    for pos, idx in enumerate(order):
        fold_of[idx] = pos % folds

    best_mf, best_f1 = None, -1.0
    for mf in min_freq_candidates:
        scores = []
        for k in range(folds):
            train_idx = np.flatnonzero(fold_of != k)
            val_idx = np.flatnonzero(fold_of == k)
            if len(val_idx) == 0 or len(set(y[train_idx].tolist())) < 2:
                scores.append(0.0)
                continue
            vocab = build_vocabulary([grams[i] for i in train_idx], mf)
            Xtr = _count_matrix([grams[i] for i in train_idx], vocab)
            w, b = _fit_logistic(Xtr, y[train_idx], l2)
            Xval = _count_matrix([grams[i] for i in val_idx], vocab)
            pred = (_sigmoid(Xval.dot(w) + b) >= 0.5).astype(float)
            scores.append(_f1(y[val_idx], pred))
        mean_f1 = sum(scores) / folds
        if mean_f1 > best_f1 + 1e-12:
            best_f1, best_mf = mean_f1, mf

    vocab = build_vocabulary(grams, best_mf)
    X = _count_matrix(grams, vocab)
    w, b = _fit_logistic(X, y, l2)
    return NgramLogisticModel(
        vocabulary=vocab, weights=w, bias=b,
        min_ngram_frequency=int(best_mf),
        decision_threshold=decision_threshold, kind=kind,
    )


@dataclass(frozen=True)
class ScorableComment:
    """The slice of a comment the labeling heuristics need."""
    text: str
    subreddit: str
    score: int
    parent_text: str = ""
    is_tlc: bool = False


@dataclass(frozen=True)
class LabelingRules:
    kind: str  # "info" or "mentoring"
    ask_subreddits: frozenset[str] = frozenset()
    min_score: int = 2
    advice_token: str = "advice"
    exclude_token: str = "bad"
    negative_sample_size: int = 1000
    seed: int = 0


def _is_positive(comment: ScorableComment, rules: LabelingRules) -> bool:
    sub = comment.subreddit.lower()
    if rules.kind == "info":
        return (not comment.is_tlc
                and sub in rules.ask_subreddits
                and "?" in comment.parent_text
                and comment.score > rules.min_score)
    if rules.kind == "mentoring":
        return (comment.is_tlc
                and rules.advice_token in sub
                and rules.exclude_token not in sub)
    raise ValueError(f"unknown labeling kind {rules.kind!r}")


def _negative_pool_member(comment: ScorableComment, rules: LabelingRules) -> bool:
    sub = comment.subreddit.lower()
    if rules.kind == "info":
        return sub not in rules.ask_subreddits
    return not (rules.advice_token in sub and rules.exclude_token not in sub)


def heuristic_label_corpus(comments: Iterable[ScorableComment],
                           rules: LabelingRules) -> list[tuple[str, int]]:
    """Positives by rule, negatives reservoir-sampled from other subreddits."""
    positives: list[str] = []
    reservoir: list[str] = []
    rng = np.random.default_rng(rules.seed)
    seen_negatives = 0
    for comment in comments:
        if _is_positive(comment, rules):
            positives.append(comment.text)
        elif _negative_pool_member(comment, rules):
            seen_negatives += 1
            if len(reservoir) < rules.negative_sample_size:
                reservoir.append(comment.text)
            else:
                j = int(rng.integers(0, seen_negatives))
                if j < rules.negative_sample_size:
                    reservoir[j] = comment.text
    if not positives:
        raise TrainingError(f"no positive examples matched the {rules.kind} rules")
    return [(t, 1) for t in positives] + [(t, 0) for t in reservoir]


_MODEL_FORMAT = "ngram-logistic/1"


def save_ngram_model(model: NgramLogisticModel, path: str) -> None:
    inverse = sorted(model.vocabulary, key=model.vocabulary.get)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"format: {_MODEL_FORMAT}\n")
        fh.write(f"kind: {model.kind}\n")
        fh.write(f"min_ngram_frequency: {model.min_ngram_frequency}\n")
        fh.write(f"decision_threshold: {float(model.decision_threshold)!r}\n")
        fh.write(f"bias: {float(model.bias)!r}\n")
        fh.write(f"ngrams: {len(inverse)}\n")
        for i, gram in enumerate(inverse):
            fh.write(f"{gram}\t{float(model.weights[i])!r}\n")


def load_ngram_model(path: str) -> NgramLogisticModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"format: {_MODEL_FORMAT}":
        raise ArtifactError(f"{path}: not a {_MODEL_FORMAT} model file")
    header: dict[str, str] = {}
    body_start = 1
    for i, line in enumerate(lines[1:], start=1):
        if "\t" in line:
            body_start = i
            break
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
        body_start = i + 1
    try:
        count = int(header["ngrams"])
        vocab: dict[str, int] = {}
        weights = np.empty(count)
        for i, line in enumerate(lines[body_start:body_start + count]):
            gram, _, weight = line.rpartition("\t")
            vocab[gram] = i
            weights[i] = float(weight)
        return NgramLogisticModel(
            vocabulary=vocab, weights=weights,
            bias=float(header["bias"]),
            min_ngram_frequency=int(header["min_ngram_frequency"]),
            decision_threshold=float(header["decision_threshold"]),
            kind=header.get("kind", ""),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ArtifactError(f"{path}: corrupt model file ({exc})") from exc
