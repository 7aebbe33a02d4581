"""Pairwise conversation ranking and the evaluation statistics.

Everything here is small-sample statistics or a thin logistic model
over feature differences, so the functions take plain arrays and leave
corpus plumbing to the callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize

from .errors import NumericError, TrainingError

SAMPLING_STRATA = ("any-time", "within-5-min", "metric-coverage", "no-reply")


def mcc(a: float, b: float, c: float, d: float) -> float:
    """Matthews correlation for the 2x2 table (a, b; c, d).

    A zero marginal makes the usual formula 0/0; the conventional
    value there is 0.0.  An all-zero table is rejected outright.
    """
    if min(a, b, c, d) < 0:
        raise ValueError("contingency cells must be non-negative")
    total = a + b + c + d
    if total == 0:
        raise ValueError("contingency table is all zero")
    marginals = (a + b) * (c + d) * (a + c) * (b + d)
    if marginals == 0:
        return 0.0
    return (a * d - b * c) / math.sqrt(marginals)


def mcc_significance(mcc_value: float, n: int, tests: int = 1) -> float:
    """Chi-squared p for an MCC on n samples, Bonferroni-scaled."""
    if n <= 0:
        raise ValueError("n must be positive")
    if tests < 1:
        raise ValueError("tests must be at least 1")
    chi2 = n * mcc_value * mcc_value
    p = math.erfc(math.sqrt(chi2 / 2.0))
    return min(1.0, p * tests)


def krippendorff_alpha(ratings: Sequence[Sequence[object]]) -> float:
    """Nominal-distance agreement over a coder x item matrix.

    Missing ratings are None.  Items rated by fewer than two coders
    carry no coincidence information and are skipped; if every item is
    like that the statistic is undefined.
    """
    if not ratings:
        raise ValueError("ratings matrix is empty")
    width = len(ratings[0])
    for row in ratings:
        if len(row) != width:
            raise ValueError("ratings matrix must be rectangular")

    values: list[object] = sorted(
        {row[i] for row in ratings for i in range(width) if row[i] is not None},
        key=repr,
    )
    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    coincidence = np.zeros((k, k), dtype=np.float64)

    pairable_items = 0
    for item in range(width):
        counts = np.zeros(k, dtype=np.float64)
        for row in ratings:
            v = row[item]
            if v is not None:
                counts[index[v]] += 1.0
        m = counts.sum()
        if m < 2:
            continue
        pairable_items += 1
        outer = np.outer(counts, counts)
        np.fill_diagonal(outer, counts * (counts - 1.0))
        coincidence += outer / (m - 1.0)

    if pairable_items == 0:
        raise NumericError(
            "agreement is undefined: every item was rated once"
        )
    totals = coincidence.sum(axis=1)
    n = totals.sum()
    observed = coincidence.sum() - np.trace(coincidence)
    expected_num = np.outer(totals, totals)
    expected = (expected_num.sum() - np.sum(totals * totals)) / (n - 1.0)
    if expected == 0.0:
        return 1.0
    return float(1.0 - observed / expected)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_rank_sum(
    sample_x: Sequence[float], sample_y: Sequence[float]
) -> tuple[float, float]:
    """Mann-Whitney U for x with a tie-corrected normal two-sided p."""
    x = np.asarray(sample_x, dtype=np.float64)
    y = np.asarray(sample_y, dtype=np.float64)
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("both samples must be non-empty")
    nx = x.shape[0]
    ny = y.shape[0]
    combined = np.concatenate([x, y])
    ranks = _midranks(combined)
    u = float(ranks[:nx].sum() - nx * (nx + 1) / 2.0)

    n = nx + ny
    _, tie_counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    variance = (nx * ny / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return u, 1.0
    z = (u - nx * ny / 2.0) / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return u, min(1.0, p)


def ks_two_sample(
    sample_x: Sequence[float], sample_y: Sequence[float]
) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov D and its asymptotic p."""
    x = np.sort(np.asarray(sample_x, dtype=np.float64))
    y = np.sort(np.asarray(sample_y, dtype=np.float64))
    nx = x.shape[0]
    ny = y.shape[0]
    if nx == 0 or ny == 0:
        raise ValueError("both samples must be non-empty")
    d = 0.0
    i = j = 0
    while i < nx and j < ny:
        value = min(x[i], y[j])
        while i < nx and x[i] <= value:
            i += 1
        while j < ny and y[j] <= value:
            j += 1
        d = max(d, abs(i / nx - j / ny))
    if d == 0.0:
        return 0.0, 1.0
    effective = nx * ny / (nx + ny)
    lam = (math.sqrt(effective) + 0.12 + 0.11 / math.sqrt(effective)) * d
    total = 0.0
    for term in range(1, 101):
        total += (-1.0) ** (term - 1) * math.exp(-2.0 * term * term * lam * lam)
    p = 2.0 * total
    return d, min(1.0, max(0.0, p))


@dataclass(frozen=True)
class PairJudgment:
    """One annotated conversation pair from the same post."""

    post_id: str
    tlc_a: str
    tlc_b: str
    annotator_choice: str
    annotator_id: str
    sampling_stratum: str

    def __post_init__(self) -> None:
        if self.tlc_a == self.tlc_b:
            raise ValueError("a pair must have two distinct conversations")
        if self.annotator_choice not in ("A", "B"):
            raise ValueError("annotator_choice must be A or B")


def load_pair_judgments(path: str) -> list[PairJudgment]:
    """Read tab-separated judgment lines in documented field order."""
    out: list[PairJudgment] = []
    with open(path, "r", encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ValueError(
                    f"line {number}: expected 6 tab-separated fields, got {len(parts)}"
                )
            out.append(PairJudgment(*parts))
    return out


def save_pair_judgments(pairs: Sequence[PairJudgment], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                "\t".join(
                    (
                        p.post_id,
                        p.tlc_a,
                        p.tlc_b,
                        p.annotator_choice,
                        p.annotator_id,
                        p.sampling_stratum,
                    )
                )
                + "\n"
            )


def split_pair_judgments(
    pairs: Sequence[PairJudgment],
    seed: int = 0,
    ratios: tuple[int, int, int] = (8, 1, 1),
) -> tuple[list[PairJudgment], list[PairJudgment], list[PairJudgment]]:
    """Shuffled train/dev/test split, stratified by sampling stratum.

    Within each stratum the three sizes come from largest-remainder
    rounding of the ratio shares, so every judgment lands in exactly
    one split and the proportions hold as closely as integers allow.
    """
    rng = np.random.default_rng(seed)
    by_stratum: dict[str, list[PairJudgment]] = {}
    for p in pairs:
        by_stratum.setdefault(p.sampling_stratum, []).append(p)

    total_ratio = sum(ratios)
    splits: tuple[list[PairJudgment], ...] = ([], [], [])
    for stratum in sorted(by_stratum):
        group = by_stratum[stratum]
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        n = len(shuffled)
        exact = [n * r / total_ratio for r in ratios]
        counts = [int(math.floor(e)) for e in exact]
        remainders = [e - c for e, c in zip(exact, counts)]
        short = n - sum(counts)
        for idx in sorted(
            range(len(ratios)), key=lambda i: (-remainders[i], i)
        )[:short]:
            counts[idx] += 1
        start = 0
        for bucket, count in zip(splits, counts):
            bucket.extend(shuffled[start : start + count])
            start += count
    return splits[0], splits[1], splits[2]


@dataclass(frozen=True)
class PairwiseRanker:
    """Logistic scorer over feature differences.

    The bias stays at zero so that swapping the two sides of a pair
    always flips the decision.
    """

    weights: np.ndarray
    bias: float
    init_source: str


def ranker_decide(
    ranker: PairwiseRanker, features_a: np.ndarray, features_b: np.ndarray
) -> str:
    z = float(np.dot(ranker.weights, features_a - features_b)) + ranker.bias
    return "A" if z >= 0.0 else "B"


def rank_pair_by_trajectory(
    forecaster: Callable[[object, object], float],
    post: object,
    tlc_a: object,
    tlc_b: object,
) -> str:
    """Pick the first comment whose forecasted trajectory is higher.

    An exact tie goes to A; ties are effectively impossible with
    real-valued forecasts and the fixed rule keeps runs reproducible.
    """
    score_a = forecaster(post, tlc_a)
    score_b = forecaster(post, tlc_b)
    return "A" if score_a >= score_b else "B"


def judgment_diffs(
    pairs: Sequence[PairJudgment],
    features: Mapping[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Feature-difference matrix and 0/1 labels (1 means A preferred)."""
    diffs = []
    labels = []
    for p in pairs:
        diffs.append(np.asarray(features[p.tlc_a]) - np.asarray(features[p.tlc_b]))
        labels.append(1.0 if p.annotator_choice == "A" else 0.0)
    return np.asarray(diffs, dtype=np.float64), np.asarray(labels, dtype=np.float64)


def fit_pairwise_ranker(
    diffs: np.ndarray,
    labels: np.ndarray,
    l2: float = 1.0,
    init: str = "trajectory-difference",
    seed: int = 0,
    max_iter: int = 200,
) -> PairwiseRanker:
    """Fit the logistic ranker on feature differences.

    init "trajectory-difference" starts from weight 1 on the leading
    feature (the forecasted trajectory) and 0 elsewhere, so before any
    optimization the ranker reproduces pick-the-higher-trajectory;
    "random" draws a seeded Gaussian start.
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if diffs.ndim != 2 or labels.shape != (diffs.shape[0],):
        raise ValueError("diffs must be 2-d with one label per row")
    if diffs.shape[0] == 0:
        raise TrainingError("no training pairs")
    if len(np.unique(labels)) < 2:
        raise TrainingError("training pairs all share one label")

    d = diffs.shape[1]
    if init == "trajectory-difference":
        w0 = np.zeros(d)
        w0[0] = 1.0
    elif init == "random":
        w0 = np.random.default_rng(seed).standard_normal(d) * 0.01
    else:
        raise ValueError(f"unknown init source: {init!r}")

    signs = 2.0 * labels - 1.0

    def objective(w: np.ndarray) -> tuple[float, np.ndarray]:
        z = diffs @ w
        margins = signs * z
        loss = float(np.sum(np.logaddexp(0.0, -margins)))
        loss += 0.5 * l2 * float(np.dot(w, w))
        sigma = 1.0 / (1.0 + np.exp(np.clip(margins, -500.0, 500.0)))
        grad = -(diffs.T @ (signs * sigma)) + l2 * w
        return loss, grad

    result = optimize.minimize(
        objective, w0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    return PairwiseRanker(
        weights=np.asarray(result.x, dtype=np.float64),
        bias=0.0,
        init_source=init,
    )


RANKER_FORMAT = "ranker/1"


def save_ranker(ranker: PairwiseRanker, path: str) -> None:
    lines = [RANKER_FORMAT, f"init\t{ranker.init_source}"]
    for w in ranker.weights:
        lines.append(f"weight\t{float(w)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ranker(path: str) -> PairwiseRanker:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != RANKER_FORMAT:
        raise ValueError(f"not a {RANKER_FORMAT} file: {path}")
    init_source = "unknown"
    weights: list[float] = []
    for line in lines[1:]:
        parts = line.split("\t")
        if parts[0] == "init":
            init_source = parts[1]
        elif parts[0] == "weight":
            weights.append(float(parts[1]))
        else:
            raise ValueError(f"unknown ranker line: {parts[0]!r}")
    if not weights:
        raise ValueError(f"ranker file has no weights: {path}")
    return PairwiseRanker(
        weights=np.asarray(weights), bias=0.0, init_source=init_source
    )


def ranking_accuracy(
    ranker: PairwiseRanker,
    pairs: Sequence[PairJudgment],
    features: Mapping[str, np.ndarray],
    truth: str = "human",
    trajectories: Mapping[str, float] | None = None,
) -> float:
    """Fraction of pairs where the ranker matches the ground truth.

    truth "human" scores against the annotator choices; "trajectory"
    scores against whichever conversation truly ended higher (tie→A),
    which needs the trajectories lookup.
    """
    if not pairs:
        raise ValueError("test pairs must be non-empty")
    if truth not in ("human", "trajectory"):
        raise ValueError(f"unknown truth source: {truth!r}")
    if truth == "trajectory" and trajectories is None:
        raise ValueError("trajectory truth needs a trajectories lookup")
    hits = 0
    for p in pairs:
        decision = ranker_decide(
            ranker, np.asarray(features[p.tlc_a]), np.asarray(features[p.tlc_b])
        )
        if truth == "human":
            expected = p.annotator_choice
        else:
            expected = (
                "A" if trajectories[p.tlc_a] >= trajectories[p.tlc_b] else "B"
            )
        if decision == expected:
            hits += 1
    return hits / len(pairs)
