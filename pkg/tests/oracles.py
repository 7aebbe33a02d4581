"""Reference implementations used to cross-check the package.

Everything here recomputes a quantity by a deliberately different route
than the production code: brute-force pair counting instead of rank
algebra, Fraction arithmetic instead of floats, numpy's eigensolver
instead of the hand-rolled Jacobi sweep, numerical integration instead
of closed forms, exhaustive enumeration instead of vectorized scans.
Agreement between two unrelated routes is evidence of correctness;
none of these functions may import from the prosocial package.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# linear algebra


def eigh_descending(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix via numpy, largest value first."""
    values, vectors = np.linalg.eigh(np.asarray(matrix, dtype=np.float64))
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def eig2_closed_form(matrix: np.ndarray) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 from the characteristic polynomial."""
    a = float(matrix[0, 0])
    b = float(matrix[0, 1])
    d = float(matrix[1, 1])
    half_trace = (a + d) / 2.0
    radius = math.sqrt(((a - d) / 2.0) ** 2 + b * b)
    return half_trace + radius, half_trace - radius


def ridge_gradient_descent(
    x: np.ndarray,
    y: np.ndarray,
    ridge_lambda: float,
    steps: int = 200_000,
    tol: float = 1e-13,
) -> tuple[np.ndarray, float]:
    """Minimize ||Xw + b - y||^2 + lambda ||w||^2 by plain gradient descent.

    Slow but has no linear solver in common with the closed-form fit.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = x.shape
    aug = np.hstack([x, np.ones((n, 1))])
    # Lipschitz constant of the gradient bounds the safe step size.
    lip = 2.0 * (float(np.linalg.eigvalsh(aug.T @ aug)[-1]) + ridge_lambda)
    lr = 1.0 / lip
    theta = np.zeros(d + 1)
    penalty = np.concatenate([np.full(d, ridge_lambda), [0.0]])
    for _ in range(steps):
        grad = 2.0 * (aug.T @ (aug @ theta - y)) + 2.0 * penalty * theta
        theta -= lr * grad
        if float(np.max(np.abs(grad))) < tol:
            break
    return theta[:d], float(theta[d])


# ---------------------------------------------------------------------------
# statistics


def mcc_exact(a: int, b: int, c: int, d: int) -> float:
    """Matthews correlation from exact integer arithmetic."""
    num = Fraction(a) * d - Fraction(b) * c
    radicand = (
        Fraction(a + b) * (c + d) * (a + c) * (b + d)
    )
    if radicand == 0:
        return 0.0
    return float(num) / math.sqrt(float(radicand))


def chi2_tail_1df(x: float, grid: int = 400_000, span: float = 80.0) -> float:
    """P(chi-square with 1 df > x) by trapezoid integration of the pdf.

    The pdf t^(-1/2) e^(-t/2) / sqrt(2 pi) has an integrable singularity
    at zero, so the substitution t = u^2 (u = sqrt(t), dt = 2u du) turns
    the integrand into the smooth 2 e^(-u^2/2) / sqrt(2 pi).
    """
    if x <= 0.0:
        return 1.0
    lo = math.sqrt(x)
    hi = math.sqrt(x + span)
    us = np.linspace(lo, hi, grid)
    pdf = 2.0 * np.exp(-us * us / 2.0) / math.sqrt(2.0 * math.pi)
    return float(np.trapezoid(pdf, us))


def krippendorff_pairs(ratings: list[list[object]]) -> Fraction | None:
    """Nominal-data alpha from explicit per-unit pair enumeration.

    Returns an exact Fraction, None when no unit has two ratings, and
    Fraction(1) when disagreement is impossible (zero expected denom).
    """
    coincidence: Counter = Counter()
    totals: Counter = Counter()
    for unit in ratings:
        values = [v for v in unit if v is not None]
        m = len(values)
        if m < 2:
            continue
        weight = Fraction(1, m - 1)
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                coincidence[(values[i], values[j])] += weight
                totals[values[i]] += weight
    n = sum(totals.values())
    if n == 0:
        return None
    observed = sum(v for (c, k), v in coincidence.items() if c != k)
    expected = (n * n - sum(v * v for v in totals.values())) / (n - 1)
    if expected == 0:
        return Fraction(1)
    return 1 - Fraction(observed) / Fraction(expected)


def mann_whitney_pairs(x: list[float], y: list[float]) -> float:
    """U statistic counted pair by pair: wins plus half the ties."""
    u = 0.0
    for xi in x:
        for yj in y:
            if xi > yj:
                u += 1.0
            elif xi == yj:
                u += 0.5
    return u


def mann_whitney_p(x: list[float], y: list[float]) -> float:
    """Normal-approximation p for U with the tie-corrected variance."""
    nx, ny = len(x), len(y)
    n = nx + ny
    u = mann_whitney_pairs(x, y)
    ties = Counter(list(x) + list(y))
    tie_term = sum(t ** 3 - t for t in ties.values())
    variance = (nx * ny / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return 1.0
    z = (u - nx * ny / 2.0) / math.sqrt(variance)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def ks_bruteforce(x: list[float], y: list[float]) -> float:
    """Largest ECDF gap evaluated at every pooled sample point."""
    d = 0.0
    for t in set(x) | set(y):
        fx = sum(1 for v in x if v <= t) / len(x)
        fy = sum(1 for v in y if v <= t) / len(y)
        d = max(d, abs(fx - fy))
    return d


def ks_p_series(d: float, nx: int, ny: int) -> float:
    """Asymptotic KS tail series with the small-sample correction."""
    if d == 0.0:
        return 1.0
    effective = nx * ny / (nx + ny)
    lam = (math.sqrt(effective) + 0.12 + 0.11 / math.sqrt(effective)) * d
    total = 0.0
    for k in range(1, 101):
        total += (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
    return min(1.0, max(0.0, 2.0 * total))


# ---------------------------------------------------------------------------
# gradient boosting


def gbt_split_candidates(
    x: np.ndarray,
    g: np.ndarray,
    rows: list[int],
    cols: list[int],
    gamma: float,
    reg_lambda: float,
    reg_alpha: float,
    min_child_weight: float,
) -> list[tuple[float, int, float]]:
    """Every admissible (gain, feature, threshold), by brute force.

    Plain loops and per-side re-summation, so the arithmetic shares no
    cumulative-sum shortcuts with the production search.  Candidates
    whose gain is not strictly positive are dropped, matching the
    production rule that such splits become leaves.
    """

    def soft(value: float, alpha: float) -> float:
        if abs(value) <= alpha:
            return 0.0
        return value - alpha if value > 0 else value + alpha

    def score(g_sum: float, h_sum: float) -> float:
        s = soft(g_sum, reg_alpha)
        return s * s / (h_sum + reg_lambda)

    if len(rows) < 2:
        return []
    g_parent = sum(float(g[r]) for r in rows)
    parent_score = score(g_parent, float(len(rows)))
    out: list[tuple[float, int, float]] = []
    for f in cols:
        distinct = sorted({float(x[r, f]) for r in rows})
        for lo, hi in zip(distinct, distinct[1:]):
            threshold = (lo + hi) / 2.0
            left = [r for r in rows if float(x[r, f]) < threshold]
            right = [r for r in rows if float(x[r, f]) >= threshold]
            if len(left) < min_child_weight or len(right) < min_child_weight:
                continue
            g_left = sum(float(g[r]) for r in left)
            g_right = sum(float(g[r]) for r in right)
            gain = 0.5 * (
                score(g_left, float(len(left)))
                + score(g_right, float(len(right)))
                - parent_score
            ) - gamma
            if gain > 0.0:
                out.append((gain, int(f), threshold))
    return out


def gbt_split_exhaustive(
    x: np.ndarray,
    g: np.ndarray,
    rows: list[int],
    cols: list[int],
    eta: float,
    gamma: float,
    reg_lambda: float,
    reg_alpha: float,
    min_child_weight: float,
) -> tuple[float, int, float] | None:
    """Best candidate under the earliest-column, smallest-threshold rule."""
    del eta
    candidates = gbt_split_candidates(
        x, g, rows, cols, gamma, reg_lambda, reg_alpha, min_child_weight
    )
    best: tuple[float, int, float] | None = None
    for gain, feature, threshold in candidates:
        if best is None or gain > best[0]:
            best = (gain, feature, threshold)
    return best


def gbt_leaf_reference(
    g_sum: float, h_sum: float, eta: float, reg_lambda: float, reg_alpha: float
) -> float:
    if abs(g_sum) <= reg_alpha:
        shrunk = 0.0
    elif g_sum > 0:
        shrunk = g_sum - reg_alpha
    else:
        shrunk = g_sum + reg_alpha
    return -eta * shrunk / (h_sum + reg_lambda)


# ---------------------------------------------------------------------------
# text

LAUGHTER_REFERENCE = re.compile(
    r"\ba*h+a+h+a+(h+a+)*?h*\b|\bl+o+l+(o+l+)*?\b|\bh+e+h+e+(h+e+)*?h*\b",
    re.IGNORECASE,
)


def count_laughter_reference(text: str) -> int:
    return sum(1 for _ in LAUGHTER_REFERENCE.finditer(text))


_URL_REFERENCE = re.compile(r"https?://[^\s<>()\"']+", re.IGNORECASE)
_TOKEN_REFERENCE = re.compile(r"(?:[^\W_]|')+")


def compound_reference(
    text: str,
    valence: dict[str, float],
    boosters: dict[str, float],
    negators: frozenset[str],
) -> float:
    """Re-derivation of the lexicon sentiment rule for cross-checking.

    Mirrors the documented behavior (caps emphasis, three-token booster
    and negation windows, exclamation bump, dampened normalization) from
    scratch rather than sharing any helper with the implementation.
    """
    raws: list[str] = []
    for match in _TOKEN_REFERENCE.finditer(_URL_REFERENCE.sub(" ", text)):
        token = match.group(0).strip("'")
        if token:
            raws.append(token)
    tokens = [t.lower() for t in raws]

    def emphatic(raw: str) -> bool:
        return raw.isupper() and len(raw) > 1 and any(c.isalpha() for c in raw)

    flags = [emphatic(r) for r in raws if any(c.isalpha() for c in r)]
    caps_mixed = any(flags) and not all(flags)

    total = 0.0
    for i, token in enumerate(tokens):
        if token not in valence:
            continue
        v = valence[token]
        if caps_mixed and emphatic(raws[i]):
            v += 0.733 if v > 0 else -0.733
        window = tokens[max(0, i - 3):i]
        for prior in window:
            boost = boosters.get(prior)
            if boost is None:
                continue
            v += boost if v > 0 else -boost
        for prior in window:
            if prior in negators:
                v *= -0.74
                break
        total += v

    bangs = min(text.count("!"), 3) * 0.292
    if total > 0:
        total += bangs
    elif total < 0:
        total -= bangs
    return total / math.sqrt(total * total + 15.0)


# ---------------------------------------------------------------------------
# conversation structure


def sustained_turns_reference(
    order: list[str],
    parents: dict[str, str | None],
    authors: dict[str, str | None],
) -> int:
    """Longest alternating two-author run, found by walking ancestor chains.

    For every comment, climb to the root collecting the author sequence,
    then measure the longest suffix run where adjacent authors differ,
    authors two apart match, and nobody is anonymous.
    """
    best = 0
    for node in order:
        chain: list[str | None] = []
        cursor: str | None = node
        while cursor is not None:
            chain.append(authors.get(cursor))
            cursor = parents.get(cursor)
        chain.reverse()
        run = 1 if chain[-1] is not None else 0
        for i in range(len(chain) - 2, -1, -1):
            a, b = chain[i], chain[i + 1]
            if a is None or b is None or a == b:
                break
            if run >= 2 and i + 2 < len(chain) and chain[i + 2] != a:
                break
            run += 1
        best = max(best, run)
    return best if best >= 2 else 0


def partners_reference(
    parents: dict[str, str | None],
    authors: dict[str, str | None],
) -> int:
    """Distinct unordered author pairs over reply edges, counted directly."""
    pairs = set()
    for child, parent in parents.items():
        if parent is None:
            continue
        a = authors.get(child)
        b = authors.get(parent)
        if a is None or b is None or a == b:
            continue
        pairs.add(frozenset((a, b)))
    return len(pairs)


def depth_reference(parents: dict[str, str | None]) -> int:
    """Longest root-to-leaf edge count via per-node ancestor walks."""
    best = 0
    for node in parents:
        length = 0
        cursor = parents[node]
        while cursor is not None:
            length += 1
            cursor = parents.get(cursor)
        best = max(best, length)
    return best
