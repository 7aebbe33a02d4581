"""Trajectory forecasters: closed-form ridge and boosted trees.

Both models map a feature vector to a single real score.  The boosted
ensemble uses the second-order split gain with L1/L2 shrinkage on leaf
weights, per-round row and column subsampling, and early stopping on a
held-out validation set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    bias: float
    ridge_lambda: float


def ridge_fit(x: np.ndarray, y: np.ndarray, ridge_lambda: float = 1.0) -> RidgeModel:
    """Normal-equations solve with the penalty kept off the bias row."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-d matrix")
    if y.shape != (x.shape[0],):
        raise ValueError("y length must match the number of rows")
    if x.shape[0] == 0:
        raise ValueError("cannot fit on an empty matrix")
    if ridge_lambda < 0.0:
        raise ValueError("ridge_lambda must be non-negative")
    n, d = x.shape
    augmented = np.hstack([x, np.ones((n, 1))])
    penalty = np.diag(np.concatenate([np.full(d, ridge_lambda), [0.0]]))
    gram = augmented.T @ augmented + penalty
    rhs = augmented.T @ y
    try:
        solution = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "singular normal equations; refit with ridge lambda > 0"
        ) from exc
    if not np.all(np.isfinite(solution)):
        raise NumericError(
            "non-finite ridge solution; refit with ridge lambda > 0"
        )
    return RidgeModel(
        weights=solution[:d],
        bias=float(solution[d]),
        ridge_lambda=float(ridge_lambda),
    )


def ridge_predict(model: RidgeModel, x: np.ndarray) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(x @ model.weights + model.bias)
    return x @ model.weights + model.bias


@dataclass(frozen=True)
class GbtParams:
    eta: float = 0.05
    gamma: float = 1.0
    reg_lambda: float = 3.0
    reg_alpha: float = 1.0
    min_child_weight: float = 1.0
    subsample: float = 0.8
    colsample: float = 0.8
    max_depth: int = 4
    rounds: int = 5000
    early_stopping: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.subsample <= 1.0 and 0.0 < self.colsample <= 1.0):
            raise ConfigError("subsample and colsample must be in (0, 1]")
        if self.max_depth < 1 or self.rounds < 1:
            raise ConfigError("max_depth and rounds must be positive")
        if self.eta <= 0.0:
            raise ConfigError("eta must be positive")
        if self.early_stopping < 0:
            raise ConfigError("early_stopping must be >= 0")


# A tree node is a plain dict: {"leaf": value} or
# {"feature": f, "threshold": t, "left": node, "right": node}.
TreeNode = dict


@dataclass(frozen=True)
class GbtModel:
    params: GbtParams
    base_score: float
    trees: tuple[TreeNode, ...]
    best_round: int
    feature_count: int
    train_history: tuple[float, ...] = ()
    validation_history: tuple[float, ...] = ()


def _soft_threshold(value: float, alpha: float) -> float:
    if value > alpha:
        return value - alpha
    if value < -alpha:
        return value + alpha
    return 0.0


def _leaf_value(g_sum: float, h_sum: float, params: GbtParams) -> float:
    shrunk = _soft_threshold(g_sum, params.reg_alpha)
    return -params.eta * shrunk / (h_sum + params.reg_lambda)


def _branch_score(g_sum: np.ndarray, h_sum: np.ndarray, params: GbtParams) -> np.ndarray:
    shrunk = np.sign(g_sum) * np.maximum(np.abs(g_sum) - params.reg_alpha, 0.0)
    return shrunk * shrunk / (h_sum + params.reg_lambda)


def _best_split(
    x: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    params: GbtParams,
) -> tuple[float, int, float] | None:
    """Highest-gain (gain, feature, threshold) over the allowed columns.

    Ties break toward the earliest column and smallest threshold so the
    search is order-independent of any numpy internals.
    """
    n = rows.shape[0]
    if n < 2:
        return None
    g_total = float(g[rows].sum())
    h_total = float(n)
    parent = _branch_score(np.asarray([g_total]), np.asarray([h_total]), params)[0]
    best: tuple[float, int, float] | None = None
    for f in cols:
        vals = x[rows, f]
        order = np.argsort(vals, kind="stable")
        sorted_vals = vals[order]
        sorted_g = g[rows][order]
        boundaries = np.nonzero(sorted_vals[1:] > sorted_vals[:-1])[0] + 1
        if boundaries.shape[0] == 0:
            continue
        left_h = boundaries.astype(np.float64)
        right_h = h_total - left_h
        keep = (left_h >= params.min_child_weight) & (
            right_h >= params.min_child_weight
        )
        boundaries = boundaries[keep]
        if boundaries.shape[0] == 0:
            continue
        left_h = left_h[keep]
        right_h = right_h[keep]
        cum_g = np.cumsum(sorted_g)
        left_g = cum_g[boundaries - 1]
        right_g = g_total - left_g
        gains = 0.5 * (
            _branch_score(left_g, left_h, params)
            + _branch_score(right_g, right_h, params)
            - parent
        ) - params.gamma
        idx = int(np.argmax(gains))
        gain = float(gains[idx])
        if gain <= 0.0:
            continue
        b = int(boundaries[idx])
        threshold = float((sorted_vals[b - 1] + sorted_vals[b]) / 2.0)
        if best is None or gain > best[0]:
            best = (gain, int(f), threshold)
    return best


def _build_tree(
    x: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    params: GbtParams,
    depth: int,
) -> TreeNode:
    if depth < params.max_depth:
        split = _best_split(x, g, rows, cols, params)
        if split is not None:
            _, feature, threshold = split
            mask = x[rows, feature] < threshold
            left_rows = rows[mask]
            right_rows = rows[~mask]
            return {
                "feature": feature,
                "threshold": threshold,
                "left": _build_tree(x, g, left_rows, cols, params, depth + 1),
                "right": _build_tree(x, g, right_rows, cols, params, depth + 1),
            }
    g_sum = float(g[rows].sum())
    return {"leaf": _leaf_value(g_sum, float(rows.shape[0]), params)}


def _apply_tree(tree: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0], dtype=np.float64)
    stack: list[tuple[TreeNode, np.ndarray]] = [(tree, np.arange(x.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if "leaf" in node:
            out[rows] = node["leaf"]
            continue
        mask = x[rows, node["feature"]] < node["threshold"]
        stack.append((node["left"], rows[mask]))
        stack.append((node["right"], rows[~mask]))
    return out


def gbt_fit(
    x: np.ndarray,
    y: np.ndarray,
    params: GbtParams | None = None,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> GbtModel:
    """Boosted squared-error regression with early stopping.

    With early stopping enabled a non-empty validation pair is
    mandatory, since there is nothing else to stop on.  The returned
    ensemble is trimmed to the best validation round.
    """
    if params is None:
        params = GbtParams()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("x must be 2-d with one target per row")
    if x.shape[0] == 0:
        raise ValueError("cannot fit on an empty matrix")

    has_validation = (
        validation is not None and np.asarray(validation[0]).shape[0] > 0
    )
    if params.early_stopping > 0 and not has_validation:
        raise ConfigError(
            "early stopping needs a non-empty validation set"
        )
    if has_validation:
        x_val = np.asarray(validation[0], dtype=np.float64)
        y_val = np.asarray(validation[1], dtype=np.float64)
        if x_val.ndim != 2 or y_val.shape != (x_val.shape[0],):
            raise ValueError("validation must be 2-d with one target per row")

    n, d = x.shape
    rng = np.random.default_rng(params.seed)
    base = float(y.mean())
    preds = np.full(n, base)
    preds_val = np.full(x_val.shape[0], base) if has_validation else None

    n_rows = max(1, int(round(params.subsample * n)))
    n_cols = max(1, int(round(params.colsample * d)))

    trees: list[TreeNode] = []
    train_history: list[float] = []
    val_history: list[float] = []
    best_round = 0
    best_mse = np.inf
    for r in range(params.rounds):
        if n_rows < n:
            rows = np.sort(rng.choice(n, size=n_rows, replace=False))
        else:
            rows = np.arange(n)
        if n_cols < d:
            cols = np.sort(rng.choice(d, size=n_cols, replace=False))
        else:
            cols = np.arange(d)
        g = preds - y
        tree = _build_tree(x, g, rows, cols, params, depth=0)
        trees.append(tree)
        preds += _apply_tree(tree, x)
        train_history.append(float(np.mean((preds - y) ** 2)))
        if has_validation:
            preds_val += _apply_tree(tree, x_val)
            mse = float(np.mean((preds_val - y_val) ** 2))
            val_history.append(mse)
            if mse < best_mse:
                best_mse = mse
                best_round = r
            if params.early_stopping > 0 and r - best_round >= params.early_stopping:
                break
        else:
            best_round = r

    return GbtModel(
        params=params,
        base_score=base,
        trees=tuple(trees[: best_round + 1]),
        best_round=best_round,
        feature_count=d,
        train_history=tuple(train_history),
        validation_history=tuple(val_history),
    )


def gbt_predict(model: GbtModel, x: np.ndarray) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    out = np.full(x.shape[0], model.base_score)
    for tree in model.trees:
        out += _apply_tree(tree, x)
    return float(out[0]) if single else out


def tree_depth(tree: TreeNode) -> int:
    if "leaf" in tree:
        return 0
    return 1 + max(tree_depth(tree["left"]), tree_depth(tree["right"]))


RIDGE_FORMAT = "ridge/1"
GBT_FORMAT = "gbt/1"


def save_ridge_model(model: RidgeModel, path: str) -> None:
    lines = [RIDGE_FORMAT]
    lines.append(f"lambda\t{float(model.ridge_lambda)!r}")
    lines.append(f"bias\t{float(model.bias)!r}")
    for w in model.weights:
        lines.append(f"weight\t{float(w)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ridge_model(path: str) -> RidgeModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != RIDGE_FORMAT:
        raise ValueError(f"not a {RIDGE_FORMAT} file: {path}")
    ridge_lambda = 0.0
    bias = 0.0
    weights: list[float] = []
    for line in lines[1:]:
        key, _, value = line.partition("\t")
        if key == "lambda":
            ridge_lambda = float(value)
        elif key == "bias":
            bias = float(value)
        elif key == "weight":
            weights.append(float(value))
        else:
            raise ValueError(f"unknown ridge model line: {key!r}")
    return RidgeModel(
        weights=np.asarray(weights, dtype=np.float64),
        bias=bias,
        ridge_lambda=ridge_lambda,
    )


def _serialize_tree(tree: TreeNode, lines: list[str]) -> None:
    if "leaf" in tree:
        lines.append(f"leaf\t{float(tree['leaf'])!r}")
        return
    lines.append(f"split\t{tree['feature']}\t{float(tree['threshold'])!r}")
    _serialize_tree(tree["left"], lines)
    _serialize_tree(tree["right"], lines)


def _deserialize_tree(lines: list[str], pos: int) -> tuple[TreeNode, int]:
    parts = lines[pos].split("\t")
    if parts[0] == "leaf":
        return {"leaf": float(parts[1])}, pos + 1
    if parts[0] != "split":
        raise ValueError(f"unknown tree node line: {parts[0]!r}")
    left, pos = _deserialize_tree(lines, pos + 1)
    right, pos = _deserialize_tree(lines, pos)
    return {
        "feature": int(parts[1]),
        "threshold": float(parts[2]),
        "left": left,
        "right": right,
    }, pos


def save_gbt_model(model: GbtModel, path: str) -> None:
    p = model.params
    lines = [GBT_FORMAT]
    lines.append(f"eta\t{p.eta!r}")
    lines.append(f"gamma\t{p.gamma!r}")
    lines.append(f"lambda\t{p.reg_lambda!r}")
    lines.append(f"alpha\t{p.reg_alpha!r}")
    lines.append(f"min_child_weight\t{p.min_child_weight!r}")
    lines.append(f"subsample\t{p.subsample!r}")
    lines.append(f"colsample\t{p.colsample!r}")
    lines.append(f"max_depth\t{p.max_depth}")
    lines.append(f"rounds\t{p.rounds}")
    lines.append(f"early_stopping\t{p.early_stopping}")
    lines.append(f"seed\t{p.seed}")
    lines.append(f"base_score\t{float(model.base_score)!r}")
    lines.append(f"best_round\t{model.best_round}")
    lines.append(f"features\t{model.feature_count}")
    lines.append(f"trees\t{len(model.trees)}")
    for tree in model.trees:
        _serialize_tree(tree, lines)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gbt_model(path: str) -> GbtModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != GBT_FORMAT:
        raise ValueError(f"not a {GBT_FORMAT} file: {path}")
    header: dict[str, str] = {}
    pos = 1
    while pos < len(lines):
        key, _, value = lines[pos].partition("\t")
        if key in ("leaf", "split"):
            break
        header[key] = value
        pos += 1
    params = GbtParams(
        eta=float(header["eta"]),
        gamma=float(header["gamma"]),
        reg_lambda=float(header["lambda"]),
        reg_alpha=float(header["alpha"]),
        min_child_weight=float(header["min_child_weight"]),
        subsample=float(header["subsample"]),
        colsample=float(header["colsample"]),
        max_depth=int(header["max_depth"]),
        rounds=int(header["rounds"]),
        early_stopping=int(header["early_stopping"]),
        seed=int(header["seed"]),
    )
    count = int(header["trees"])
    trees: list[TreeNode] = []
    for _ in range(count):
        tree, pos = _deserialize_tree(lines, pos)
        trees.append(tree)
    if pos != len(lines):
        raise ValueError("trailing content after the last tree")
    return GbtModel(
        params=params,
        base_score=float(header["base_score"]),
        trees=tuple(trees),
        best_round=int(header["best_round"]),
        feature_count=int(header["features"]),
    )
