"""
Tree service - CART regression trees, random forests and gradient boosting
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from models.errors import InvalidParameterError, ShapeError, TooFewSamplesError
from models.regression import ForestModel, GbmModel, RegressionModel, TreeModel
from utils.rng import DEFAULT_SEED, Xoshiro256, derive_seeds

logger = logging.getLogger(__name__)

# a split must remove more than this fraction of the parent SSE
MIN_REDUCTION_RTOL = 1e-12


def _as_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"x of shape {x.shape} does not match y of shape {y.shape}")
    return x, y


def _best_split(x: np.ndarray, y: np.ndarray, features: Sequence[int], min_leaf: int):
    """Best (reduction, feature, threshold) over midpoints of sorted unique values.

    Features are scanned in ascending order and a candidate replaces the
    incumbent only on a strictly larger reduction, so ties keep the lower
    feature and then the lower threshold.
    """
    n = y.shape[0]
    yc = y - y.mean()
    best = (0.0, -1, 0.0)
    positions = np.arange(min_leaf - 1, n - min_leaf)
    if positions.size == 0:
        return best
    n_left = positions + 1.0
    n_right = n - n_left
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        s_left = np.cumsum(yc[order])[positions]
        s_right = -s_left
        reduction = s_left * s_left / n_left + s_right * s_right / n_right
        distinct = xs[positions] < xs[positions + 1]
        if not distinct.any():
            continue
        reduction = np.where(distinct, reduction, -np.inf)
        k = int(np.argmax(reduction))
        if reduction[k] > best[0]:
            threshold = 0.5 * (xs[positions[k]] + xs[positions[k] + 1])
            best = (float(reduction[k]), int(f), float(threshold))
    return best


def _grow(x: np.ndarray, y: np.ndarray, max_depth: Optional[int], min_leaf: int,
          max_features: Optional[int] = None, rng: Optional[Xoshiro256] = None) -> TreeModel:
    n, m = x.shape
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []
    importances = np.zeros(m)

    def new_node(rows: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    def split(node: int, rows: np.ndarray, depth: int) -> None:
        yr = y[rows]
        if max_depth is not None and depth >= max_depth:
            return
        if rows.shape[0] < 2 * min_leaf or np.ptp(yr) == 0.0:
            return
        if max_features is not None and max_features < m:
            features = sorted(rng.sample(range(m), max_features))
        else:
            features = range(m)
        reduction, f, thr = _best_split(x[rows], yr, features, min_leaf)
        sse = float(np.sum((yr - yr.mean()) ** 2))
        if f < 0 or reduction <= MIN_REDUCTION_RTOL * sse:
            return

        go_left = x[rows, f] <= thr
        left_rows, right_rows = rows[go_left], rows[~go_left]
        importances[f] += reduction
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(left_rows)
        split(left[node], left_rows, depth + 1)
        right[node] = new_node(right_rows)
        split(right[node], right_rows, depth + 1)

    rows = np.arange(n)
    split(new_node(rows), rows, 0)
    return TreeModel(feature=feature, threshold=threshold, left=left, right=right, value=value,
                     n_features=m, max_depth=max_depth, min_leaf=min_leaf, importances=importances)


def _check_tree_params(n: int, max_depth: Optional[int], min_leaf: int) -> None:
    if min_leaf < 1:
        raise InvalidParameterError(f"min_leaf must be at least 1, got {min_leaf}")
    if max_depth is not None and max_depth < 0:
        raise InvalidParameterError(f"max_depth must be non-negative, got {max_depth}")
    if n < 2 * min_leaf:
        raise TooFewSamplesError(n, 2 * min_leaf, "fit_tree")


def subsample_size(feature_subsample: float, m: int) -> int:
    """max(1, round(feature_subsample * m)), rounding halves up"""
    return max(1, int(math.floor(feature_subsample * m + 0.5)))


class TreeService:

    @staticmethod
    def fit_tree(x, y, max_depth: Optional[int] = None, min_leaf: int = 1) -> TreeModel:
        """Greedy CART regression tree; max_depth None grows until the leaves are pure"""
        x, y = _as_xy(x, y)
        _check_tree_params(x.shape[0], max_depth, min_leaf)
        return _grow(x, y, max_depth, min_leaf)

    @staticmethod
    def fit_forest(x, y, n_trees: int = 100, max_depth: Optional[int] = None, min_leaf: int = 1,
                   feature_subsample: float = 1.0 / 3.0, seed: int = DEFAULT_SEED,
                   bootstrap: bool = True, max_workers: Optional[int] = None) -> ForestModel:
        """Bagged trees with a fresh random feature subset at every split.

        Tree t draws its bootstrap rows and feature subsets from its own
        generator seeded with derive_seeds(seed, n_trees)[t], so the result
        does not depend on max_workers.
        """
        x, y = _as_xy(x, y)
        if n_trees < 1:
            raise InvalidParameterError(f"n_trees must be at least 1, got {n_trees}")
        if not 0.0 < feature_subsample <= 1.0:
            raise InvalidParameterError(f"feature_subsample must lie in (0, 1], got {feature_subsample}")
        n, m = x.shape
        _check_tree_params(n, max_depth, min_leaf)
        max_features = subsample_size(feature_subsample, m)
        seeds = derive_seeds(seed, n_trees)

        def fit_one(tree_seed: int) -> TreeModel:
            rng = Xoshiro256(tree_seed)
            rows = np.array(rng.choices(n, n)) if bootstrap else np.arange(n)
            return _grow(x[rows], y[rows], max_depth, min_leaf, max_features, rng)

        if max_workers and max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                trees = list(pool.map(fit_one, seeds))
        else:
            trees = [fit_one(s) for s in seeds]
        logger.debug("[fit_forest] %d trees, %d of %d features per split", n_trees, max_features, m)
        return ForestModel(trees=trees, bootstrap_seeds=seeds,
                           feature_subsample=feature_subsample, bootstrap=bootstrap)

    @staticmethod
    def fit_gbm(x, y, rounds: int = 100, learning_rate: float = 0.1,
                max_depth: Optional[int] = 3, min_leaf: int = 1) -> GbmModel:
        """Squared-error boosting: each round fits a tree to the current residuals"""
        x, y = _as_xy(x, y)
        if rounds < 0:
            raise InvalidParameterError(f"rounds must be non-negative, got {rounds}")
        if not 0.0 < learning_rate <= 1.0:
            raise InvalidParameterError(f"learning_rate must lie in (0, 1], got {learning_rate}")
        _check_tree_params(x.shape[0], max_depth, min_leaf)

        init = float(y.mean())
        prediction = np.full(y.shape[0], init)
        loss = [float(np.mean((y - prediction) ** 2))]
        trees = []
        for _ in range(rounds):
            tree = _grow(x, y - prediction, max_depth, min_leaf)
            prediction = prediction + learning_rate * tree.predict(x)
            trees.append(tree)
            loss.append(float(np.mean((y - prediction) ** 2)))
        logger.debug("[fit_gbm] %d rounds, training mse %.6g -> %.6g", rounds, loss[0], loss[-1])
        return GbmModel(init_value=init, trees=trees, learning_rate=learning_rate, rounds=rounds,
                        n_features=x.shape[1], train_loss=loss)

    @staticmethod
    def feature_importances(model: RegressionModel) -> np.ndarray:
        """SSE-reduction importances normalized to sum to 1 (zeros when nothing was split)"""
        if isinstance(model, TreeModel):
            raw = np.array(model.importances)
        elif isinstance(model, ForestModel):
            raw = np.mean([TreeService.feature_importances(t) for t in model.trees], axis=0)
        elif isinstance(model, GbmModel):
            raw = np.zeros(model.n_features)
            for tree in model.trees:
                raw += tree.importances
        else:
            raise InvalidParameterError(f"{type(model).__name__} has no impurity importances")
        total = raw.sum()
        return raw / total if total > 0 else np.zeros_like(raw)
