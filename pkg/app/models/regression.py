"""
Trained regression models.

Six model kinds share one contract: `predict(x)` returns one value per row and
`to_dict()` produces the versioned JSON document read back by
`model_from_dict`.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from models.errors import InvalidParameterError, ShapeError

FORMAT_VERSION = 1


class ModelKind(str, Enum):
    OLS = "ols"
    RIDGE = "ridge"
    TREE = "tree"
    FOREST = "forest"
    GBM = "gbm"
    SVR = "svr"


class KernelKind(str, Enum):
    LINEAR = "linear"
    RBF = "rbf"
    POLYNOMIAL = "polynomial"


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _floats(arr) -> List[float]:
    return [float(v) for v in np.asarray(arr).ravel()]


def _check_rows(x, n_features: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and n_features == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != n_features:
        raise ShapeError(f"model expects {n_features} columns, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.RBF
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind != KernelKind.LINEAR and not self.gamma > 0:
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")
        if self.kind == KernelKind.POLYNOMIAL and self.degree < 1:
            raise InvalidParameterError(f"degree must be at least 1, got {self.degree}")

    def evaluate(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ShapeError(f"kernel inputs have {a.shape[1]} and {b.shape[1]} columns")
        if self.kind == KernelKind.LINEAR:
            return a @ b.T
        if self.kind == KernelKind.RBF:
            return np.exp(-self.gamma * cdist(a, b, "sqeuclidean"))
        return (self.gamma * (a @ b.T) + self.coef0) ** self.degree

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "gamma": self.gamma, "degree": self.degree, "coef0": self.coef0}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelSpec":
        return cls(kind=KernelKind(data["kind"]), gamma=float(data["gamma"]),
                   degree=int(data["degree"]), coef0=float(data["coef0"]))


@dataclass(frozen=True, eq=False)
class LinearModel:
    """OLS (regularization 0) or ridge regression"""
    weights: np.ndarray
    bias: float
    regularization: float = 0.0
    kind: ModelKind = ModelKind.OLS

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.atleast_1d(self.weights)))
        object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def predict(self, x) -> np.ndarray:
        x = _check_rows(x, self.n_features)
        return x @ self.weights + self.bias

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind.value,
            "weights": _floats(self.weights),
            "bias": float(self.bias),
            "regularization": float(self.regularization),
        }


@dataclass(frozen=True, eq=False)
class TreeModel:
    """CART regression tree stored as parallel node arrays.

    Node 0 is the root. Internal nodes have `feature >= 0` and send rows with
    `x[feature] <= threshold` to `left`; leaves have `feature == -1` and
    predict `value`. `importances` holds the raw SSE reduction per feature.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    max_depth: Optional[int] = None
    min_leaf: int = 1
    importances: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("feature", "left", "right"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        object.__setattr__(self, "threshold", _frozen(self.threshold))
        object.__setattr__(self, "value", _frozen(self.value))
        imp = self.importances if self.importances is not None else np.zeros(self.n_features)
        object.__setattr__(self, "importances", _frozen(imp))

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, x) -> np.ndarray:
        x = _check_rows(x, self.n_features)
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            at = node[rows]
            go_left = x[rows, self.feature[at]] <= self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])
            active = self.feature[node] >= 0
        return self.value[node].copy()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": ModelKind.TREE.value,
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "feature": [int(v) for v in self.feature],
            "threshold": _floats(self.threshold),
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "value": _floats(self.value),
            "importances": _floats(self.importances),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TreeModel":
        return cls(
            feature=data["feature"],
            threshold=[float(v) for v in data["threshold"]],
            left=data["left"],
            right=data["right"],
            value=[float(v) for v in data["value"]],
            n_features=int(data["n_features"]),
            max_depth=data.get("max_depth"),
            min_leaf=int(data.get("min_leaf", 1)),
            importances=[float(v) for v in data.get("importances", [0.0] * int(data["n_features"]))],
        )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: Tuple[TreeModel, ...]
    bootstrap_seeds: Tuple[int, ...]
    feature_subsample: float
    bootstrap: bool = True

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "bootstrap_seeds", tuple(int(s) for s in self.bootstrap_seeds))
        if not self.trees:
            raise InvalidParameterError("a forest needs at least one tree")

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict(self, x) -> np.ndarray:
        x = _check_rows(x, self.n_features)
        total = np.zeros(x.shape[0])
        for tree in self.trees:
            total += tree.predict(x)
        return total / len(self.trees)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": ModelKind.FOREST.value,
            "feature_subsample": float(self.feature_subsample),
            "bootstrap": self.bootstrap,
            "bootstrap_seeds": list(self.bootstrap_seeds),
            "trees": [tree.to_dict() for tree in self.trees],
        }


@dataclass(frozen=True, eq=False)
class GbmModel:
    """Squared-error gradient boosting; `train_loss[r]` is the training MSE after r rounds"""
    init_value: float
    trees: Tuple[TreeModel, ...]
    learning_rate: float
    rounds: int
    n_features: int
    train_loss: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "train_loss", tuple(float(v) for v in self.train_loss))

    def predict(self, x) -> np.ndarray:
        x = _check_rows(x, self.n_features)
        out = np.full(x.shape[0], self.init_value)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(x)
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": ModelKind.GBM.value,
            "init_value": float(self.init_value),
            "learning_rate": float(self.learning_rate),
            "rounds": self.rounds,
            "n_features": self.n_features,
            "train_loss": list(self.train_loss),
            "trees": [tree.to_dict() for tree in self.trees],
        }


@dataclass(frozen=True, eq=False)
class SvrModel:
    """Epsilon-SVR in dual form: f(x) = sum_i beta_i K(x_i, x) + b over support rows"""
    support_indices: Tuple[int, ...]
    dual_coefs: np.ndarray
    bias: float
    kernel: KernelSpec
    c: float
    epsilon: float
    x_support: np.ndarray
    n_features: int
    converged: bool = True
    violation: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support_indices", tuple(int(i) for i in self.support_indices))
        object.__setattr__(self, "dual_coefs", _frozen(np.atleast_1d(self.dual_coefs)))
        xs = np.asarray(self.x_support, dtype=float).reshape(len(self.support_indices), self.n_features)
        object.__setattr__(self, "x_support", _frozen(xs))

    @property
    def n_support(self) -> int:
        return len(self.support_indices)

    def decision(self, x) -> np.ndarray:
        x = _check_rows(x, self.n_features)
        if self.n_support == 0:
            return np.full(x.shape[0], self.bias)
        return self.kernel.evaluate(x, self.x_support) @ self.dual_coefs + self.bias

    def predict(self, x) -> np.ndarray:
        return self.decision(x)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": ModelKind.SVR.value,
            "kernel": self.kernel.to_dict(),
            "c": float(self.c),
            "epsilon": float(self.epsilon),
            "bias": float(self.bias),
            "n_features": self.n_features,
            "support_indices": list(self.support_indices),
            "dual_coefs": _floats(self.dual_coefs),
            "x_support": [_floats(row) for row in self.x_support],
            "converged": self.converged,
            "violation": float(self.violation),
            "iterations": self.iterations,
        }


RegressionModel = Union[LinearModel, TreeModel, ForestModel, GbmModel, SvrModel]


def model_from_dict(data: Dict[str, Any]) -> RegressionModel:
    """Rebuild any model from its JSON document"""
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise InvalidParameterError(f"unsupported model format_version {version!r}")
    kind = ModelKind(data["kind"])
    if kind in (ModelKind.OLS, ModelKind.RIDGE):
        return LinearModel(weights=[float(v) for v in data["weights"]], bias=float(data["bias"]),
                           regularization=float(data["regularization"]), kind=kind)
    if kind == ModelKind.TREE:
        return TreeModel.from_dict(data)
    if kind == ModelKind.FOREST:
        return ForestModel(
            trees=[TreeModel.from_dict(t) for t in data["trees"]],
            bootstrap_seeds=data["bootstrap_seeds"],
            feature_subsample=float(data["feature_subsample"]),
            bootstrap=bool(data["bootstrap"]),
        )
    if kind == ModelKind.GBM:
        return GbmModel(
            init_value=float(data["init_value"]),
            trees=[TreeModel.from_dict(t) for t in data["trees"]],
            learning_rate=float(data["learning_rate"]),
            rounds=int(data["rounds"]),
            n_features=int(data["n_features"]),
            train_loss=data.get("train_loss", ()),
        )
    n_features = int(data["n_features"])
    return SvrModel(
        support_indices=data["support_indices"],
        dual_coefs=[float(v) for v in data["dual_coefs"]],
        bias=float(data["bias"]),
        kernel=KernelSpec.from_dict(data["kernel"]),
        c=float(data["c"]),
        epsilon=float(data["epsilon"]),
        x_support=np.array(data["x_support"], dtype=float).reshape(-1, n_features),
        n_features=n_features,
        converged=bool(data.get("converged", True)),
        violation=float(data.get("violation", 0.0)),
        iterations=int(data.get("iterations", 0)),
    )


def model_kind(model: RegressionModel) -> ModelKind:
    if isinstance(model, LinearModel):
        return model.kind
    if isinstance(model, TreeModel):
        return ModelKind.TREE
    if isinstance(model, ForestModel):
        return ModelKind.FOREST
    if isinstance(model, GbmModel):
        return ModelKind.GBM
    if isinstance(model, SvrModel):
        return ModelKind.SVR
    raise InvalidParameterError(f"not a regression model: {type(model).__name__}")
