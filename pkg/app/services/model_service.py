"""
Model service - one entry point for training, predicting and persisting any
of the six regression models.
"""
import logging
from typing import Any, Dict, Optional

import numpy as np

from models.errors import InvalidParameterError
from models.regression import KernelSpec, ModelKind, RegressionModel, model_from_dict, model_kind
from services.linear_service import LinearService
from services.svr_service import SvrService
from services.tree_service import TreeService
from storage import artifact_store
from utils.rng import DEFAULT_SEED

logger = logging.getLogger(__name__)

DEFAULT_PARAMS: Dict[ModelKind, Dict[str, Any]] = {
    ModelKind.OLS: {},
    ModelKind.RIDGE: {"lam": 1.0},
    ModelKind.TREE: {"max_depth": None, "min_leaf": 1},
    ModelKind.FOREST: {"n_trees": 100, "max_depth": None, "min_leaf": 1,
                       "feature_subsample": 1.0 / 3.0, "bootstrap": True},
    ModelKind.GBM: {"rounds": 100, "learning_rate": 0.1, "max_depth": 3, "min_leaf": 1},
    ModelKind.SVR: {"c": 1.0, "epsilon": 0.1, "kernel": None, "tol": 1e-3},
}

DISPLAY_NAMES = {
    ModelKind.OLS: "Linear Regression",
    ModelKind.RIDGE: "Ridge Regression",
    ModelKind.TREE: "Decision Tree",
    ModelKind.FOREST: "Random Forest",
    ModelKind.GBM: "Gradient Boosting",
    ModelKind.SVR: "SVR",
}


class ModelService:

    @staticmethod
    def params_for(kind: ModelKind, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        kind = ModelKind(kind)
        params = dict(DEFAULT_PARAMS[kind])
        for key, value in (overrides or {}).items():
            if key not in params:
                raise InvalidParameterError(f"unknown parameter '{key}' for {kind.value}")
            params[key] = value
        return params

    @staticmethod
    def fit(kind: ModelKind, x, y, params: Optional[Dict[str, Any]] = None,
            seed: int = DEFAULT_SEED) -> RegressionModel:
        """Train one model of the given kind; params override DEFAULT_PARAMS"""
        kind = ModelKind(kind)
        p = ModelService.params_for(kind, params)
        if kind == ModelKind.OLS:
            return LinearService.fit_ols(x, y)
        if kind == ModelKind.RIDGE:
            return LinearService.fit_ridge(x, y, p["lam"])
        if kind == ModelKind.TREE:
            return TreeService.fit_tree(x, y, p["max_depth"], p["min_leaf"])
        if kind == ModelKind.FOREST:
            return TreeService.fit_forest(x, y, p["n_trees"], p["max_depth"], p["min_leaf"],
                                          p["feature_subsample"], seed, p["bootstrap"])
        if kind == ModelKind.GBM:
            return TreeService.fit_gbm(x, y, p["rounds"], p["learning_rate"], p["max_depth"], p["min_leaf"])
        kernel = p["kernel"]
        if isinstance(kernel, dict):
            kernel = KernelSpec.from_dict(kernel)
        return SvrService.fit_svr(x, y, p["c"], p["epsilon"], kernel, p["tol"])

    @staticmethod
    def predict(model: RegressionModel, x) -> np.ndarray:
        return model.predict(x)

    @staticmethod
    def kind_of(model: RegressionModel) -> ModelKind:
        return model_kind(model)

    @staticmethod
    def is_converged(model: RegressionModel) -> bool:
        return bool(getattr(model, "converged", True))

    @staticmethod
    def save_model(model: RegressionModel, path: str) -> str:
        artifact_store.write_json(path, model.to_dict())
        logger.debug("[save_model] %s -> %s", model_kind(model).value, path)
        return path

    @staticmethod
    def load_model(path: str) -> RegressionModel:
        return model_from_dict(artifact_store.read_json(path))
