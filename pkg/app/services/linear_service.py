"""
Linear service - ordinary least squares and ridge regression
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from models.errors import InvalidParameterError, ShapeError, SingularDesignError, TooFewSamplesError
from models.regression import LinearModel, ModelKind

logger = logging.getLogger(__name__)

# |R_kk| below this fraction of |R_00| counts as a dependent column
RANK_RTOL = 1e-10


def _centered(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"x of shape {x.shape} does not match y of shape {y.shape}")
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    return x, y, x - x_mean, y - y_mean, x_mean, y_mean


class LinearService:

    @staticmethod
    def fit_ols(x, y, names: Optional[Sequence[str]] = None) -> LinearModel:
        """Least squares with an unpenalized intercept.

        The intercept is handled by centering; the centered design is solved
        with column-pivoted QR so dependent columns show up as the trailing
        pivots with a negligible diagonal in R.
        """
        x, y, xc, yc, x_mean, y_mean = _centered(x, y)
        n, m = x.shape
        if n < m + 1:
            raise TooFewSamplesError(n, m + 1, "fit_ols")
        names = list(names) if names is not None else [f"x{j}" for j in range(m)]

        q, r, piv = linalg.qr(xc, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        scale = diag[0] if diag.size else 0.0
        rank = int(np.sum(diag > RANK_RTOL * scale)) if scale > 0 else 0
        if rank < m:
            raise SingularDesignError(names[piv[k]] for k in range(rank, m))

        coef = linalg.solve_triangular(r, q.T @ yc)
        weights = np.empty(m)
        weights[piv] = coef
        bias = y_mean - float(x_mean @ weights)
        return LinearModel(weights=weights, bias=bias, regularization=0.0, kind=ModelKind.OLS)

    @staticmethod
    def fit_ridge(x, y, lam: float = 1.0, names: Optional[Sequence[str]] = None) -> LinearModel:
        """Ridge on centered data: (Xc'Xc + lam I) w = Xc'yc, bias = mean(y) - mean(x) w"""
        if lam < 0:
            raise InvalidParameterError(f"ridge penalty must be non-negative, got {lam}")
        if lam == 0:
            ols = LinearService.fit_ols(x, y, names)
            return LinearModel(weights=ols.weights, bias=ols.bias, regularization=0.0, kind=ModelKind.RIDGE)

        x, y, xc, yc, x_mean, y_mean = _centered(x, y)
        if x.shape[0] < 2:
            raise TooFewSamplesError(x.shape[0], 2, "fit_ridge")
        gram = xc.T @ xc + lam * np.eye(x.shape[1])
        weights = linalg.solve(gram, xc.T @ yc, assume_a="pos")
        bias = y_mean - float(x_mean @ weights)
        return LinearModel(weights=weights, bias=bias, regularization=float(lam), kind=ModelKind.RIDGE)

    @staticmethod
    def normal_equation_residual(model: LinearModel, x, y) -> float:
        """Norm of (Xc'Xc + lam I) w - Xc'yc for a fitted linear model"""
        _, _, xc, yc, _, _ = _centered(x, y)
        lhs = (xc.T @ xc + model.regularization * np.eye(xc.shape[1])) @ model.weights
        return float(np.linalg.norm(lhs - xc.T @ yc))
