"""
SVR service - kernel Gram matrices and an SMO solver for the epsilon-SVR dual.

The dual is written in the single variable beta = alpha - alpha*:

    maximize  D(beta) = -1/2 beta'K beta - eps * sum|beta_i| + y'beta
    subject to sum(beta) = 0,  -C <= beta_i <= C

Each step moves one coordinate up and another down by the same amount t,
which keeps sum(beta) fixed. The pair is the one with the largest KKT
violation and t maximizes D exactly along that direction.
"""
import logging
import math
from typing import Callable, List, Optional

import numpy as np

from models.errors import InvalidParameterError, ShapeError, TooFewSamplesError
from models.regression import KernelKind, KernelSpec, SvrModel

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3

IterationCallback = Callable[[int, float], None]


def dual_objective(beta, k, y, epsilon: float) -> float:
    beta = np.asarray(beta, dtype=float)
    return float(-0.5 * beta @ np.asarray(k) @ beta - epsilon * np.abs(beta).sum() + np.asarray(y) @ beta)


def _violating_pair(beta, grad, c: float, epsilon: float):
    """(i, j, violation) where i is the best coordinate to raise and j to lower"""
    up = np.where(beta >= 0, grad - epsilon, grad + epsilon)
    down = np.where(beta > 0, grad - epsilon, grad + epsilon)
    up = np.where(beta < c, up, -np.inf)
    down = np.where(beta > -c, down, np.inf)
    i = int(np.argmax(up))
    j = int(np.argmin(down))
    return i, j, float(up[i] - down[j])


def _line_search(bi: float, bj: float, gi: float, gj: float, eta: float,
                 epsilon: float, hi: float) -> float:
    """argmax over t in [0, hi] of the dual along beta_i += t, beta_j -= t.

    phi(t) = t (g_i - g_j) - eta t^2 / 2 - eps (|b_i + t| + |b_j - t|) is
    concave and piecewise quadratic with kinks at t = -b_i and t = b_j.
    """
    def phi(t: float) -> float:
        return t * (gi - gj) - 0.5 * eta * t * t - epsilon * (abs(bi + t) + abs(bj - t))

    knots = sorted({0.0, hi} | {t for t in (-bi, bj) if 0.0 < t < hi})
    candidates = list(knots)
    for lo, up in zip(knots, knots[1:]):
        mid = 0.5 * (lo + up)
        si = math.copysign(1.0, bi + mid)
        sj = math.copysign(1.0, bj - mid)
        if eta > 0:
            t = (gi - gj - epsilon * (si - sj)) / eta
            candidates.append(min(up, max(lo, t)))
    return max(candidates, key=lambda t: (phi(t), -t))


def _bias(beta, grad, c: float, epsilon: float) -> float:
    """Average over free coordinates, else the midpoint of the KKT interval for b"""
    free = (beta != 0.0) & (np.abs(beta) < c)
    if free.any():
        return float(np.mean(grad[free] - epsilon * np.sign(beta[free])))
    at_zero = beta == 0.0
    lows = np.concatenate([grad[at_zero] - epsilon, grad[beta <= -c] + epsilon])
    highs = np.concatenate([grad[at_zero] + epsilon, grad[beta >= c] - epsilon])
    if lows.size and highs.size:
        return 0.5 * (float(lows.max()) + float(highs.min()))
    if lows.size:
        return float(lows.max())
    if highs.size:
        return float(highs.min())
    return 0.0


class SvrService:

    @staticmethod
    def gram(x_a, x_b, kernel: KernelSpec) -> np.ndarray:
        return kernel.evaluate(x_a, x_b)

    @staticmethod
    def default_kernel(n_features: int) -> KernelSpec:
        return KernelSpec(kind=KernelKind.RBF, gamma=1.0 / max(1, n_features))

    @staticmethod
    def fit_svr(x, y, c: float = 1.0, epsilon: float = 0.1, kernel: Optional[KernelSpec] = None,
                tol: float = DEFAULT_TOL, max_passes: Optional[int] = None,
                on_iteration: Optional[IterationCallback] = None) -> SvrModel:
        """Solve the epsilon-SVR dual by SMO.

        max_passes caps the number of pair updates (default 10 n^2). Running
        out of updates is not an error: the model comes back with
        converged=False and the last KKT violation.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ShapeError(f"x of shape {x.shape} does not match y of shape {y.shape}")
        n = x.shape[0]
        if n < 2:
            raise TooFewSamplesError(n, 2, "fit_svr")
        if not c > 0:
            raise InvalidParameterError(f"C must be positive, got {c}")
        if epsilon < 0:
            raise InvalidParameterError(f"epsilon must be non-negative, got {epsilon}")
        if not tol > 0:
            raise InvalidParameterError(f"tol must be positive, got {tol}")
        kernel = kernel or SvrService.default_kernel(x.shape[1])
        limit = max_passes if max_passes is not None else 10 * n * n

        k = kernel.evaluate(x, x)
        beta = np.zeros(n)
        grad = y.copy()
        iterations = 0
        i, j, violation = _violating_pair(beta, grad, c, epsilon)
        while violation >= tol and iterations < limit:
            eta = max(0.0, k[i, i] + k[j, j] - 2.0 * k[i, j])
            hi = min(c - beta[i], beta[j] + c)
            t = _line_search(beta[i], beta[j], grad[i], grad[j], eta, epsilon, hi)
            if t <= 0.0:
                break
            beta[i] = c if t == c - beta[i] else beta[i] + t
            beta[j] = -c if t == beta[j] + c else beta[j] - t
            grad -= t * (k[:, i] - k[:, j])
            iterations += 1
            if on_iteration is not None:
                on_iteration(iterations, 0.5 * float(beta @ (y + grad)) - epsilon * float(np.abs(beta).sum()))
            i, j, violation = _violating_pair(beta, grad, c, epsilon)

        converged = violation < tol
        if not converged:
            logger.warning("[fit_svr] stopped after %d updates with KKT violation %.3g (tol %.1g)",
                           iterations, violation, tol)
        bias = _bias(beta, grad, c, epsilon)
        support = np.nonzero(beta)[0]
        logger.debug("[fit_svr] n=%d C=%g eps=%g %s: %d support vectors, %d updates",
                     n, c, epsilon, kernel.kind.value, support.size, iterations)
        return SvrModel(
            support_indices=support.tolist(),
            dual_coefs=beta[support],
            bias=bias,
            kernel=kernel,
            c=float(c),
            epsilon=float(epsilon),
            x_support=x[support],
            n_features=x.shape[1],
            converged=bool(converged),
            violation=max(0.0, violation),
            iterations=iterations,
        )

    @staticmethod
    def full_dual(model: SvrModel, n: int) -> np.ndarray:
        """Dense beta over all n training rows"""
        beta = np.zeros(n)
        beta[list(model.support_indices)] = model.dual_coefs
        return beta

    @staticmethod
    def residual_classes(model: SvrModel, x, y, tol: float = DEFAULT_TOL) -> List[str]:
        """Label each training row 'inside', 'margin' or 'outside' the epsilon tube"""
        resid = np.abs(np.asarray(y, dtype=float) - model.predict(x))
        labels = []
        for r in resid:
            if r < model.epsilon - tol:
                labels.append("inside")
            elif r <= model.epsilon + tol:
                labels.append("margin")
            else:
                labels.append("outside")
        return labels
