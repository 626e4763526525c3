"""
Stats service - descriptive statistics, Anderson-Darling screening,
Yeo-Johnson transforms, kernel density estimates and univariate F scores
"""
import logging
import math
from typing import Iterable, List, Optional, Tuple

import numpy as np

from models.errors import ShapeError, TooFewSamplesError, ZeroVarianceError
from models.stats import DensityCurve, FeatureScore, NormalityResult, SummaryStats
from utils.special import f_sf, norm_cdf, t_quantile

logger = logging.getLogger(__name__)

AD_MIN_SAMPLES = 8
AD_ALPHA = 0.05
PHI_CLAMP = 1e-15
# p = exp(1.2937 - 5.709 A + 0.0186 A^2) turns upward past its vertex
_AD_UPPER_VERTEX = 5.709 / (2 * 0.0186)
YJ_LAMBDA_GRID = tuple(k / 10.0 for k in range(-20, 21))
PERFECT_R_TOL = 1e-12


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D series, got shape {x.shape}")
    return x


def _require_variation(x: np.ndarray, name: str) -> None:
    if np.ptp(x) == 0.0:
        raise ZeroVarianceError(name)


def ad_p_value(a_star: float) -> float:
    """Case-3 (mean and variance estimated) piecewise p-value approximation"""
    if a_star >= 0.6:
        a = min(a_star, _AD_UPPER_VERTEX)
        p = math.exp(1.2937 - 5.709 * a + 0.0186 * a * a)
    elif a_star > 0.34:
        p = math.exp(0.9177 - 4.279 * a_star - 1.38 * a_star * a_star)
    elif a_star > 0.2:
        p = 1.0 - math.exp(-8.318 + 42.796 * a_star - 59.938 * a_star * a_star)
    else:
        p = 1.0 - math.exp(-13.436 + 101.14 * a_star - 223.73 * a_star * a_star)
    return min(1.0, max(0.0, p))


def yeo_johnson_transform(series, lam: float) -> np.ndarray:
    """Apply the Yeo-Johnson power transform with a fixed lambda"""
    y = _as_series(series)
    if lam == 1.0:
        return y.copy()
    out = np.empty_like(y)
    pos = y >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        if lam == 0.0:
            out[pos] = np.log1p(y[pos])
        else:
            out[pos] = (np.power(y[pos] + 1.0, lam) - 1.0) / lam
        if lam == 2.0:
            out[~pos] = -np.log1p(-y[~pos])
        else:
            out[~pos] = -(np.power(1.0 - y[~pos], 2.0 - lam) - 1.0) / (2.0 - lam)
    return out


def _yj_log_likelihood(y: np.ndarray, lam: float) -> float:
    transformed = yeo_johnson_transform(y, lam)
    if not np.all(np.isfinite(transformed)):
        return -math.inf
    var = transformed.var()
    if not var > 0.0 or not math.isfinite(var):
        return -math.inf
    n = y.shape[0]
    jacobian = np.sum(np.sign(y) * np.log1p(np.abs(y)))
    return -0.5 * n * math.log(var) + (lam - 1.0) * jacobian


class StatsService:
    """Univariate statistics used by the exploratory and screening stages"""

    @staticmethod
    def describe(series, confidence: float = 0.95) -> SummaryStats:
        x = _as_series(series)
        n = x.shape[0]
        if n < 2:
            raise TooFewSamplesError(n, 2, "describe")
        q25, median, q75 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
        mean = float(x.mean())
        std = float(x.std(ddof=1))
        half = t_quantile((1.0 + confidence) / 2.0, n - 1) * std / math.sqrt(n)
        return SummaryStats(
            mean=mean,
            median=float(median),
            std_dev=std,
            iqr=float(q75 - q25),
            ci_low=mean - half,
            ci_high=mean + half,
            n=n,
        )

    @staticmethod
    def anderson_darling(series, feature: str = "series") -> NormalityResult:
        """Anderson-Darling normality test with estimated mean and variance"""
        x = _as_series(series)
        n = x.shape[0]
        if n < AD_MIN_SAMPLES:
            raise TooFewSamplesError(n, AD_MIN_SAMPLES, "anderson_darling")
        _require_variation(x, feature)

        z = np.sort((x - x.mean()) / x.std(ddof=1))
        phi = np.clip(norm_cdf(z), PHI_CLAMP, 1.0 - PHI_CLAMP)
        i = np.arange(1, n + 1)
        s = np.sum((2 * i - 1) * (np.log(phi) + np.log1p(-phi[::-1])))
        a_squared = float(-n - s / n)
        a_star = a_squared * (1.0 + 0.75 / n + 2.25 / n ** 2)
        p = ad_p_value(a_star)
        return NormalityResult(
            feature=feature,
            a_squared=a_squared,
            a_star=a_star,
            p_value=p,
            passed=p >= AD_ALPHA,
        )

    @staticmethod
    def yeo_johnson(series) -> Tuple[np.ndarray, float]:
        """Pick lambda on the fixed grid by profile Gaussian log-likelihood"""
        y = _as_series(series)
        if y.shape[0] < AD_MIN_SAMPLES:
            raise TooFewSamplesError(y.shape[0], AD_MIN_SAMPLES, "yeo_johnson")
        scores = [_yj_log_likelihood(y, lam) for lam in YJ_LAMBDA_GRID]
        best = YJ_LAMBDA_GRID[int(np.argmax(scores))]
        return yeo_johnson_transform(y, best), best

    @staticmethod
    def screen_feature(series, feature: str) -> Tuple[NormalityResult, np.ndarray]:
        """AD-screen one feature and transform it only when that helps.

        Features passing the test are returned unchanged. Failing features
        get the best grid Yeo-Johnson lambda, kept only if the transformed
        series scores a higher p-value.
        """
        x = _as_series(series)
        result = StatsService.anderson_darling(x, feature)
        if result.passed:
            return result, x
        transformed, lam = StatsService.yeo_johnson(x)
        if lam == 1.0 or np.ptp(transformed) == 0.0:
            return result, x
        after = StatsService.anderson_darling(transformed, feature)
        if after.p_value > result.p_value:
            logger.debug("[screen_feature] %s: lambda=%.1f p %.4g -> %.4g",
                         feature, lam, result.p_value, after.p_value)
            return result.with_transform(lam, after.p_value), transformed
        return result, x

    @staticmethod
    def failed_tests(results: Iterable[NormalityResult]) -> List[str]:
        """Names of the features whose untransformed series failed the AD test"""
        return [r.feature for r in results if r.tested and not r.passed]

    @staticmethod
    def kde(series, grid_size: int = 512, feature: str = "series") -> DensityCurve:
        """Gaussian KDE with Silverman's rule-of-thumb bandwidth"""
        x = _as_series(series)
        n = x.shape[0]
        if n < 2:
            raise TooFewSamplesError(n, 2, "kde")
        if grid_size < 16:
            raise ValueError(f"grid_size must be at least 16, got {grid_size}")
        _require_variation(x, feature)

        std = x.std(ddof=1)
        q25, q75 = np.quantile(x, [0.25, 0.75], method="linear")
        spread = min(std, (q75 - q25) / 1.34)
        if spread <= 0.0:
            # a zero IQR with nonzero spread elsewhere
            spread = std
        h = 0.9 * spread * n ** (-0.2)
        grid = np.linspace(x.min() - 4.0 * h, x.max() + 4.0 * h, grid_size)
        u = (grid[:, None] - x[None, :]) / h
        density = np.exp(-0.5 * u * u).sum(axis=1) / (n * h * math.sqrt(2.0 * math.pi))
        return DensityCurve(grid=grid, density=density, bandwidth=float(h))

    @staticmethod
    def pearson(a, b, names: Tuple[str, str] = ("a", "b")) -> float:
        x = _as_series(a)
        y = _as_series(b)
        if x.shape != y.shape:
            raise ShapeError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
        if x.shape[0] < 2:
            raise TooFewSamplesError(x.shape[0], 2, "pearson")
        _require_variation(x, names[0])
        _require_variation(y, names[1])
        dx = x - x.mean()
        dy = y - y.mean()
        r = float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
        return min(1.0, max(-1.0, r))

    @staticmethod
    def f_score(x, y, feature: str = "feature", target: str = "target") -> FeatureScore:
        """Univariate regression F statistic of one feature against the target"""
        xs = _as_series(x)
        if xs.shape[0] < 3:
            raise TooFewSamplesError(xs.shape[0], 3, "f_score")
        r = StatsService.pearson(xs, y, (feature, target))
        n = xs.shape[0]
        if 1.0 - abs(r) <= PERFECT_R_TOL:
            return FeatureScore(feature=feature, r=r, f_value=math.inf, p_value=0.0)
        f_value = r * r / (1.0 - r * r) * (n - 2)
        return FeatureScore(feature=feature, r=r, f_value=f_value, p_value=f_sf(f_value, 1.0, n - 2.0))

    @staticmethod
    def describe_frame(columns: Iterable[Tuple[str, np.ndarray]],
                       confidence: float = 0.95) -> List[Tuple[str, SummaryStats]]:
        return [(name, StatsService.describe(values, confidence)) for name, values in columns]

    @staticmethod
    def screen_matrix(x: np.ndarray, names: Iterable[str]
                      ) -> Tuple[List[NormalityResult], np.ndarray]:
        """screen_feature over every column; returns results and the new matrix.

        With fewer than AD_MIN_SAMPLES rows nothing is tested or transformed:
        every feature gets an untested result and the matrix comes back as is.
        """
        x = np.asarray(x, dtype=float)
        names = list(names)
        out = np.array(x, copy=True)
        if x.shape[0] < AD_MIN_SAMPLES:
            logger.warning("[screen_matrix] only %d rows, normality screen needs %d; skipping it",
                           x.shape[0], AD_MIN_SAMPLES)
            return [NormalityResult.untested(name) for name in names], out
        results = []
        for j, name in enumerate(names):
            result, column = StatsService.screen_feature(x[:, j], name)
            results.append(result)
            out[:, j] = column
        failed = StatsService.failed_tests(results)
        logger.info("[screen_matrix] %d of %d features failed AD, %d transformed",
                    len(failed), len(results),
                    sum(1 for r in results if r.transform_lambda is not None))
        return results, out

    @staticmethod
    def lambda_for(results: Iterable[NormalityResult], feature: str) -> Optional[float]:
        for r in results:
            if r.feature == feature:
                return r.transform_lambda
        return None
