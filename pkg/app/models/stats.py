"""
Exploratory statistics data models
"""
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

import numpy as np


@dataclass(frozen=True)
class SummaryStats:
    """Descriptive statistics of one series (one row of summary_stats.csv)"""
    mean: float
    median: float
    std_dev: float
    iqr: float
    ci_low: float
    ci_high: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class NormalityResult:
    """Anderson-Darling outcome for one feature"""
    feature: str
    a_squared: float
    a_star: float
    p_value: float
    passed: bool
    transform_lambda: Optional[float] = None
    transformed_p_value: Optional[float] = None
    tested: bool = True

    @classmethod
    def untested(cls, feature: str) -> "NormalityResult":
        """Placeholder for a feature whose series was too short to test"""
        nan = float("nan")
        return cls(feature=feature, a_squared=nan, a_star=nan, p_value=nan, passed=False, tested=False)

    def with_transform(self, lam: float, p_after: float) -> "NormalityResult":
        return replace(self, transform_lambda=lam, transformed_p_value=p_after)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Gaussian kernel density estimate evaluated on an even grid"""
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.density))])


@dataclass(frozen=True)
class FeatureScore:
    """Univariate association of one feature with the target"""
    feature: str
    r: float
    f_value: float
    p_value: float
    rank: int = 1

    def with_rank(self, rank: int) -> "FeatureScore":
        return replace(self, rank=rank)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FeatureScore":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
