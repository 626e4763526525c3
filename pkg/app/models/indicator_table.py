"""
Indicator panel data models: the year-indexed table, its train/test split,
the column scaler and the bundled indicator dictionary.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import DataError, ShapeError


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class IndicatorTable:
    """Year-indexed panel: one target series plus named feature columns"""
    years: Tuple[int, ...]
    target: np.ndarray
    feature_names: Tuple[str, ...]
    values: np.ndarray
    missing_mask: np.ndarray
    target_name: str = "FFPI"

    def __post_init__(self):
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "target", _frozen(self.target))
        values = np.array(self.values, dtype=float).reshape(len(self.years), len(self.feature_names))
        object.__setattr__(self, "values", _frozen(values))
        mask = np.array(self.missing_mask, dtype=bool).reshape(values.shape)
        object.__setattr__(self, "missing_mask", _frozen(mask, dtype=bool))

        n = len(self.years)
        if self.target.shape != (n,):
            raise ShapeError(f"target has {self.target.shape[0]} rows, expected {n}")
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise DataError("years must be strictly increasing")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("feature names must be unique")

    @property
    def n_rows(self) -> int:
        return len(self.years)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def with_values(self, values: np.ndarray, missing_mask: np.ndarray) -> "IndicatorTable":
        return IndicatorTable(
            years=self.years,
            target=self.target,
            feature_names=self.feature_names,
            values=values,
            missing_mask=missing_mask,
            target_name=self.target_name,
        )


@dataclass(frozen=True, eq=False)
class SplitData:
    """Train/test partition of an IndicatorTable"""
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    seed: int
    train_indices: Tuple[int, ...]
    test_indices: Tuple[int, ...]
    feature_names: Tuple[str, ...] = ()
    target_name: str = "FFPI"
    years: Tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("train_x", "train_y", "test_x", "test_y"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "train_indices", tuple(int(i) for i in self.train_indices))
        object.__setattr__(self, "test_indices", tuple(int(i) for i in self.test_indices))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        if set(self.train_indices) & set(self.test_indices):
            raise DataError("train and test indices overlap")

    @property
    def n_train(self) -> int:
        return len(self.train_indices)

    @property
    def n_test(self) -> int:
        return len(self.test_indices)

    def with_features(self, train_x: np.ndarray, test_x: np.ndarray,
                      feature_names: Sequence[str]) -> "SplitData":
        return SplitData(
            train_x=train_x,
            train_y=self.train_y,
            test_x=test_x,
            test_y=self.test_y,
            seed=self.seed,
            train_indices=self.train_indices,
            test_indices=self.test_indices,
            feature_names=tuple(feature_names),
            target_name=self.target_name,
            years=self.years,
        )

    def select_columns(self, names: Sequence[str]) -> "SplitData":
        idx = [self.feature_names.index(n) for n in names]
        return self.with_features(self.train_x[:, idx], self.test_x[:, idx], names)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-column standardization parameters (sample standard deviation)"""
    means: np.ndarray
    stds: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(np.atleast_1d(self.means)))
        object.__setattr__(self, "stds", _frozen(np.atleast_1d(self.stds)))
        object.__setattr__(self, "names", tuple(self.names))
        if self.means.shape != self.stds.shape:
            raise ShapeError("means and stds differ in length")

    @property
    def n_columns(self) -> int:
        return self.means.shape[0]

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.n_columns == 1:
            return x
        if x.ndim != 2 or x.shape[1] != self.n_columns:
            raise ShapeError(f"expected {self.n_columns} columns, got shape {x.shape}")
        return x

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        if x.ndim == 1:
            return (x - self.means[0]) / self.stds[0]
        return (x - self.means) / self.stds

    def inverse_transform(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        if x.ndim == 1:
            return x * self.stds[0] + self.means[0]
        return x * self.stds + self.means

    def to_dict(self) -> Dict:
        return {
            "names": list(self.names),
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Scaler":
        return cls(means=data["means"], stds=data["stds"], names=data.get("names", ()))


@dataclass(frozen=True)
class IndicatorInfo:
    """One row of the bundled indicator dictionary"""
    code: str
    full_name: str
    category: str = "other"

    def to_dict(self) -> Dict[str, str]:
        return {"code": self.code, "full_name": self.full_name, "category": self.category}


@dataclass
class IndicatorDictionary:
    """Indicator code -> human-readable name and category"""
    entries: Dict[str, IndicatorInfo] = field(default_factory=dict)

    def get(self, code: str) -> Optional[IndicatorInfo]:
        return self.entries.get(code)

    def describe(self, code: str) -> Dict[str, str]:
        info = self.entries.get(code)
        if info is None:
            return {"code": code, "full_name": "", "category": "other"}
        return info.to_dict()

    def by_category(self, category: str) -> List[IndicatorInfo]:
        return [info for info in self.entries.values() if info.category == category]

    def __len__(self) -> int:
        return len(self.entries)
