"""
Data service - loading, imputation, splitting and scaling of the indicator panel
"""
import logging
import math
import os
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from models.errors import (
    DataError, DuplicateRowError, EmptyColumnError, ParseError, SchemaError,
    ShapeError, TooFewRowsError, TooFewSamplesError, ZeroVarianceError,
)
from models.indicator_table import IndicatorDictionary, IndicatorInfo, IndicatorTable, Scaler, SplitData
from utils.rng import DEFAULT_SEED, Xoshiro256

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "NA", "NaN", ".."})
YEAR_COLUMN = "year"
MIN_SPLIT_ROWS = 5
DICTIONARY_FILE = os.path.join(os.path.dirname(os.path.dirname(__file__)), "storage", "data", "indicators.csv")


class DataService:
    """Handles the indicator panel from CSV file to scaled matrices"""

    @staticmethod
    def load_table(path: str, target_column: str = "FFPI") -> IndicatorTable:
        """Read a year-indexed CSV panel.

        Cells holding one of the missing tokens ("", "NA", "NaN", "..") are
        recorded in the missing mask and stored as NaN. Numbers are parsed with
        float(), which always uses a dot decimal separator.
        """
        if not os.path.isfile(path):
            raise DataError(f"Data file not found: {path}")
        try:
            raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding="utf-8")
        except pd.errors.EmptyDataError:
            raw = pd.DataFrame()
        if raw.empty:
            raise SchemaError(YEAR_COLUMN, "file has no header row")

        header = [str(h).strip() for h in raw.iloc[0].tolist()]
        body = raw.iloc[1:].reset_index(drop=True)

        seen = set()
        for name in header:
            if name in seen:
                raise SchemaError(name, "column name appears more than once")
            seen.add(name)
        if YEAR_COLUMN not in header:
            raise SchemaError(YEAR_COLUMN)
        if target_column not in header:
            raise SchemaError(target_column)

        year_col = header.index(YEAR_COLUMN)
        target_col = header.index(target_column)
        feature_cols = [j for j in range(len(header)) if j not in (year_col, target_col)]
        feature_names = [header[j] for j in feature_cols]

        years = []
        for i in range(len(body)):
            cell = body.iat[i, year_col].strip()
            try:
                year = int(cell)
            except ValueError:
                raise ParseError(f"row {i + 1}", YEAR_COLUMN, cell) from None
            if year in years:
                raise DuplicateRowError(year)
            years.append(year)

        def _parse(cell: str, year: int, column: str):
            token = cell.strip()
            if token in MISSING_TOKENS:
                return math.nan, True
            try:
                return float(token), False
            except ValueError:
                raise ParseError(year, column, cell) from None

        target = np.empty(len(body))
        values = np.empty((len(body), len(feature_cols)))
        mask = np.zeros((len(body), len(feature_cols)), dtype=bool)
        for i, year in enumerate(years):
            value, missing = _parse(body.iat[i, target_col], year, target_column)
            if missing:
                raise DataError(f"Target '{target_column}' is missing at year {year}")
            target[i] = value
            for k, j in enumerate(feature_cols):
                values[i, k], mask[i, k] = _parse(body.iat[i, j], year, header[j])

        order = np.argsort(years, kind="stable")
        table = IndicatorTable(
            years=[years[i] for i in order],
            target=target[order],
            feature_names=feature_names,
            values=values[order],
            missing_mask=mask[order],
            target_name=target_column,
        )
        logger.info("[load_table] %s: %d rows, %d features, %d missing cells",
                    path, table.n_rows, table.n_features, int(mask.sum()))
        return table

    @staticmethod
    def impute(table: IndicatorTable) -> IndicatorTable:
        """Fill interior gaps by linear interpolation over years and boundary
        gaps with the nearest observed value; observed cells stay untouched."""
        years = np.asarray(table.years, dtype=float)
        values = np.array(table.values, copy=True)
        for j, name in enumerate(table.feature_names):
            missing = table.missing_mask[:, j]
            if not missing.any():
                continue
            observed = ~missing
            if not observed.any():
                raise EmptyColumnError(name)
            filled = np.interp(years, years[observed], table.values[observed, j])
            values[:, j] = np.where(missing, filled, table.values[:, j])
        return table.with_values(values, np.zeros_like(table.missing_mask))

    @staticmethod
    def split(table: IndicatorTable, train_fraction: float = 0.8, seed: int = DEFAULT_SEED) -> SplitData:
        """Seeded Fisher-Yates split; the first floor(fraction * n) shuffled rows train"""
        n = table.n_rows
        if n < MIN_SPLIT_ROWS:
            raise TooFewRowsError(n, MIN_SPLIT_ROWS)
        if not 0.0 < train_fraction < 1.0:
            raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
        n_train = DataService.train_size(n, train_fraction)
        if n_train < 2 or n_train >= n:
            raise DataError(f"train_fraction {train_fraction} leaves {n_train} of {n} rows for training")

        order = Xoshiro256(seed).permutation(n)
        train_idx, test_idx = order[:n_train], order[n_train:]
        logger.debug("[split] n=%d seed=%d -> %d train / %d test", n, seed, len(train_idx), len(test_idx))
        return SplitData(
            train_x=table.values[train_idx],
            train_y=table.target[train_idx],
            test_x=table.values[test_idx],
            test_y=table.target[test_idx],
            seed=seed,
            train_indices=train_idx,
            test_indices=test_idx,
            feature_names=table.feature_names,
            target_name=table.target_name,
            years=table.years,
        )

    @staticmethod
    def train_size(n: int, train_fraction: float) -> int:
        # 1e-9 absorbs products like 0.29 * 100 = 28.999999999999996
        return int(math.floor(train_fraction * n + 1e-9))

    @staticmethod
    def fit_scaler(x: np.ndarray, names: Optional[Sequence[str]] = None) -> Scaler:
        """Column means and sample standard deviations; constant columns are rejected"""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[0] < 2:
            raise TooFewSamplesError(x.shape[0], 2, "scaler")
        names = tuple(names) if names is not None else ()
        if names and len(names) != x.shape[1]:
            raise ShapeError(f"{len(names)} names for {x.shape[1]} columns")
        for j in range(x.shape[1]):
            if np.ptp(x[:, j]) == 0.0:
                raise ZeroVarianceError(names[j] if names else f"column {j}")
        return Scaler(means=x.mean(axis=0), stds=x.std(axis=0, ddof=1), names=names)

    @staticmethod
    def apply_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
        return scaler.transform(x)

    @staticmethod
    def invert_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
        return scaler.inverse_transform(x)

    @staticmethod
    def load_dictionary(path: Optional[str] = None) -> IndicatorDictionary:
        """Read the bundled indicator dictionary (code, full_name, category)"""
        frame = pd.read_csv(path or DICTIONARY_FILE, dtype=str, keep_default_na=False)
        entries = {}
        for row in frame.itertuples(index=False):
            entries[row.code] = IndicatorInfo(code=row.code, full_name=row.full_name,
                                              category=row.category or "other")
        return IndicatorDictionary(entries=entries)
