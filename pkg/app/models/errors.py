"""
Exception hierarchy for the toolkit.

Numerical services raise these; the pipeline turns them into exit codes and
FAILED manifest markers.
"""
from typing import Iterable, Optional


class FoodPriceError(Exception):
    """Base class for every toolkit error"""
    exit_code = 4


class ConfigError(FoodPriceError):
    """Invalid or unreadable pipeline configuration"""
    exit_code = 2


# ---------- data errors ----------
class DataError(FoodPriceError):
    """Input data could not be used"""
    exit_code = 3


class SchemaError(DataError):
    def __init__(self, column: str, detail: str = "required column is missing"):
        self.column = column
        super().__init__(f"Schema error for column '{column}': {detail}")


class DuplicateRowError(DataError):
    def __init__(self, year: int):
        self.year = year
        super().__init__(f"Duplicate row for year {year}")


class ParseError(DataError):
    def __init__(self, year, column: str, raw: str):
        self.year = year
        self.column = column
        self.raw = raw
        super().__init__(f"Cannot parse '{raw}' at year={year}, column='{column}'")


class EmptyColumnError(DataError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"Feature '{feature}' has no observed values")


class TooFewRowsError(DataError):
    def __init__(self, n: int, minimum: int):
        self.n = n
        self.minimum = minimum
        super().__init__(f"Need at least {minimum} rows, got {n}")


class MissingArtifactError(DataError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"Expected upstream artifact not found: {path}")


# ---------- computation errors ----------
class ComputationError(FoodPriceError):
    """A numerical precondition was violated"""


class ZeroVarianceError(ComputationError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"Zero variance in '{feature}'")


class ShapeError(ComputationError):
    pass


class TooFewSamplesError(ComputationError):
    def __init__(self, n: int, minimum: int, what: str = "series"):
        self.n = n
        self.minimum = minimum
        super().__init__(f"{what} needs at least {minimum} samples, got {n}")


class SingularDesignError(ComputationError):
    def __init__(self, dependent: Iterable[str]):
        self.dependent = list(dependent)
        super().__init__(
            "Design matrix is rank deficient; dependent columns: "
            + (", ".join(self.dependent) or "unknown")
        )


class InvalidFoldError(ComputationError):
    pass


class UndefinedMetricError(ComputationError):
    pass


class InvalidParameterError(ComputationError):
    pass


class FoldError(ComputationError):
    def __init__(self, fold: int, cause: Exception):
        self.fold = fold
        self.cause = cause
        super().__init__(f"Fold {fold} failed: {cause}")


class StageError(FoodPriceError):
    """A pipeline stage aborted; exit_code follows the underlying cause"""

    def __init__(self, stage: str, cause: Exception, exit_code: Optional[int] = None):
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code or getattr(cause, "exit_code", 4)
        super().__init__(f"Stage '{stage}' failed: {cause}")
