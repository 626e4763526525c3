"""
Model evaluation data models
"""
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.errors import InvalidFoldError
from models.regression import KernelKind, KernelSpec, ModelKind


class ScaleTag(str, Enum):
    STANDARDIZED = "standardized"
    RAW = "raw"


@dataclass(frozen=True)
class FoldPlan:
    """Row -> fold assignment for k-fold cross-validation"""
    n: int
    k: int
    assignment: Tuple[int, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        if len(self.assignment) != self.n:
            raise InvalidFoldError(f"assignment has {len(self.assignment)} entries for n={self.n}")
        if any(a < 0 or a >= self.k for a in self.assignment):
            raise InvalidFoldError(f"fold ids must lie in 0..{self.k - 1}")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.array([i for i, a in enumerate(self.assignment) if a == fold], dtype=int)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.array([i for i, a in enumerate(self.assignment) if a != fold], dtype=int)

    def sizes(self) -> List[int]:
        return [sum(1 for a in self.assignment if a == f) for f in range(self.k)]


@dataclass(frozen=True)
class SvrConfig:
    """One point of the SVR hyperparameter grid"""
    kernel: KernelKind
    c: float
    epsilon: float
    gamma: Optional[float] = None
    degree: int = 3
    coef0: float = 1.0

    def kernel_spec(self) -> KernelSpec:
        if self.kernel == KernelKind.LINEAR:
            return KernelSpec(kind=KernelKind.LINEAR)
        return KernelSpec(kind=self.kernel, gamma=self.gamma, degree=self.degree, coef0=self.coef0)

    def to_dict(self) -> Dict[str, Any]:
        out = {"kernel": KernelKind(self.kernel).value, "c": self.c, "epsilon": self.epsilon,
               "gamma": self.gamma}
        if self.kernel == KernelKind.POLYNOMIAL:
            out.update(degree=self.degree, coef0=self.coef0)
        return out

    def as_params(self, tol: float) -> Dict[str, Any]:
        return {"c": self.c, "epsilon": self.epsilon, "kernel": self.kernel_spec().to_dict(), "tol": tol}


@dataclass(frozen=True)
class CvResult:
    """Cross-validated score of one configuration (mean validation MSE)"""
    config: Dict[str, Any]
    fold_scores: Tuple[float, ...]
    mean_score: float
    rank: int = 0
    index: int = 0
    converged: bool = True

    def to_row(self) -> Dict[str, Any]:
        row = {"rank": self.rank, "index": self.index}
        row.update({f"param_{k}": v for k, v in self.config.items()})
        row["mean_mse"] = self.mean_score
        row.update({f"fold_{f}": s for f, s in enumerate(self.fold_scores)})
        row["converged"] = self.converged
        return row


@dataclass(frozen=True)
class EvalReport:
    """Held-out metrics of one model on one target scale"""
    model_name: str
    mae: float
    mse: float
    rmse: float
    r2: float
    scale: ScaleTag
    converged: bool = True
    failed: bool = False
    error: str = ""

    @classmethod
    def failure(cls, model_name: str, scale: ScaleTag, error: str) -> "EvalReport":
        nan = math.nan
        return cls(model_name=model_name, mae=nan, mse=nan, rmse=nan, r2=nan,
                   scale=scale, converged=False, failed=True, error=error)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["scale"] = ScaleTag(self.scale).value
        return out


@dataclass
class TrainingOutcome:
    """Models fitted on the training rows plus everything needed to score them"""
    models: Dict[str, Any] = field(default_factory=dict)
    kinds: Dict[str, ModelKind] = field(default_factory=dict)
    params: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    cv_results: Dict[str, List[CvResult]] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)
    target_scaler: Any = None


@dataclass(frozen=True)
class ModelSpec:
    """What compare_models should train: a kind, parameter overrides and whether to tune it"""
    name: str
    kind: ModelKind
    params: Dict[str, Any] = field(default_factory=dict)
    tune: bool = False
    candidates: Tuple[Dict[str, Any], ...] = ()
