"""
app/models/settings.py

Pipeline settings - every knob of a run, validated on construction.
Unknown keys are rejected so a typo in a config file fails loudly.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.regression import KernelKind, ModelKind

ALL_MODELS = [ModelKind.OLS, ModelKind.RIDGE, ModelKind.TREE,
              ModelKind.FOREST, ModelKind.GBM, ModelKind.SVR]


class HyperGrid(BaseModel):
    """SVR search space; gamma is ignored for the linear kernel"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    c_values: List[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0, 100.0])
    epsilon_values: List[float] = Field(default_factory=lambda: [0.01, 0.1, 0.5])
    gamma_values: List[float] = Field(default_factory=lambda: [0.01, 0.1, 1.0])
    kernels: List[KernelKind] = Field(default_factory=lambda: [KernelKind.LINEAR, KernelKind.RBF])
    degree: int = Field(default=3, ge=1)
    coef0: float = 1.0

    @field_validator("c_values", "gamma_values")
    @classmethod
    def _positive(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("must not be empty")
        if any(not v > 0 for v in values):
            raise ValueError("all values must be positive")
        return values

    @field_validator("epsilon_values")
    @classmethod
    def _non_negative(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("must not be empty")
        if any(v < 0 for v in values):
            raise ValueError("epsilon values must be non-negative")
        return values

    @field_validator("kernels")
    @classmethod
    def _kernels(cls, values: List[KernelKind]) -> List[KernelKind]:
        if not values:
            raise ValueError("must not be empty")
        return values


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    data_path: Optional[str] = None
    target_column: str = "FFPI"
    seed: int = 42
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    top_k: int = Field(default=30, ge=1)
    cluster_threshold: float = Field(default=0.3, gt=0.0, lt=1.0)
    grid: HyperGrid = Field(default_factory=HyperGrid)
    out_dir: str = "out"
    models: List[ModelKind] = Field(default_factory=lambda: list(ALL_MODELS))
    folds: int = Field(default=5, ge=2)
    tune_all: bool = False
    svr_tol: float = Field(default=1e-3, gt=0.0)
    kde_grid_size: int = Field(default=512, ge=16)
    model_params: Dict[ModelKind, Dict[str, Any]] = Field(default_factory=dict)
    max_workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("models")
    @classmethod
    def _models(cls, values: List[ModelKind]) -> List[ModelKind]:
        if not values:
            raise ValueError("at least one model is required")
        if len(set(values)) != len(values):
            raise ValueError("models must not repeat")
        return values

    @model_validator(mode="after")
    def _params_for_chosen_models(self) -> "PipelineConfig":
        unused = [k.value for k in self.model_params if k not in self.models]
        if unused:
            raise ValueError(f"model_params given for models not in the run: {unused}")
        return self

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy for the run manifest"""
        return self.model_dump(mode="json")
