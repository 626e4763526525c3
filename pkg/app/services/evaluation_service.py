"""
Evaluation service - k-fold plans, cross-validation, hyperparameter search,
held-out metrics and the side-by-side model comparison
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import (
    FoldError, FoodPriceError, InvalidFoldError, ShapeError, TooFewSamplesError, UndefinedMetricError,
)
from models.evaluation import CvResult, EvalReport, FoldPlan, ModelSpec, ScaleTag, SvrConfig, TrainingOutcome
from models.indicator_table import Scaler, SplitData
from models.regression import KernelKind, ModelKind, RegressionModel
from models.settings import HyperGrid
from services.data_service import DataService
from services.model_service import DISPLAY_NAMES, ModelService
from services.svr_service import DEFAULT_TOL, SvrService
from utils.rng import DEFAULT_SEED, Xoshiro256

logger = logging.getLogger(__name__)

DEFAULT_FOLDS = 5

Trainer = Callable[[np.ndarray, np.ndarray], RegressionModel]

# search spaces used when the non-SVR models are opted into tuning
DEFAULT_CANDIDATES: Dict[ModelKind, Tuple[Dict[str, Any], ...]] = {
    ModelKind.OLS: ({},),
    ModelKind.RIDGE: tuple({"lam": v} for v in (0.01, 0.1, 1.0, 10.0, 100.0)),
    ModelKind.TREE: tuple({"max_depth": d} for d in (2, 3, 4, 5, None)),
    ModelKind.FOREST: tuple({"max_depth": d} for d in (3, 5, None)),
    ModelKind.GBM: tuple({"learning_rate": lr} for lr in (0.05, 0.1, 0.3)),
}


def _pool_map(fn, items: Sequence, max_workers: Optional[int]) -> List:
    if max_workers and max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _rank(configs: Sequence[Dict[str, Any]], runs: Sequence[List[Tuple[float, RegressionModel]]]
          ) -> List[CvResult]:
    """Rank by (mean MSE, enumeration index); rank 1 is the best"""
    scored = []
    for index, (config, run) in enumerate(zip(configs, runs)):
        scores = tuple(s for s, _ in run)
        scored.append(CvResult(
            config=dict(config),
            fold_scores=scores,
            mean_score=float(np.mean(scores)),
            index=index,
            converged=all(ModelService.is_converged(m) for _, m in run),
        ))
    scored.sort(key=lambda r: (r.mean_score, r.index))
    return [CvResult(config=r.config, fold_scores=r.fold_scores, mean_score=r.mean_score,
                     rank=pos + 1, index=r.index, converged=r.converged)
            for pos, r in enumerate(scored)]


class EvaluationService:

    @staticmethod
    def kfold(n: int, k: int = DEFAULT_FOLDS, seed: int = DEFAULT_SEED) -> FoldPlan:
        """Shuffle 0..n-1, then cut contiguous blocks; the first n % k folds get one extra row"""
        if k < 2 or k > n:
            raise InvalidFoldError(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
        order = Xoshiro256(seed).permutation(n)
        assignment = [0] * n
        base, extra = divmod(n, k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            for idx in order[start:start + size]:
                assignment[idx] = fold
            start += size
        return FoldPlan(n=n, k=k, assignment=assignment, seed=seed)

    @staticmethod
    def _fold_runs(x, y, folds: FoldPlan, trainer: Trainer,
                   max_workers: Optional[int] = None) -> List[Tuple[float, RegressionModel]]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[0] != folds.n or y.shape[0] != folds.n:
            raise ShapeError(f"fold plan covers {folds.n} rows, data has {x.shape[0]}")

        def run(fold: int) -> Tuple[float, RegressionModel]:
            train, test = folds.train_indices(fold), folds.test_indices(fold)
            try:
                model = trainer(x[train], y[train])
                err = y[test] - model.predict(x[test])
            except FoodPriceError as exc:
                raise FoldError(fold, exc) from exc
            return float(np.mean(err * err)), model

        return _pool_map(run, list(range(folds.k)), max_workers)

    @staticmethod
    def cross_validate(x, y, folds: FoldPlan, trainer: Trainer,
                       max_workers: Optional[int] = None) -> List[float]:
        """Validation MSE per fold, in fold order"""
        return [score for score, _ in EvaluationService._fold_runs(x, y, folds, trainer, max_workers)]

    @staticmethod
    def enumerate_grid(grid: HyperGrid) -> List[SvrConfig]:
        """Kernels in listed order, then ascending C, epsilon and gamma; duplicates dropped"""
        configs = []
        kernels = list(dict.fromkeys(KernelKind(k) for k in grid.kernels))
        for kernel in kernels:
            for c in sorted(set(grid.c_values)):
                for eps in sorted(set(grid.epsilon_values)):
                    gammas = [None] if kernel == KernelKind.LINEAR else sorted(set(grid.gamma_values))
                    for gamma in gammas:
                        configs.append(SvrConfig(kernel=kernel, c=c, epsilon=eps, gamma=gamma,
                                                 degree=grid.degree, coef0=grid.coef0))
        return configs

    @staticmethod
    def grid_search(x, y, grid: HyperGrid, folds: FoldPlan, tol: float = DEFAULT_TOL,
                    max_workers: Optional[int] = None) -> Tuple[SvrConfig, List[CvResult]]:
        """Cross-validated SVR grid search; returns the best config and all results by rank"""
        configs = EvaluationService.enumerate_grid(grid)

        def run(config: SvrConfig):
            def trainer(xt, yt):
                return SvrService.fit_svr(xt, yt, config.c, config.epsilon, config.kernel_spec(), tol)
            return EvaluationService._fold_runs(x, y, folds, trainer)

        runs = _pool_map(run, configs, max_workers)
        results = _rank([c.to_dict() for c in configs], runs)
        best = configs[results[0].index]
        flagged = sum(1 for r in results if not r.converged)
        logger.info("[grid_search] %d configs x %d folds; best %s mean mse %.6g%s",
                    len(configs), folds.k, best.to_dict(), results[0].mean_score,
                    f" ({flagged} not converged)" if flagged else "")
        return best, results

    @staticmethod
    def search_params(x, y, kind: ModelKind, candidates: Iterable[Dict[str, Any]], folds: FoldPlan,
                      seed: int = DEFAULT_SEED, base_params: Optional[Dict[str, Any]] = None,
                      max_workers: Optional[int] = None) -> Tuple[Dict[str, Any], List[CvResult]]:
        """Generic cross-validated search over parameter overrides for any model kind"""
        candidates = [dict(c) for c in candidates]
        if not candidates:
            raise InvalidFoldError("search_params needs at least one candidate")
        base = dict(base_params or {})

        def run(candidate: Dict[str, Any]):
            params = {**base, **candidate}
            return EvaluationService._fold_runs(
                x, y, folds, lambda xt, yt: ModelService.fit(kind, xt, yt, params, seed))

        runs = _pool_map(run, candidates, max_workers)
        results = _rank(candidates, runs)
        return candidates[results[0].index], results

    @staticmethod
    def evaluate(y_true, y_pred, scale: ScaleTag = ScaleTag.STANDARDIZED,
                 model_name: str = "model", converged: bool = True) -> EvalReport:
        t = np.asarray(y_true, dtype=float)
        p = np.asarray(y_pred, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ShapeError(f"y_true {t.shape} and y_pred {p.shape} differ")
        if t.shape[0] < 2:
            raise TooFewSamplesError(t.shape[0], 2, "evaluate")
        err = t - p
        ss_res = float(np.sum(err * err))
        ss_tot = float(np.sum((t - t.mean()) ** 2))
        if ss_tot == 0.0:
            raise UndefinedMetricError("R^2 is undefined for a constant y_true")
        mse = ss_res / t.shape[0]
        rmse = math.sqrt(mse)
        mae = float(np.mean(np.abs(err)))
        return EvalReport(model_name=model_name, mae=mae, mse=mse, rmse=rmse,
                          r2=1.0 - ss_res / ss_tot, scale=ScaleTag(scale), converged=converged)

    @staticmethod
    def default_specs(kinds: Iterable[ModelKind], tune_all: bool = False,
                      params: Optional[Dict[ModelKind, Dict[str, Any]]] = None) -> List[ModelSpec]:
        """One spec per kind; SVR is always tuned, the rest only with tune_all"""
        params = params or {}
        specs = []
        for kind in kinds:
            kind = ModelKind(kind)
            specs.append(ModelSpec(
                name=DISPLAY_NAMES[kind],
                kind=kind,
                params=dict(params.get(kind, {})),
                tune=kind == ModelKind.SVR or (tune_all and kind != ModelKind.OLS),
                candidates=DEFAULT_CANDIDATES.get(kind, ()),
            ))
        return specs

    @staticmethod
    def train_models(split: SplitData, specs: Sequence[ModelSpec], grid: Optional[HyperGrid] = None,
                     k: int = DEFAULT_FOLDS, seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL,
                     max_workers: Optional[int] = None) -> TrainingOutcome:
        """Fit every spec on the standardized training target; failures are recorded, not raised"""
        if not specs:
            raise ValueError("at least one model spec is required")
        target_scaler = DataService.fit_scaler(split.train_y, [split.target_name])
        x = np.asarray(split.train_x, dtype=float)
        ys = target_scaler.transform(split.train_y)
        outcome = TrainingOutcome(target_scaler=target_scaler)
        folds = None

        for spec in specs:
            kind = ModelKind(spec.kind)
            try:
                params = dict(spec.params)
                if spec.tune:
                    folds = folds or EvaluationService.kfold(x.shape[0], k, seed)
                    if kind == ModelKind.SVR:
                        best, results = EvaluationService.grid_search(
                            x, ys, grid or HyperGrid(), folds, tol, max_workers)
                        params.update(best.as_params(tol))
                    else:
                        best, results = EvaluationService.search_params(
                            x, ys, kind, spec.candidates or DEFAULT_CANDIDATES[kind], folds,
                            seed, spec.params, max_workers)
                        params.update(best)
                    outcome.cv_results[spec.name] = results
                elif kind == ModelKind.SVR:
                    params.setdefault("tol", tol)
                model = ModelService.fit(kind, x, ys, params, seed)
            except (FoodPriceError, np.linalg.LinAlgError) as exc:
                logger.warning("[train_models] %s failed: %s", spec.name, exc)
                outcome.failures[spec.name] = str(exc)
                continue
            outcome.models[spec.name] = model
            outcome.kinds[spec.name] = kind
            outcome.params[spec.name] = params
        return outcome

    @staticmethod
    def score_models(models: Dict[str, RegressionModel], split: SplitData, target_scaler: Scaler,
                     failures: Optional[Dict[str, str]] = None) -> List[EvalReport]:
        """Standardized and raw reports per model, best standardized R^2 first"""
        ys_test = target_scaler.transform(split.test_y)
        pairs = []
        failed = dict(failures or {})
        for name, model in models.items():
            try:
                pred = model.predict(split.test_x)
                converged = ModelService.is_converged(model)
                std = EvaluationService.evaluate(ys_test, pred, ScaleTag.STANDARDIZED, name, converged)
                raw = EvaluationService.evaluate(split.test_y, target_scaler.inverse_transform(pred),
                                                 ScaleTag.RAW, name, converged)
            except FoodPriceError as exc:
                logger.warning("[score_models] %s failed: %s", name, exc)
                failed[name] = str(exc)
                continue
            pairs.append((std, raw))

        pairs.sort(key=lambda pr: (-pr[0].r2, pr[0].model_name))
        reports = [r for pair in pairs for r in pair]
        for name in sorted(failed):
            reports.append(EvalReport.failure(name, ScaleTag.STANDARDIZED, failed[name]))
            reports.append(EvalReport.failure(name, ScaleTag.RAW, failed[name]))
        return reports

    @staticmethod
    def compare_models(split: SplitData, specs: Sequence[ModelSpec], grid: Optional[HyperGrid] = None,
                       k: int = DEFAULT_FOLDS, seed: int = DEFAULT_SEED, tol: float = DEFAULT_TOL,
                       max_workers: Optional[int] = None) -> List[EvalReport]:
        """Train on the training rows, evaluate on the test rows"""
        outcome = EvaluationService.train_models(split, specs, grid, k, seed, tol, max_workers)
        return EvaluationService.score_models(outcome.models, split, outcome.target_scaler, outcome.failures)
