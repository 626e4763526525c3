"""
Pipeline service - the stages behind the command line.

Each stage reads its inputs from out_dir and writes its outputs there, so a
one-shot run and a sequence of single-stage runs produce the same files:

    eda      -> summary_stats.csv, normality.csv, kde/*.csv, prepared.json
    select   -> scaler.json, heatmap.csv, clusters.json, selected_features.json
    train    -> cv_results.csv, models/*.json, models/index.json, feature_importance.csv
    evaluate -> model_comparison.csv
"""
import json
import logging
import os
import re
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.errors import ConfigError, DataError, MissingArtifactError
from models.evaluation import EvalReport, ScaleTag
from models.indicator_table import Scaler, SplitData
from models.manifest import STAGE_ORDER, RunManifest
from models.regression import ForestModel, GbmModel, ModelKind, TreeModel
from models.selection import ClusterMap
from models.settings import PipelineConfig
from services.activity_service import ActivityService
from services.data_service import DataService
from services.evaluation_service import EvaluationService
from services.model_service import ModelService
from services.selection_service import SelectionService
from services.stats_service import StatsService, yeo_johnson_transform
from services.tree_service import TreeService
from storage import artifact_store

logger = logging.getLogger(__name__)

PREPARED_FILE = "prepared.json"
SCALER_FILE = "scaler.json"
CLUSTERS_FILE = "clusters.json"
SELECTED_FILE = "selected_features.json"
HEATMAP_FILE = "heatmap.csv"
SUMMARY_FILE = "summary_stats.csv"
NORMALITY_FILE = "normality.csv"
KDE_DIR = "kde"
MODELS_DIR = "models"
MODEL_INDEX_FILE = "models/index.json"
CV_FILE = "cv_results.csv"
IMPORTANCE_FILE = "feature_importance.csv"
COMPARISON_FILE = "model_comparison.csv"

COMPARISON_COLUMNS = ["model", "mae", "mse", "rmse", "r2", "scale", "converged", "status", "error"]

# what each stage owns; rerunning a stage deletes these for it and every later stage
STAGE_OUTPUTS = {
    "eda": (SUMMARY_FILE, NORMALITY_FILE, KDE_DIR, PREPARED_FILE),
    "select": (SCALER_FILE, HEATMAP_FILE, CLUSTERS_FILE, SELECTED_FILE),
    "train": (CV_FILE, MODELS_DIR, IMPORTANCE_FILE),
    "evaluate": (COMPARISON_FILE,),
    "report": (COMPARISON_FILE,),
}
_UNSAFE_PATH_CHARS = re.compile(r'[\\/:*?"<>|\x00-\x1f]')


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_").lower() or "model"


def kde_file_names(names: List[str]) -> Dict[str, str]:
    """Variable -> kde file name; keeps the case and replaces only path-unsafe characters.

    Two variables mapping to the same file (compared case-insensitively, as
    some filesystems do) raise DataError instead of overwriting each other.
    """
    files: Dict[str, str] = {}
    seen: Dict[str, str] = {}
    for name in names:
        stem = _UNSAFE_PATH_CHARS.sub("_", name).strip()
        if stem in ("", ".", ".."):
            stem = "_" + stem
        key = stem.casefold()
        if key in seen:
            raise DataError(f"variables {seen[key]!r} and {name!r} would share the file {KDE_DIR}/{stem}.csv")
        seen[key] = name
        files[name] = f"{stem}.csv"
    return files


def is_artifact(rel: str) -> bool:
    """True for paths (relative to out_dir) that some stage writes"""
    for outputs in STAGE_OUTPUTS.values():
        for owned in outputs:
            if rel == owned or rel.startswith(owned + "/"):
                return True
    return False


def clear_outputs(config: PipelineConfig, stage: str) -> List[str]:
    """Delete what `stage` and the stages after it wrote; returns those stage names"""
    later = STAGE_ORDER[STAGE_ORDER.index(stage):]
    removed = []
    for name in later:
        for rel in STAGE_OUTPUTS[name]:
            if rel not in removed and artifact_store.remove(_path(config, rel)):
                removed.append(rel)
    if removed:
        logger.info("[pipeline:%s] cleared %d earlier artifacts: %s", stage, len(removed), ", ".join(removed))
    return list(later)


def _path(config: PipelineConfig, *parts: str) -> str:
    return os.path.join(config.out_dir, *parts)


def _floats(values) -> List[float]:
    return [float(v) for v in values]


def _matrix(rows) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in rows], dtype=float)


def load_prepared(config: PipelineConfig) -> Tuple[SplitData, Dict[str, Any]]:
    """Train/test split after imputation and normality transforms, as written by eda"""
    data = artifact_store.read_json(_path(config, PREPARED_FILE))
    names = data["feature_names"]
    split = SplitData(
        train_x=_matrix(data["train_x"]).reshape(len(data["train_indices"]), len(names)),
        train_y=_floats(data["train_y"]),
        test_x=_matrix(data["test_x"]).reshape(len(data["test_indices"]), len(names)),
        test_y=_floats(data["test_y"]),
        seed=int(data["seed"]),
        train_indices=data["train_indices"],
        test_indices=data["test_indices"],
        feature_names=names,
        target_name=data["target_name"],
        years=data["years"],
    )
    return split, data


def load_selected_split(config: PipelineConfig) -> Tuple[SplitData, List[str]]:
    """Scaled split restricted to the selected features"""
    split, _ = load_prepared(config)
    scaler = Scaler.from_dict(artifact_store.read_json(_path(config, SCALER_FILE)))
    selection = artifact_store.read_json(_path(config, SELECTED_FILE))
    selected = [row["feature"] for row in selection["selected"]]
    scaled = split.with_features(scaler.transform(split.train_x), scaler.transform(split.test_x),
                                 split.feature_names)
    return scaled.select_columns(selected), selected


class PipelineService:

    @staticmethod
    def run_eda(config: PipelineConfig) -> Dict[str, Any]:
        """load -> impute -> split -> describe -> AD screen/transform -> KDE"""
        if not config.data_path:
            raise ConfigError("data_path is required for the eda stage")
        table = DataService.impute(DataService.load_table(config.data_path, config.target_column))
        split = DataService.split(table, config.train_fraction, config.seed)

        constant = [name for j, name in enumerate(table.feature_names) if np.ptp(split.train_x[:, j]) == 0.0]
        if constant:
            logger.warning("[pipeline:eda] dropping %d features constant on the training rows: %s",
                           len(constant), ", ".join(constant))
        kept = [n for n in table.feature_names if n not in constant]
        split = split.select_columns(kept)

        columns = [(table.target_name, table.target)] + [(n, table.column(n)) for n in kept]
        summary = StatsService.describe_frame(columns)
        artifact_store.write_csv(
            _path(config, SUMMARY_FILE),
            ["variable", "mean", "median", "std_dev", "iqr", "ci_low", "ci_high", "n"],
            [[name, s.mean, s.median, s.std_dev, s.iqr, s.ci_low, s.ci_high, s.n] for name, s in summary],
        )

        results, train_x = StatsService.screen_matrix(split.train_x, kept)
        test_x = np.array(split.test_x, copy=True)
        for j, result in enumerate(results):
            if result.transform_lambda is not None:
                test_x[:, j] = yeo_johnson_transform(split.test_x[:, j], result.transform_lambda)
        artifact_store.write_csv(
            _path(config, NORMALITY_FILE),
            ["feature", "a_squared", "a_star", "p_value", "passed", "transform_lambda", "transformed_p_value",
             "tested"],
            [[r.feature, r.a_squared, r.a_star, r.p_value, r.passed, r.transform_lambda, r.transformed_p_value,
              r.tested] for r in results],
        )

        kde_files = kde_file_names([name for name, _ in columns])
        for name, series in columns:
            curve = StatsService.kde(series, config.kde_grid_size, name)
            artifact_store.write_csv(_path(config, KDE_DIR, kde_files[name]), ["grid", "density"],
                                     zip(curve.grid, curve.density))

        prepared = {
            "target_name": table.target_name,
            "years": list(table.years),
            "seed": split.seed,
            "feature_names": kept,
            "dropped": constant,
            "failed_tests": StatsService.failed_tests(results),
            "lambdas": {r.feature: r.transform_lambda for r in results},
            "train_indices": list(split.train_indices),
            "test_indices": list(split.test_indices),
            "train_y": split.train_y,
            "test_y": split.test_y,
            "train_x": train_x,
            "test_x": test_x,
        }
        artifact_store.write_json(_path(config, PREPARED_FILE), prepared)
        return prepared

    @staticmethod
    def run_select(config: PipelineConfig) -> Tuple[ClusterMap, List[str], int]:
        """scale -> correlation -> clusters -> representatives -> F-rank -> top-k"""
        split, _ = load_prepared(config)
        names = list(split.feature_names)
        scaler = DataService.fit_scaler(split.train_x, names)
        artifact_store.write_json(_path(config, SCALER_FILE), scaler.to_dict())
        train_x = scaler.transform(split.train_x)

        corr, clusters, result = SelectionService.run_selection(
            train_x, split.train_y, names, config.cluster_threshold, config.top_k)
        # rows and columns grouped by cluster, members in column order
        order = clusters.ordered_names()
        positions = [corr.index(name) for name in order]
        artifact_store.write_csv(
            _path(config, HEATMAP_FILE), ["feature"] + order,
            [[name] + list(corr.r[i, positions]) for name, i in zip(order, positions)],
        )
        artifact_store.write_json(_path(config, CLUSTERS_FILE), clusters.to_dict())

        dictionary = DataService.load_dictionary()
        selected_rows = []
        for name in result.selected:
            score = result.score_for(name)
            info = dictionary.describe(name)
            selected_rows.append({
                "feature": name,
                "rank": score.rank,
                "f_value": score.f_value,
                "p_value": score.p_value,
                "r": score.r,
                "cluster": clusters.assignment[name],
                "full_name": info["full_name"],
                "category": info["category"],
            })
        artifact_store.write_json(_path(config, SELECTED_FILE), {
            "k": result.k,
            "shortfall": result.shortfall,
            "selected": selected_rows,
            "scores": [s.to_dict() for s in result.scores],
        })
        if result.shortfall:
            logger.warning("[pipeline:select] only %d of %d requested features available",
                           len(result.selected), result.k)
        return clusters, list(result.selected), result.shortfall

    @staticmethod
    def run_train(config: PipelineConfig) -> Dict[str, str]:
        """Fit every configured model (SVR tuned by grid search); returns failures"""
        split, selected = load_selected_split(config)
        specs = EvaluationService.default_specs(config.models, config.tune_all, config.model_params)
        outcome = EvaluationService.train_models(split, specs, config.grid, config.folds, config.seed,
                                                 config.svr_tol, config.max_workers)

        entries = []
        importance_rows = []
        for spec in specs:
            model = outcome.models.get(spec.name)
            if model is None:
                continue
            rel = f"{MODELS_DIR}/{_slug(spec.name)}.json"
            ModelService.save_model(model, _path(config, rel))
            entries.append({
                "name": spec.name,
                "kind": ModelKind(spec.kind).value,
                "file": rel,
                "params": outcome.params[spec.name],
                "converged": ModelService.is_converged(model),
            })
            if isinstance(model, (TreeModel, ForestModel, GbmModel)):
                for feature, value in zip(selected, TreeService.feature_importances(model)):
                    importance_rows.append([spec.name, feature, value])

        artifact_store.write_json(_path(config, MODEL_INDEX_FILE), {
            "features": selected,
            "target_scaler": outcome.target_scaler.to_dict(),
            "models": entries,
            "failures": outcome.failures,
        })
        artifact_store.write_csv(_path(config, IMPORTANCE_FILE), ["model", "feature", "importance"],
                                 importance_rows)

        n_folds = config.folds
        cv_rows = []
        for name, results in outcome.cv_results.items():
            for r in results:
                cv_rows.append([name, r.rank, r.index, json.dumps(r.config, sort_keys=True),
                                r.mean_score] + list(r.fold_scores) + [r.converged])
        artifact_store.write_csv(
            _path(config, CV_FILE),
            ["model", "rank", "index", "params", "mean_mse"] + [f"fold_{f}" for f in range(n_folds)] + ["converged"],
            cv_rows,
        )
        return dict(outcome.failures)

    @staticmethod
    def run_evaluate(config: PipelineConfig) -> List[EvalReport]:
        """Score the persisted models on the test rows; nothing is retrained"""
        index_path = _path(config, MODEL_INDEX_FILE)
        if not os.path.isfile(index_path):
            raise MissingArtifactError(index_path)
        index = artifact_store.read_json(index_path)
        split, selected = load_selected_split(config)
        if selected != index["features"]:
            raise MissingArtifactError(f"{index_path} (trained on a different feature selection)")

        models = {entry["name"]: ModelService.load_model(_path(config, entry["file"]))
                  for entry in index["models"]}
        target_scaler = Scaler.from_dict(index["target_scaler"])
        reports = EvaluationService.score_models(models, split, target_scaler, index.get("failures", {}))
        artifact_store.write_csv(
            _path(config, COMPARISON_FILE), COMPARISON_COLUMNS,
            [[r.model_name, r.mae, r.mse, r.rmse, r.r2, ScaleTag(r.scale).value, r.converged,
              "FAILED" if r.failed else "ok", r.error] for r in reports],
        )
        return reports

    @staticmethod
    def run_stage(name: str, config: PipelineConfig, recorder: Optional[ActivityService] = None) -> Any:
        """Run one named stage under the manifest recorder"""
        recorder = recorder or ActivityService(config.out_dir, config.echo(), tracked=is_artifact)
        recorder.invalidate(clear_outputs(config, name))
        handlers = {
            "eda": PipelineService.run_eda,
            "select": PipelineService.run_select,
            "train": PipelineService.run_train,
            "evaluate": PipelineService.run_evaluate,
            "report": PipelineService.run_evaluate,
        }
        with recorder.stage(name):
            result = handlers[name](config)
            if name == "select":
                recorder.manifest.shortfall = result[2]
            elif name == "train":
                recorder.manifest.failed_models = result
        return result

    @staticmethod
    def run_pipeline(config: PipelineConfig) -> RunManifest:
        """The whole pipeline in one go, stage by stage through the same on-disk artifacts"""
        artifact_store.ensure_dir(config.out_dir)
        recorder = ActivityService(config.out_dir, config.echo(), tracked=is_artifact)
        for name in ("eda", "select", "train", "evaluate"):
            PipelineService.run_stage(name, config, recorder)
        return recorder.manifest
