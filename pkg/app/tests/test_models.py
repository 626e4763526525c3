import math
import os

import numpy as np
import pytest

from models.errors import (
    ConfigError, DataError, FoodPriceError, InvalidFoldError, MissingArtifactError, ShapeError, StageError,
    ZeroVarianceError,
)
from models.evaluation import EvalReport, FoldPlan, ScaleTag, SvrConfig
from models.indicator_table import Scaler, SplitData
from models.manifest import STATUS_FAILED, STATUS_OK, RunManifest, StageRecord
from models.regression import KernelKind
from models.selection import ClusterMap
from services.activity_service import MANIFEST_FILE, ActivityService
from storage import artifact_store


def test_error_exit_codes():
    assert ConfigError("x").exit_code == 2
    assert DataError("x").exit_code == 3
    assert MissingArtifactError("models/index.json").exit_code == 3
    assert ZeroVarianceError("f").exit_code == 4
    assert StageError("train", DataError("bad")).exit_code == 3
    assert StageError("train", ValueError("bad")).exit_code == 4
    assert isinstance(StageError("eda", ConfigError("c")), FoodPriceError)


def test_manifest_put_stage_keeps_pipeline_order():
    manifest = RunManifest(config={}, version="1.0.0")
    manifest.put_stage(StageRecord(name="train", millis=3.0))
    manifest.put_stage(StageRecord(name="eda", millis=1.0))
    manifest.put_stage(StageRecord(name="train", millis=5.0, status=STATUS_FAILED, error="boom"))
    assert [s.name for s in manifest.stages] == ["eda", "train"]
    assert manifest.stage("train").millis == 5.0
    assert manifest.status == STATUS_FAILED


def test_manifest_dict_round_trip():
    manifest = RunManifest(config={"seed": 42}, version="1.0.0", shortfall=3,
                           failed_models={"Linear Regression": "singular"})
    manifest.put_stage(StageRecord(name="eda", millis=1.5))
    again = RunManifest.from_dict(manifest.to_dict())
    assert again.to_dict() == manifest.to_dict()
    assert again.status == STATUS_OK


def test_cluster_map_round_trip():
    clusters = ClusterMap(assignment={"a": 0, "b": 0, "c": 1}, threshold=0.3, representatives={0: "b", 1: "c"})
    again = ClusterMap.from_dict(clusters.to_dict())
    assert again == clusters
    assert again.representative_list() == ["b", "c"]
    assert again.clusters() == [["a", "b"], ["c"]]


def test_fold_plan_validation():
    plan = FoldPlan(n=4, k=2, assignment=[0, 1, 1, 0], seed=1)
    assert plan.sizes() == [2, 2]
    assert plan.test_indices(1).tolist() == [1, 2]
    with pytest.raises(InvalidFoldError):
        FoldPlan(n=4, k=2, assignment=[0, 1, 1], seed=1)


def test_split_rejects_overlap():
    with pytest.raises(DataError):
        SplitData(train_x=np.ones((2, 1)), train_y=np.ones(2), test_x=np.ones((1, 1)), test_y=np.ones(1),
                  seed=0, train_indices=[0, 1], test_indices=[1])


def test_scaler_shapes():
    with pytest.raises(ShapeError):
        Scaler(means=[0.0, 1.0], stds=[1.0])
    scaler = Scaler(means=[1.0, 2.0], stds=[2.0, 4.0], names=["a", "b"])
    assert scaler.transform(np.array([[3.0, 6.0]])).tolist() == [[1.0, 1.0]]
    with pytest.raises(ShapeError):
        scaler.transform(np.ones((2, 3)))
    assert Scaler.from_dict(scaler.to_dict()).names == ("a", "b")


def test_eval_report_failure_is_nan():
    report = EvalReport.failure("SVR", ScaleTag.RAW, "did not fit")
    assert report.failed and not report.converged
    assert math.isnan(report.r2)
    assert report.to_dict()["scale"] == "raw"


def test_svr_config_params():
    linear = SvrConfig(kernel=KernelKind.LINEAR, c=1.0, epsilon=0.1)
    params = linear.as_params(1e-3)
    assert params["kernel"]["kind"] == "linear"
    assert (params["c"], params["epsilon"], params["tol"]) == (1.0, 0.1, 1e-3)
    assert linear.to_dict()["gamma"] is None
    poly = SvrConfig(kernel=KernelKind.POLYNOMIAL, c=1.0, epsilon=0.1, gamma=0.5, degree=2)
    assert poly.to_dict()["degree"] == 2
    assert poly.kernel_spec().degree == 2


# Activity Tests
def test_stage_success_writes_manifest(tmp_path):
    activity = ActivityService(str(tmp_path), {"seed": 1})
    with activity.stage("eda"):
        artifact_store.write_json(os.path.join(str(tmp_path), "prepared.json"), {"ok": True})
    doc = artifact_store.read_json(os.path.join(str(tmp_path), MANIFEST_FILE))
    assert doc["status"] == STATUS_OK
    assert [s["name"] for s in doc["stages"]] == ["eda"]
    assert [o["path"] for o in doc["outputs"]] == ["prepared.json"]


def test_stage_failure_is_recorded_and_raised(tmp_path):
    activity = ActivityService(str(tmp_path), {})
    with pytest.raises(StageError) as exc:
        with activity.stage("select"):
            raise ZeroVarianceError("flat")
    assert exc.value.stage == "select"
    assert exc.value.exit_code == 4
    reloaded = ActivityService(str(tmp_path), {})
    record = reloaded.manifest.stage("select")
    assert record.status == STATUS_FAILED
    assert "flat" in record.error


def test_tracked_outputs_skip_foreign_files(tmp_path):
    artifact_store.write_json(os.path.join(str(tmp_path), "prepared.json"), {})
    artifact_store.write_json(os.path.join(str(tmp_path), "scratch", "notes.json"), {})
    activity = ActivityService(str(tmp_path), {}, tracked=lambda rel: not rel.startswith("scratch/"))
    with activity.stage("eda"):
        pass
    assert [o.path for o in activity.manifest.outputs] == ["prepared.json"]


def test_invalidate_drops_stage_records_and_summaries(tmp_path):
    activity = ActivityService(str(tmp_path), {})
    for name in ("eda", "select", "train"):
        with activity.stage(name):
            pass
    activity.manifest.shortfall = 4
    activity.manifest.failed_models = {"Linear Regression": "singular"}
    activity.invalidate(["select", "train", "evaluate", "report"])
    assert [s.name for s in activity.manifest.stages] == ["eda"]
    assert activity.manifest.shortfall == 0
    assert activity.manifest.failed_models == {}
