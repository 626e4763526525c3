import json
import os

import pytest

from storage import seed_data
from utils.rng import Xoshiro256


@pytest.fixture
def rng():
    return Xoshiro256(7)


@pytest.fixture
def panel_path(tmp_path):
    return seed_data.write_fixture(str(tmp_path / "panel.csv"))


@pytest.fixture
def clustered_panel_path(tmp_path):
    return seed_data.write_fixture(str(tmp_path / "clustered.csv"), clusters=12, per_cluster=3)


# small grid and ensembles so a full run stays in the seconds range
FAST_SETTINGS = {
    "grid": {"c_values": [1.0, 10.0], "epsilon_values": [0.1], "gamma_values": [0.1],
             "kernels": ["linear", "rbf"]},
    "model_params": {"forest": {"n_trees": 15}, "gbm": {"rounds": 25}},
    "kde_grid_size": 64,
}


@pytest.fixture
def write_config(tmp_path):
    def _write(name="config.json", **settings):
        data = dict(FAST_SETTINGS)
        data.update(settings)
        path = os.path.join(str(tmp_path), name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path
    return _write
