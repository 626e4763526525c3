import json
import math
import os

import numpy as np
import pytest
from scipy import special, stats

from models.errors import MissingArtifactError
from storage import artifact_store
from utils.rng import SplitMix64, Xoshiro256, derive_seeds
from utils.special import betainc, f_sf, t_quantile, t_sf


# Generator Tests
def test_splitmix64_reference_stream():
    seeder = SplitMix64(0)
    assert seeder.next_u64() == 0xE220A8397B1DCDAF
    assert seeder.next_u64() == 0x6E789E6AA1B965F4


def test_xoshiro_same_seed_same_stream():
    a = Xoshiro256(42)
    b = Xoshiro256(42)
    assert [a.next_u64() for _ in range(20)] == [b.next_u64() for _ in range(20)]
    assert Xoshiro256(1).next_u64() != Xoshiro256(2).next_u64()


def test_xoshiro_uniform_and_below_ranges():
    rng = Xoshiro256(3)
    draws = [rng.uniform() for _ in range(2000)]
    assert all(0.0 <= u < 1.0 for u in draws)
    ints = [rng.below(7) for _ in range(2000)]
    assert set(ints) == set(range(7))
    with pytest.raises(ValueError):
        rng.below(0)


def test_permutation_and_sample():
    rng = Xoshiro256(11)
    perm = rng.permutation(23)
    assert sorted(perm) == list(range(23))
    picked = rng.sample(range(10), 4)
    assert len(set(picked)) == 4
    assert all(0 <= p < 10 for p in picked)
    with pytest.raises(ValueError):
        rng.sample(range(3), 4)


def test_normals_look_standard():
    values = np.array(Xoshiro256(5).normals(20000))
    assert abs(values.mean()) < 0.05
    assert abs(values.var() - 1.0) < 0.05


def test_derive_seeds_deterministic_and_distinct():
    seeds = derive_seeds(42, 50)
    assert seeds == derive_seeds(42, 50)
    assert len(set(seeds)) == 50


# Special Function Tests
@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (2.0, 3.0, 0.7), (10.0, 1.5, 0.95), (1.0, 8.5, 0.02)])
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-10)


@pytest.mark.parametrize("f,d1,d2", [(0.5, 1, 10), (4.2, 1, 16), (25.0, 1, 21), (1.3, 3, 7)])
def test_f_sf_matches_scipy(f, d1, d2):
    assert f_sf(f, d1, d2) == pytest.approx(stats.f.sf(f, d1, d2), rel=1e-8, abs=1e-12)


def test_f_sf_limits():
    assert f_sf(math.inf, 1, 10) == 0.0
    assert f_sf(0.0, 1, 10) == 1.0


@pytest.mark.parametrize("df", [2, 5, 17, 40])
def test_t_tail_and_quantile_match_scipy(df):
    assert t_sf(1.7, df) == pytest.approx(stats.t.sf(1.7, df), abs=1e-10)
    assert t_sf(-0.4, df) == pytest.approx(stats.t.sf(-0.4, df), abs=1e-10)
    assert t_quantile(0.975, df) == pytest.approx(stats.t.ppf(0.975, df), abs=1e-7)
    assert t_quantile(0.025, df) == pytest.approx(-t_quantile(0.975, df))


# Artifact Store Tests
def test_format_float_round_trip_and_non_finite():
    assert artifact_store.format_float(0.1) == "0.1"
    assert float(artifact_store.format_float(1 / 3)) == 1 / 3
    assert artifact_store.format_float(math.inf) == "inf"
    assert artifact_store.format_float(-math.inf) == "-inf"
    assert artifact_store.format_float(math.nan) == "nan"


def test_format_cell_types():
    assert artifact_store.format_cell(True) == "true"
    assert artifact_store.format_cell(np.bool_(False)) == "false"
    assert artifact_store.format_cell(np.int64(7)) == "7"
    assert artifact_store.format_cell(None) == ""
    assert artifact_store.format_cell("SP.POP.TOTL") == "SP.POP.TOTL"


def test_write_json_converts_numpy_and_infinity(tmp_path):
    path = artifact_store.write_json(str(tmp_path / "a" / "b.json"),
                                     {"f": np.float64(2.5), "v": np.arange(3), "inf": math.inf})
    with open(path, encoding="utf-8") as f:
        text = f.read()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data == {"f": 2.5, "v": [0, 1, 2], "inf": "inf"}


def test_write_csv_is_byte_stable(tmp_path):
    rows = [["a", 0.1, True], ["b", 1e-20, False]]
    first = artifact_store.write_csv(str(tmp_path / "one.csv"), ["name", "value", "flag"], rows)
    second = artifact_store.write_csv(str(tmp_path / "two.csv"), ["name", "value", "flag"], rows)
    assert artifact_store.file_digest(first) == artifact_store.file_digest(second)
    frame = artifact_store.read_csv(first)
    assert frame["value"].tolist() == ["0.1", "1e-20"]
    assert frame["flag"].tolist() == ["true", "false"]


def test_missing_artifact_names_path(tmp_path):
    missing = str(tmp_path / "nope.json")
    with pytest.raises(MissingArtifactError) as exc:
        artifact_store.read_json(missing)
    assert "nope.json" in str(exc.value)


def test_list_files_sorted_relative(tmp_path):
    artifact_store.write_json(str(tmp_path / "z.json"), {})
    artifact_store.write_json(str(tmp_path / "kde" / "a.json"), {})
    assert artifact_store.list_files(str(tmp_path)) == ["kde/a.json", "z.json"]
    assert os.path.isdir(artifact_store.ensure_dir(str(tmp_path / "new")))


def test_remove_handles_files_dirs_and_absence(tmp_path):
    artifact_store.write_json(str(tmp_path / "models" / "a.json"), {})
    artifact_store.write_json(str(tmp_path / "b.json"), {})
    assert artifact_store.remove(str(tmp_path / "models"))
    assert artifact_store.remove(str(tmp_path / "b.json"))
    assert not artifact_store.remove(str(tmp_path / "b.json"))
    assert artifact_store.list_files(str(tmp_path)) == []
