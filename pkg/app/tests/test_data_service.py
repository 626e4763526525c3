import numpy as np
import pytest

from models.errors import (
    DataError, DuplicateRowError, EmptyColumnError, ParseError, SchemaError, TooFewRowsError, ZeroVarianceError,
)
from models.indicator_table import IndicatorTable
from services.data_service import DataService
from storage import seed_data


def write(tmp_path, text, name="panel.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def table_with(column, years=None):
    years = years or list(range(2000, 2000 + len(column)))
    values = np.array([[np.nan if v is None else v] for v in column], dtype=float)
    mask = np.array([[v is None] for v in column])
    return IndicatorTable(years=years, target=np.arange(len(column), dtype=float),
                          feature_names=["F"], values=values, missing_mask=mask)


# Load Tests
def test_load_table_single_feature(tmp_path):
    rows = "\n".join(f"{y},{100 + y - 2000},{1.5 * (y - 1999)}" for y in range(2000, 2023))
    table = DataService.load_table(write(tmp_path, "year,FFPI,SP.POP.TOTL\n" + rows + "\n"), "FFPI")
    assert table.n_rows == 23
    assert table.n_features == 1
    assert table.feature_names == ("SP.POP.TOTL",)
    assert table.years[0] == 2000 and table.years[-1] == 2022


def test_load_table_missing_target_column(tmp_path):
    path = write(tmp_path, "year,OTHER,SP.POP.TOTL\n2000,1,2\n")
    with pytest.raises(SchemaError) as exc:
        DataService.load_table(path, "FFPI")
    assert "FFPI" in str(exc.value)


def test_load_table_missing_year_column(tmp_path):
    with pytest.raises(SchemaError) as exc:
        DataService.load_table(write(tmp_path, "yr,FFPI\n2000,1\n"))
    assert "year" in str(exc.value)


def test_load_table_duplicate_year(tmp_path):
    with pytest.raises(DuplicateRowError):
        DataService.load_table(write(tmp_path, "year,FFPI,A\n2000,1,2\n2000,3,4\n"))


def test_load_table_parse_error_has_coordinates(tmp_path):
    with pytest.raises(ParseError) as exc:
        DataService.load_table(write(tmp_path, "year,FFPI,A\n2000,1,2\n2001,3,abc\n"))
    assert exc.value.year == 2001
    assert exc.value.column == "A"


def test_load_table_missing_tokens_are_masked(tmp_path):
    text = "year,FFPI,A,B\n2000,1,..,1\n2001,2,NA,2\n2002,3,,NaN\n2003,4,7,4\n"
    table = DataService.load_table(write(tmp_path, text))
    assert table.missing_mask[:, 0].tolist() == [True, True, True, False]
    assert table.missing_mask[:, 1].tolist() == [False, False, True, False]


def test_load_table_sorts_years(tmp_path):
    table = DataService.load_table(write(tmp_path, "year,FFPI,A\n2002,3,30\n2000,1,10\n2001,2,20\n"))
    assert table.years == (2000, 2001, 2002)
    assert table.column("A").tolist() == [10.0, 20.0, 30.0]


def test_load_table_missing_file():
    with pytest.raises(DataError):
        DataService.load_table("/nonexistent/panel.csv")


# Impute Tests
def test_impute_midpoint():
    assert DataService.impute(table_with([1.0, None, 3.0])).column("F").tolist() == [1.0, 2.0, 3.0]


def test_impute_boundary_extension():
    filled = DataService.impute(table_with([None, 5.0, 5.0, None]))
    assert filled.column("F").tolist() == [5.0, 5.0, 5.0, 5.0]


def test_impute_two_gap_line():
    filled = DataService.impute(table_with([2.0, None, None, 8.0]))
    assert filled.column("F").tolist() == [2.0, 4.0, 6.0, 8.0]
    assert not filled.missing_mask.any()


def test_impute_keeps_observed_cells_bitwise():
    column = [0.1, None, 0.30000000000000004, 1e-300]
    filled = DataService.impute(table_with(column)).column("F")
    assert filled[0] == 0.1 and filled[2] == 0.30000000000000004 and filled[3] == 1e-300


def test_impute_empty_column():
    with pytest.raises(EmptyColumnError) as exc:
        DataService.impute(table_with([None, None, None]))
    assert exc.value.feature == "F"


def test_impute_fills_fixture_cells(panel_path):
    table = DataService.load_table(panel_path)
    assert table.missing_mask.any()
    filled = DataService.impute(table)
    observed = ~table.missing_mask
    assert np.array_equal(filled.values[observed], table.values[observed])
    assert np.all(np.isfinite(filled.values))


def test_impute_is_idempotent(panel_path):
    once = DataService.impute(DataService.load_table(panel_path))
    twice = DataService.impute(once)
    assert np.array_equal(twice.values, once.values)
    assert np.array_equal(twice.missing_mask, once.missing_mask)
    small = DataService.impute(table_with([None, 1.5, None, None, 7.0, None]))
    assert DataService.impute(small).column("F").tobytes() == small.column("F").tobytes()


# Split Tests
def test_split_sizes_and_cover(panel_path):
    table = DataService.impute(DataService.load_table(panel_path))
    split = DataService.split(table, 0.8, 42)
    assert split.n_train == 18 and split.n_test == 5
    assert sorted(split.train_indices + split.test_indices) == list(range(23))
    assert np.array_equal(split.train_y, table.target[list(split.train_indices)])


def test_split_is_function_of_seed(panel_path):
    table = DataService.impute(DataService.load_table(panel_path))
    a = DataService.split(table, 0.8, 42)
    b = DataService.split(table, 0.8, 42)
    c = DataService.split(table, 0.8, 43)
    assert a.train_indices == b.train_indices
    assert a.train_indices != c.train_indices


def test_split_train_size_rounding():
    assert DataService.train_size(23, 0.8) == 18
    assert DataService.train_size(100, 0.29) == 29
    assert DataService.train_size(10, 0.5) == 5


def test_split_too_few_rows():
    with pytest.raises(TooFewRowsError):
        DataService.split(table_with([1.0, 2.0, 3.0, 4.0]), 0.8, 1)


def test_split_rejects_fraction_leaving_one_training_row():
    with pytest.raises(DataError):
        DataService.split(table_with([1.0, 2.0, 3.0, 4.0, 5.0]), 0.2, 1)


# Scaler Tests
def test_scaler_standardizes_with_sample_std(rng):
    x = np.array(rng.normals(40)).reshape(10, 4) * 3.0 + 5.0
    scaler = DataService.fit_scaler(x, ["a", "b", "c", "d"])
    z = DataService.apply_scaler(scaler, x)
    assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z.std(axis=0, ddof=1), 1.0, atol=1e-12)
    assert np.allclose(DataService.invert_scaler(scaler, z), x, atol=1e-12)


def test_scaler_rejects_constant_column():
    x = np.array([[1.0, 2.0], [1.0, 3.0], [1.0, 5.0]])
    with pytest.raises(ZeroVarianceError) as exc:
        DataService.fit_scaler(x, ["flat", "ok"])
    assert exc.value.feature == "flat"


# Dictionary Tests
def test_bundled_dictionary_has_categories():
    dictionary = DataService.load_dictionary()
    assert len(dictionary) > 100
    categories = {info.category for info in dictionary.entries.values()}
    assert categories <= {"economic", "demographic", "sociopolitical", "other"}
    info = dictionary.describe("SP.POP.TOTL")
    assert info["full_name"]
    demographic = dictionary.by_category("demographic")
    assert "SP.POP.TOTL" in {i.code for i in demographic}
    assert all(i.category == "demographic" for i in demographic)


def test_dictionary_unknown_code():
    assert DataService.load_dictionary().describe("SYN.IND.999") == {
        "code": "SYN.IND.999", "full_name": "", "category": "other"}


# Fixture Tests
def test_fixture_is_deterministic(tmp_path):
    a = seed_data.write_fixture(str(tmp_path / "a.csv"), seed=3)
    b = seed_data.write_fixture(str(tmp_path / "b.csv"), seed=3)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_fixture_shape(panel_path):
    table = DataService.load_table(panel_path)
    assert table.n_rows == seed_data.FIXTURE_ROWS
    assert table.n_features == seed_data.FIXTURE_FEATURES
