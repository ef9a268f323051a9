import numpy as np
import pytest

from app.core.exceptions import (
    DataParseError, DataSetError, DataSetNotFound, DimensionMismatch, EmptyDataSet, NonFiniteValue,
)
from app.models.dataset import DataSet
from app.services.dataset import (
    VicinityIndex, load_dataset, save_dataset, underlying_set, vicinity_count,
)


class TestLoadDataset:
    def test_csv_all_real_by_default(self, write_file):
        ds = load_dataset(write_file("d.csv", "1.0,2.0\n3.0,4.5\n"))
        assert ds.size == 2
        assert ds.dims == (0, 2)
        np.testing.assert_allclose(ds.real_part, [[1.0, 2.0], [3.0, 4.5]])

    def test_schema_puts_integer_columns_first(self, write_file):
        ds = load_dataset(write_file("d.csv", "1,2.5\n2,3.5\n"), schema=(1, 1))
        assert ds.dims == (1, 1)
        assert ds.integer_part.dtype == np.int64
        assert ds.integer_part.ravel().tolist() == [1, 2]
        assert ds.point(1).real_part == (3.5,)

    def test_header_line_is_skipped(self, write_file):
        ds = load_dataset(write_file("d.csv", "a,b\n1,2\n"), header=True)
        assert ds.size == 1

    def test_parse_error_reports_row_and_column(self, write_file):
        with pytest.raises(DataParseError) as exc:
            load_dataset(write_file("d.csv", "1,2\n3,abc\n"))
        assert exc.value.row == 2
        assert exc.value.column == 2
        assert "row 2" in str(exc.value)

    def test_parse_error_row_counts_the_header(self, write_file):
        with pytest.raises(DataParseError) as exc:
            load_dataset(write_file("d.csv", "a,b\n1,2\n3,x\n"), header=True)
        assert exc.value.row == 3

    def test_fractional_value_in_integer_column(self, write_file):
        with pytest.raises(DataParseError) as exc:
            load_dataset(write_file("d.csv", "1.5,2\n"), schema=(1, 1))
        assert (exc.value.row, exc.value.column) == (1, 1)

    @pytest.mark.parametrize("token", ["nan", "inf", "-Infinity"])
    def test_non_finite_values_are_rejected(self, write_file, token):
        with pytest.raises(NonFiniteValue):
            load_dataset(write_file("d.csv", f"1,2\n3,{token}\n"))

    def test_extra_columns(self, write_file):
        with pytest.raises(DimensionMismatch):
            load_dataset(write_file("d.csv", "1,2\n3,4,5\n"))

    def test_missing_columns(self, write_file):
        with pytest.raises(DataSetError):
            load_dataset(write_file("d.csv", "1,2\n3\n"))

    def test_schema_width_mismatch(self, write_file):
        with pytest.raises(DimensionMismatch):
            load_dataset(write_file("d.csv", "1,2,3\n"), schema=(1, 1))

    def test_empty_file(self, write_file):
        with pytest.raises(EmptyDataSet):
            load_dataset(write_file("d.csv", ""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataSetNotFound):
            load_dataset(str(tmp_path / "absent.csv"))

    def test_json_array_of_arrays(self, write_file):
        ds = load_dataset(write_file("d.json", "[[1, 0.5], [2, 1.5]]"), schema=(1, 1))
        assert ds.integer_part.ravel().tolist() == [1, 2]
        np.testing.assert_allclose(ds.real_part.ravel(), [0.5, 1.5])

    def test_json_nan_constant(self, write_file):
        with pytest.raises(NonFiniteValue):
            load_dataset(write_file("d.json", "[[1.0, NaN]]"))

    def test_json_must_be_nested_arrays(self, write_file):
        with pytest.raises(DataParseError):
            load_dataset(write_file("d.json", "{\"x\": 1}"))

    def test_save_then_load_keeps_full_precision(self, tmp_path):
        ds = DataSet.from_arrays(integer_part=[[1], [2]], real_part=[[0.1 + 0.2], [1.0 / 3.0]])
        path = str(tmp_path / "out" / "d.csv")
        save_dataset(ds, path)
        back = load_dataset(path, schema=(1, 1))
        assert np.array_equal(back.real_part, ds.real_part)
        assert np.array_equal(back.integer_part, ds.integer_part)


class TestVicinity:
    def test_counts_include_the_point_itself(self):
        ds = DataSet.from_arrays(real_part=[[0.0], [0.05], [0.5]])
        assert VicinityIndex(ds).count_all(0.1).tolist() == [2, 2, 1]
        assert vicinity_count(ds, 2, 0.1) == 1

    def test_closed_ball(self):
        ds = DataSet.from_arrays(real_part=[[0.0], [0.25]])
        assert vicinity_count(ds, 0, 0.25) == 2

    def test_integer_parts_must_match_exactly(self):
        ds = DataSet.from_arrays(integer_part=[[1], [1], [2]], real_part=[[0.0], [0.01], [0.0]])
        index = VicinityIndex(ds)
        assert index.n_groups == 2
        assert index.count_all(1.0).tolist() == [2, 2, 1]
        assert index.query(2, 1.0).tolist() == [2]

    def test_pure_integer_group_is_its_own_vicinity(self):
        ds = DataSet.from_arrays(integer_part=[[1, 2], [1, 2], [3, 4]])
        assert VicinityIndex(ds).count_all(0.0).tolist() == [2, 2, 1]

    def test_index_out_of_range(self):
        ds = DataSet.from_arrays(real_part=[[0.0]])
        with pytest.raises(IndexError):
            vicinity_count(ds, 5, 0.1)

    @pytest.fixture
    def mixed_cloud(self):
        rng = np.random.default_rng(21)
        return DataSet.from_arrays(integer_part=rng.integers(0, 3, size=(180, 1)),
                                   real_part=rng.uniform(-1.0, 1.0, size=(180, 2)))

    @pytest.mark.parametrize("radius", [0.0, 0.1, 0.35, 3.0])
    def test_indexed_counts_match_brute_force(self, mixed_cloud, radius):
        ints, reals = mixed_cloud.integer_part, mixed_cloud.real_part
        same_group = np.all(ints[:, None, :] == ints[None, :, :], axis=2)
        distance = np.linalg.norm(reals[:, None, :] - reals[None, :, :], axis=2)
        expected = np.count_nonzero(same_group & (distance <= radius), axis=1)
        index = VicinityIndex(mixed_cloud)
        assert index.count_all(radius).tolist() == expected.tolist()
        for j in (0, 57, 179):
            assert vicinity_count(mixed_cloud, j, radius, index=index) == expected[j]

    def test_vicinity_is_symmetric(self, mixed_cloud):
        index = VicinityIndex(mixed_cloud)
        members = [set(index.query(j, 0.25).tolist()) for j in range(mixed_cloud.size)]
        for j, near in enumerate(members):
            assert j in near
            assert all(j in members[q] for q in near)

    def test_empty_data_set_has_no_counts(self):
        ds = DataSet.from_arrays(real_part=np.zeros((0, 2)))
        assert VicinityIndex(ds).count_all(0.1).size == 0


class TestDataSetModel:
    def test_underlying_set_keeps_first_occurrence_order(self):
        ds = DataSet.from_arrays(real_part=[[2.0], [1.0], [2.0], [3.0], [1.0]])
        distinct = underlying_set(ds)
        assert distinct.real_part.ravel().tolist() == [2.0, 1.0, 3.0]
        assert distinct.source_indices.tolist() == [0, 1, 3]

    def test_take_keeps_provenance(self):
        ds = DataSet.from_arrays(real_part=np.arange(5.0))
        sub = ds.take([4, 1]).take([1])
        assert sub.source_indices.tolist() == [1]

    def test_drop_removes_one_position(self):
        ds = DataSet.from_arrays(real_part=np.arange(4.0))
        assert ds.drop(1).real_part.ravel().tolist() == [0.0, 2.0, 3.0]

    def test_vectors_put_integer_columns_first(self):
        ds = DataSet.from_arrays(integer_part=[[7]], real_part=[[0.5]])
        assert ds.vectors.tolist() == [[7.0, 0.5]]

    def test_rejects_non_finite_reals(self):
        with pytest.raises(ValueError):
            DataSet.from_arrays(real_part=[[np.nan]])
