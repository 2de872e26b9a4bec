import json

import numpy as np
import pytest

from mcdag import counts, dataset_from_rows, load_csv
from mcdag.data import (
    ArityError,
    ConfigurationOverflowError,
    DataError,
    EmptyFileError,
    MissingValueError,
    NonIntegerCellError,
    RaggedRowsError,
)

from conftest import chain3_dgp, random_binary_dataset


class TestLoadCsv:
    def test_two_column_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n0,1\n1,1\n")
        ds = load_csv(path)
        assert ds.names == ("a", "b")
        assert ds.arities == (2, 2)
        assert ds.n_rows == 2

    def test_missing_value(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n0,NA\n1,1\n")
        with pytest.raises(MissingValueError):
            load_csv(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n0,1\n1\n")
        with pytest.raises(RaggedRowsError):
            load_csv(path)

    def test_non_integer_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n0,1\n1,x\n")
        with pytest.raises(NonIntegerCellError):
            load_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(EmptyFileError):
            load_csv(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n")
        with pytest.raises(EmptyFileError):
            load_csv(path)

    def test_no_header_names(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1\n1,0\n")
        ds = load_csv(path, header=False)
        assert ds.names == ("x0", "x1")

    def test_ten_thousand_simulated_binary_rows(self, tmp_path):
        from mcdag import forward_sample

        dag, cpts = chain3_dgp()
        ds = forward_sample(dag, cpts, 10_000, seed=5)
        path = tmp_path / "big.csv"
        lines = [",".join(ds.names)]
        lines += [",".join(map(str, row)) for row in ds.rows.tolist()]
        path.write_text("\n".join(lines) + "\n")
        loaded = load_csv(path)
        assert loaded.n_rows == 10_000
        assert loaded.arities == (2, 2, 2)

    def test_schema_sidecar_overrides_inference(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a,b\n0,1\n1,1\n")
        schema = tmp_path / "d.schema.json"
        schema.write_text(json.dumps({"arities": {"b": 3}}))
        ds = load_csv(data, schema=schema)
        assert ds.arities == (2, 3)

    def test_schema_unknown_variable(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a,b\n0,1\n")
        with pytest.raises(DataError):
            load_csv(data, schema={"arities": {"zz": 2}})

    def test_schema_below_observed_rejected(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a,b\n0,2\n1,1\n")
        with pytest.raises(ArityError):
            load_csv(data, schema={"arities": {"b": 2}})

    def test_constant_column_clamped_to_arity_two(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a,b\n0,1\n0,0\n")
        ds = load_csv(data)
        assert ds.arities == (2, 2)


class TestDatasetInvariants:
    def test_needs_two_variables(self):
        with pytest.raises(DataError):
            dataset_from_rows([[0], [1]])

    def test_needs_one_row(self):
        with pytest.raises(DataError):
            dataset_from_rows(np.empty((0, 2), dtype=int))

    def test_rows_are_read_only(self):
        ds = dataset_from_rows([[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            ds.rows[0, 0] = 1


class TestCounts:
    def test_single_parent_tally(self):
        ds = dataset_from_rows([[0, 0], [0, 1], [1, 1], [1, 1]], names=["a", "b"])
        n = counts(ds, 1, [0])
        assert n.tolist() == [[1, 1], [0, 2]]

    def test_empty_parent_set_is_marginal_histogram(self):
        ds = dataset_from_rows([[0, 1], [0, 0], [0, 1], [0, 1]], names=["a", "b"])
        n = counts(ds, 1, [])
        assert n.tolist() == [[1, 3]]

    def test_total_equals_row_count(self, rng):
        for _ in range(20):
            ds = random_binary_dataset(rng, rng.randint(2, 5), rng.randint(2, 60))
            child = rng.randrange(ds.n_vars)
            others = [v for v in range(ds.n_vars) if v != child]
            parents = rng.sample(others, rng.randint(0, len(others)))
            assert counts(ds, child, parents).sum() == ds.n_rows

    def test_row_order_invariance(self, rng):
        ds = random_binary_dataset(rng, 4, 40)
        perm = list(range(40))
        rng.shuffle(perm)
        shuffled = dataset_from_rows(ds.rows[perm], names=ds.names, arities=ds.arities)
        for child in range(4):
            parents = [v for v in range(4) if v != child][:2]
            assert np.array_equal(counts(ds, child, parents), counts(shuffled, child, parents))

    def test_mixed_radix_order_sorted_parents(self):
        # rows over (a, b, c); child c with parents {a, b}: config = a*2 + b
        rows = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]]
        ds = dataset_from_rows(rows, names=["a", "b", "c"])
        n = counts(ds, 2, [0, 1])
        assert n.tolist() == [[1, 0], [0, 1], [0, 1], [1, 0]]
        # parent order in the call must not matter (sorted internally)
        assert np.array_equal(n, counts(ds, 2, [1, 0]))

    def test_child_in_parent_set_rejected(self):
        ds = dataset_from_rows([[0, 1], [1, 0]])
        with pytest.raises(DataError):
            counts(ds, 1, [1])

    def test_configuration_overflow(self):
        ds = dataset_from_rows([[0] * 6, [1] * 6])
        with pytest.raises(ConfigurationOverflowError):
            counts(ds, 0, [1, 2, 3, 4, 5], ceiling=10)
