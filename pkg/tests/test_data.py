import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genforge.data import (Dataset, DatasetError, FeatureBounds, compute_bounds, batches,
                           fit_standardizer, load_dataset, percentile, save_dataset)

ROWS = [
    [800, 0.0, 0.3048, 71.3, 0.00266337, 126.201],
    [1000, 0.0, 0.3048, 71.3, 0.00266337, 125.201],
    [1250, 0.0, 0.3048, 71.3, 0.00266337, 125.951],
    [1600, 1.5, 0.3048, 55.5, 0.00283081, 127.591],
]


def write(path, text):
    path.write_text(text)
    return path


def test_load_whitespace(tmp_path):
    text = "\n".join("\t".join(str(v) for v in r) for r in ROWS) + "\n"
    ds = load_dataset(write(tmp_path / "d.dat", text))
    assert len(ds) == 4
    np.testing.assert_array_equal(ds.X, np.array(ROWS)[:, :5])
    np.testing.assert_array_equal(ds.y, np.array(ROWS)[:, 5])


def test_load_csv_with_header(tmp_path):
    text = "f,alpha,chord,u,delta,spl\n" + "\n".join(",".join(str(v) for v in r) for r in ROWS)
    ds = load_dataset(write(tmp_path / "d.csv", text), format="csv")
    assert len(ds) == 4 and ds.y[-1] == 127.591


def test_load_reports_bad_row(tmp_path):
    text = "1 2 3 4 5 6\n1 2 3 4 5\n"
    with pytest.raises(DatasetError, match="row 2"):
        load_dataset(write(tmp_path / "d.dat", text))
    with pytest.raises(DatasetError, match="row 1, column 3"):
        load_dataset(write(tmp_path / "e.dat", "1 2 x 4 5 6\n"))
    with pytest.raises(DatasetError, match="row 2"):
        load_dataset(write(tmp_path / "g.dat", "1 2 3 4 5 6\n1 2 3 nan 5 6\n"))


def test_load_missing_and_empty(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nope.dat")
    with pytest.raises(DatasetError):
        load_dataset(write(tmp_path / "empty.dat", "\n\n"))
    with pytest.raises(DatasetError):
        load_dataset(write(tmp_path / "x.dat", "1 2 3 4 5 6\n"), format="xlsx")


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(rng.normal(size=(20, 5)), rng.normal(size=20))
    for fmt in ("whitespace", "csv"):
        save_dataset(ds, tmp_path / f"d.{fmt}", format=fmt)
        back = load_dataset(tmp_path / f"d.{fmt}", format=fmt)
        np.testing.assert_array_equal(back.table, ds.table)


def test_dataset_is_immutable_and_validated():
    ds = Dataset(np.ones((2, 5)), [1.0, 2.0])
    with pytest.raises(ValueError):
        ds.X[0, 0] = 3.0
    with pytest.raises(DatasetError):
        Dataset(np.ones((2, 4)), [1.0, 2.0])
    with pytest.raises(DatasetError):
        Dataset(np.ones((0, 5)), [])
    with pytest.raises(DatasetError):
        Dataset(np.ones((2, 5)), [1.0])
    assert Dataset.from_records(ds.records).table.tolist() == ds.table.tolist()


def test_standardizer_two_point_column():
    # column [0, 2] has mean 1 and population std 1
    X = np.array([[0.0, 1, 2, 3, 4], [2.0, 5, 6, 7, 9]])
    std = fit_standardizer(Dataset(X, [10.0, 20.0]))
    np.testing.assert_allclose(std.transform(X)[:, 0], [-1.0, 1.0])
    np.testing.assert_allclose(std.transform_target([10.0, 20.0]), [-1.0, 1.0])


def test_standardizer_matches_hand_moments():
    rng = np.random.default_rng(4)
    ds = Dataset(rng.uniform(0, 100, size=(50, 5)), rng.uniform(100, 140, size=50))
    std = fit_standardizer(ds)
    for j in range(6):
        col = ds.table[:, j].tolist()
        m = sum(col) / len(col)
        s = (sum((v - m) ** 2 for v in col) / len(col)) ** 0.5
        assert std.means[j] == pytest.approx(m, rel=1e-12)
        assert std.stds[j] == pytest.approx(s, rel=1e-12)
    z = std.transform(ds.table)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-12)


def test_standardizer_round_trip():
    rng = np.random.default_rng(1)
    ds = Dataset(rng.uniform(0, 20000, size=(30, 5)), rng.uniform(100, 140, size=30))
    std = fit_standardizer(ds)
    for v in (ds.X, ds.table):
        assert np.abs(std.inverse_transform(std.transform(v)) - v).max() < 1e-10
    assert std.inverse_transform_target(std.transform_target(123.4)) == pytest.approx(123.4, abs=1e-10)
    back = type(std).from_dict(std.to_dict())
    np.testing.assert_array_equal(back.means, std.means)


def test_standardizer_rejects_constant_column():
    X = np.column_stack([np.arange(4.0), np.full(4, 7.0), np.arange(4.0), np.arange(4.0), np.arange(4.0)])
    with pytest.raises(DatasetError, match="column 1"):
        fit_standardizer(Dataset(X, np.arange(4.0)))


def test_bounds_example():
    X = np.tile(np.array([[0.0], [10.0]]), (1, 5))
    b = compute_bounds(Dataset(X, [1.0, 2.0]))
    np.testing.assert_allclose(b.lower, -0.5)
    np.testing.assert_allclose(b.upper, 10.5)
    assert FeatureBounds.from_dict(b.to_dict()).delta.tolist() == b.delta.tolist()


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 30), extra=st.integers(1, 10), seed=st.integers(0, 10_000))
def test_bounds_monotone_under_superset(n, extra, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n + extra, 5)) * [1, 10, 0.1, 50, 1e-3]
    small = compute_bounds(Dataset(X[:n], np.zeros(n)))
    big = compute_bounds(Dataset(X, np.zeros(n + extra)))
    assert np.all(big.lower <= small.lower) and np.all(big.upper >= small.upper)


def test_percentile_linear_interpolation():
    assert percentile([1, 2, 3, 4, 5], 50) == 3.0
    assert percentile([1, 2, 3, 4], 50) == 2.5
    # rank (n - 1) p / 100 = 0.3 between 10 and 20
    assert percentile([10, 20], 30) == pytest.approx(13.0)
    with pytest.raises(ValueError):
        percentile([], 10)
    with pytest.raises(ValueError):
        percentile([1.0], 101)


def test_batch_sizes():
    sizes = [len(b) for b in batches(1503, 128, seed=0)]
    assert sizes == [128] * 11 + [95]


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 400), bs=st.integers(1, 64), seed=st.integers(0, 1000))
def test_batches_partition_indices(n, bs, seed):
    idx = np.concatenate(list(batches(n, bs, seed)))
    assert sorted(idx.tolist()) == list(range(n))


def test_batches_deterministic_per_seed():
    a = [b.tolist() for b in batches(50, 7, seed=3)]
    b = [b.tolist() for b in batches(50, 7, seed=3)]
    c = [b.tolist() for b in batches(50, 7, seed=4)]
    assert a == b and a != c
