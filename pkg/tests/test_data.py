import numpy as np
import pytest

from htkmeans import ConfigError, DataError, DataMatrix, SimConfig, load_csv, load_iris, simulate_dataset, standardize
from htkmeans.data import load_labels, mean_template, write_labels_csv, write_matrix_csv


def test_data_matrix_is_read_only_and_named():
    d = DataMatrix([[1.0, 2.0], [3.0, 4.0]])
    assert d.column_names == ("V1", "V2")
    assert (d.n, d.p) == (2, 2)
    with pytest.raises(ValueError):
        d.values[0, 0] = 5.0


@pytest.mark.parametrize("values", [[1.0, 2.0], [[1.0, np.nan]], np.zeros((0, 3))])
def test_data_matrix_rejects_bad_input(values):
    with pytest.raises(DataError):
        DataMatrix(values)


def test_standardize_unit_second_moment():
    rng = np.random.default_rng(0)
    x = rng.normal(5.0, 3.0, size=(40, 3))
    z = standardize(DataMatrix(x)).values
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-14)
    np.testing.assert_allclose((z**2).mean(axis=0), 1.0, rtol=1e-14)


def test_standardize_drops_constant_column(caplog):
    x = np.column_stack([np.arange(5.0), np.full(5, 2.0), np.arange(5.0) ** 2])
    z = standardize(DataMatrix(x, ("a", "b", "c")))
    assert z.column_names == ("a", "c")
    assert z.dropped == ("b",)
    assert "b" in caplog.text


def test_load_csv_header_and_errors(tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("x,y\n1,2\n3,4.5\n")
    d = load_csv(good, has_header=True)
    assert d.column_names == ("x", "y")
    np.testing.assert_array_equal(d.values, [[1, 2], [3, 4.5]])

    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    with pytest.raises(DataError, match="row 2, column 2"):
        load_csv(bad)

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="row 2"):
        load_csv(ragged)

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="empty"):
        load_csv(empty)


def test_simulate_round_trip(tmp_path):
    ds = simulate_dataset(SimConfig(30, 60, 4, 0.8, 3))
    write_matrix_csv(tmp_path / "x.csv", ds.data, header=False)
    write_labels_csv(tmp_path / "y.csv", ds.labels)
    back = load_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(back.values, ds.data.values)
    np.testing.assert_array_equal(load_labels(tmp_path / "y.csv"), ds.labels)


def test_simulate_structure():
    ds = simulate_dataset(SimConfig(2000, 55, 2, 0.8, 1))
    x, y = ds.data.values, ds.labels
    assert set(np.unique(y)) == {1, 2}
    # informative means close to +-mu, noise means close to 0
    assert abs(x[y == 1, :50].mean() - 0.8) < 0.05
    assert abs(x[y == 2, :50].mean() + 0.8) < 0.05
    assert abs(x[:, 50:].mean()) < 0.05


def test_simulate_is_deterministic_and_seed_sensitive():
    a = simulate_dataset(SimConfig(20, 50, 8, 0.5, 9))
    b = simulate_dataset(SimConfig(20, 50, 8, 0.5, 9))
    c = simulate_dataset(SimConfig(20, 50, 8, 0.5, 10))
    np.testing.assert_array_equal(a.data.values, b.data.values)
    assert not np.array_equal(a.data.values, c.data.values)


def test_mean_templates_distinct_rows():
    for K in (2, 4, 8):
        t = mean_template(K, 1.0)
        assert t.shape == (K, 50)
        assert len({row.tobytes() for row in t}) == K
        np.testing.assert_allclose(np.abs(t), 1.0)


@pytest.mark.parametrize("cfg", [SimConfig(10, 40, 2, 1.0), SimConfig(10, 60, 3, 1.0), SimConfig(10, 60, 2, 0.0)])
def test_simulate_rejects_bad_config(cfg):
    with pytest.raises(ConfigError):
        simulate_dataset(cfg)


def test_bundled_iris():
    ds = load_iris()
    assert ds.data.values.shape == (150, 4)
    assert np.bincount(ds.labels).tolist() == [0, 50, 50, 50]
