import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairgap import (CsvSchema, DataError, Dataset, RngStream, SchemaError, SyntheticSpec,
                     ValidationError, apg_true, generate_synthetic, load_csv, split,
                     train_svm)
from fairgap.dataset import dataset_all_observed

from conftest import BETA10, classify_spec


def test_generate_synthetic_shapes_and_mask():
    ds = generate_synthetic(classify_spec((50, 70)), RngStream(1))
    assert (ds.n, ds.p) == (120, 10)
    assert ds.mask.all() and ds.response_observed.all()
    assert (ds.sensitive[:50] == 0).all() and (ds.sensitive[50:] == 1).all()
    assert set(np.unique(ds.response)) <= {0.0, 1.0}


def test_generate_synthetic_group_means():
    ds = generate_synthetic(classify_spec((20000, 20000)), RngStream(2))
    m0 = ds.features[ds.sensitive == 0].mean()
    m1 = ds.features[ds.sensitive == 1].mean()
    assert abs(m0 - 1.0) < 0.02
    assert abs(m1 - (-1.0)) < 0.02


def test_generate_synthetic_deterministic():
    a = generate_synthetic(classify_spec(), RngStream(7, 3))
    b = generate_synthetic(classify_spec(), RngStream(7, 3))
    assert a.features.tobytes() == b.features.tobytes()
    assert a.response.tobytes() == b.response.tobytes()
    c = generate_synthetic(classify_spec(), RngStream(7, 4))
    assert a.features.tobytes() != c.features.tobytes()


def test_label_frequency_self_consistent():
    # empirical label mean matches the mean Bernoulli probability of the draw
    spec = classify_spec((10000, 10000))
    ds = generate_synthetic(spec, RngStream(3))
    score = ds.features @ np.asarray(BETA10)
    prob = 1.0 / (1.0 + np.exp(score))
    se = np.sqrt(np.mean(prob * (1 - prob)) / ds.n)
    assert abs(ds.response.mean() - prob.mean()) < 3 * se


def test_symmetric_groups_gap_vanishes():
    # identical feature distributions => any model's population gap is ~0
    spec = classify_spec(c=(1.0, 0.0))
    model = train_svm(generate_synthetic(spec, RngStream(4)), "classification",
                      rng=RngStream(5))
    gap, se = apg_true(model, spec, 100_000, RngStream(6))
    assert gap <= 3 * se


def test_invalid_specs_name_the_field():
    with pytest.raises(ValidationError, match="feature_sd"):
        SyntheticSpec((10, 10), 2, (1.0, 1.0), "classification", feature_sd=0.0).validate()
    with pytest.raises(ValidationError, match="n_per_group"):
        SyntheticSpec((0, 10), 2, (1.0, 1.0), "classification").validate()
    with pytest.raises(ValidationError, match="beta"):
        SyntheticSpec((5, 5), 3, (1.0, 1.0), "classification").validate()
    with pytest.raises(ValidationError, match="task"):
        SyntheticSpec((5, 5), 2, (1.0, 1.0), "ranking").validate()


def test_sensitive_must_be_binary():
    with pytest.raises(ValidationError):
        dataset_all_observed(np.zeros((3, 2)), np.zeros(3), np.array([0, 1, 2]))


def test_complete_indicator_matches_definition():
    gen = np.random.default_rng(0)
    for _ in range(25):
        n, p = 17, 4
        mask = gen.random((n, p)) < 0.7
        robs = gen.random(n) < 0.8
        ds = Dataset(gen.normal(size=(n, p)), gen.normal(size=n),
                     gen.integers(0, 2, size=n), mask, robs)
        expected = np.array([mask[i].all() and robs[i] for i in range(n)])
        assert (ds.complete_indicator() == expected).all()


def test_arrays_are_frozen():
    ds = generate_synthetic(classify_spec((5, 5)), RngStream(0))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 99.0


# -- CSV ingestion -----------------------------------------------------------

def _write(tmp_path, text):
    path = tmp_path / "d.csv"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_basic(tmp_path):
    path = _write(tmp_path, "A,y,x1,x2\n0,1.5,0.1,2\n1,0.5,0.2,3\n0,2.5,0.3,4\n")
    ds = load_csv(path, CsvSchema("A", "y", ("x1", "x2")))
    assert (ds.n, ds.p) == (3, 2)
    assert ds.mask.all()
    assert ds.response[1] == 0.5
    assert list(ds.sensitive) == [0, 1, 0]


def test_load_csv_non_binary_sensitive(tmp_path):
    path = _write(tmp_path, "A,y,x1\n0,1,0.1\n2,0,0.2\n")
    with pytest.raises(DataError, match="row 3.*'2'"):
        load_csv(path, CsvSchema("A", "y", ("x1",)))


def test_load_csv_missing_column(tmp_path):
    path = _write(tmp_path, "A,y,x1\n0,1,0.1\n")
    with pytest.raises(SchemaError, match="x9"):
        load_csv(path, CsvSchema("A", "y", ("x1", "x9")))


def test_load_csv_subset_of_columns(tmp_path):
    header = "A,y," + ",".join(f"x{j}" for j in range(1, 8))
    rows = "\n".join(f"{i % 2},1,{','.join(str(i + j) for j in range(7))}" for i in range(10))
    path = _write(tmp_path, header + "\n" + rows + "\n")
    ds = load_csv(path, CsvSchema("A", "y", ("x2", "x5", "x7")))
    assert (ds.n, ds.p) == (10, 3)
    assert ds.features[0, 0] == 1.0  # x2 of row 0


def test_load_csv_empty_cells_become_mask(tmp_path):
    path = _write(tmp_path, "A,y,x1,x2\n0,1,,2\n1,,0.5,3\n")
    ds = load_csv(path, CsvSchema("A", "y", ("x1", "x2")))
    assert not ds.mask[0, 0] and ds.mask[0, 1]
    assert not ds.response_observed[1]
    assert list(ds.complete_indicator()) == [False, False]


def test_load_csv_unparseable_cites_row(tmp_path):
    path = _write(tmp_path, "A,y,x1\n0,1,0.1\n1,oops,0.2\n")
    with pytest.raises(DataError, match="row 3"):
        load_csv(path, CsvSchema("A", "y", ("x1",)))


# -- split -------------------------------------------------------------------

def test_split_sizes():
    ds = generate_synthetic(classify_spec((5, 5)), RngStream(1))
    a, b = split(ds, 0.5, RngStream(2))
    assert (a.n, b.n) == (5, 5)


def test_split_adni_sizes():
    ds = generate_synthetic(classify_spec((325, 324)), RngStream(1))
    a, b = split(ds, 500 / 649, RngStream(2))
    assert (a.n, b.n) == (500, 149)


def test_split_deterministic_and_partition():
    ds = generate_synthetic(classify_spec((40, 40)), RngStream(1))
    key = ds.features @ np.arange(ds.p)  # row fingerprints
    a1, b1 = split(ds, 0.3, RngStream(9))
    a2, b2 = split(ds, 0.3, RngStream(9))
    assert a1.features.tobytes() == a2.features.tobytes()
    merged = sorted(np.concatenate([a1.features @ np.arange(ds.p), b1.features @ np.arange(ds.p)]))
    assert np.allclose(merged, sorted(key))


@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_split_partition_property(n, fraction, seed):
    k = int(round(fraction * n))
    if k < 1 or k > n - 1:
        return
    ds = dataset_all_observed(np.arange(n, dtype=float)[:, None], np.zeros(n),
                              np.zeros(n, dtype=int))
    a, b = split(ds, fraction, RngStream(seed))
    ids = np.concatenate([a.features[:, 0], b.features[:, 0]])
    assert a.n == k
    assert sorted(ids) == list(range(n))


def test_split_degenerate():
    one_row = dataset_all_observed(np.zeros((1, 2)), np.zeros(1), np.zeros(1, dtype=int))
    with pytest.raises(ValidationError):
        split(one_row, 0.5, RngStream(1))
    ds3 = generate_synthetic(classify_spec((2, 1)), RngStream(1))
    with pytest.raises(ValidationError):
        split(ds3, 0.01, RngStream(1))  # would leave an empty first part
