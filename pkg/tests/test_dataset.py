"""CSV ingestion, label normalization, and floor-stratified splitting."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apsel import dataset, simulate
from apsel.errors import ConfigError, DataError


def _uniform_floor_dataset(m=100, floors=5):
    # latitude doubles as a unique row id so splits can be traced
    rng = np.random.default_rng(11)
    rss = rng.integers(-104, 1, size=(m, 3)).astype(float)
    return dataset.FingerprintDataset(
        rss=rss,
        latitude=np.arange(m, dtype=float),
        longitude=np.zeros(m),
        floor=np.repeat(np.arange(floors), m // floors),
        ap_ids=[f"WAP{i:03d}" for i in range(3)],
    )


def test_load_csv_substitutes_not_detected_sentinel(tiny_csv):
    d = dataset.load_csv(tiny_csv)
    expected = np.array([[-50.0, -60.0], [-70.0, -105.0], [-105.0, -105.0]])
    np.testing.assert_array_equal(d.rss, expected)
    assert d.ap_ids == ["WAP001", "WAP002"]
    np.testing.assert_array_equal(d.floor, [0, 1, 2])
    np.testing.assert_array_equal(d.longitude, [-7500.0, -7400.0, -7300.0])
    np.testing.assert_array_equal(d.latitude, [4864745.0, 4864746.0, 4864747.0])


def test_load_csv_row_with_no_detections_is_all_substitute(tiny_csv):
    d = dataset.load_csv(tiny_csv)
    assert np.all(d.rss[2] == -105.0)


def test_load_csv_honors_custom_substitution_value(tiny_csv):
    cfg = dataset.IngestConfig(not_detected_value=-110.0)
    d = dataset.load_csv(tiny_csv, cfg)
    assert d.rss[1, 1] == -110.0
    assert d.not_detected_value == -110.0


def test_load_csv_missing_file_raises_data_error(tmp_path):
    with pytest.raises(DataError, match="not found"):
        dataset.load_csv(tmp_path / "nope.csv")


def test_load_csv_missing_label_column_raises(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("WAP001,LONGITUDE,LATITUDE\n-50,-7500,4864745\n")
    with pytest.raises(DataError, match="FLOOR"):
        dataset.load_csv(path)


def test_load_csv_without_ap_columns_raises(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("X001,LONGITUDE,LATITUDE,FLOOR\n-50,-7500,4864745,0\n")
    with pytest.raises(DataError, match="no AP columns"):
        dataset.load_csv(path)


def test_load_csv_header_only_raises(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("WAP001,LONGITUDE,LATITUDE,FLOOR\n")
    with pytest.raises(DataError, match="empty dataset"):
        dataset.load_csv(path)


def test_load_csv_reports_location_of_non_numeric_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "WAP001,LONGITUDE,LATITUDE,FLOOR\n"
        "-50,-7500,4864745,0\n"
        "oops,-7400,4864746,1\n"
    )
    with pytest.raises(DataError) as err:
        dataset.load_csv(path)
    message = str(err.value)
    assert "row 1" in message and "WAP001" in message


def test_load_csv_rejects_rss_outside_valid_range(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "WAP001,LONGITUDE,LATITUDE,FLOOR\n"
        "-200,-7500,4864745,0\n"
        "-50,-7400,4864746,0\n"
    )
    with pytest.raises(DataError, match="out of range"):
        dataset.load_csv(path)


def test_load_csv_rejects_fractional_floor(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "WAP001,LONGITUDE,LATITUDE,FLOOR\n-50,-7500,4864745,1.5\n"
        "-60,-7400,4864746,1\n"
    )
    with pytest.raises(DataError, match="non-integer floor"):
        dataset.load_csv(path)


def test_normalize_labels_maps_endpoints_and_midpoint(tiny_csv):
    d = dataset.normalize_labels(dataset.load_csv(tiny_csv))
    np.testing.assert_allclose(d.longitude, [0.0, 0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(d.latitude, [0.0, 0.5, 1.0], atol=1e-12)
    assert d.transform is not None


def test_normalize_labels_is_idempotent(tiny_csv):
    once = dataset.normalize_labels(dataset.load_csv(tiny_csv))
    twice = dataset.normalize_labels(once)
    np.testing.assert_array_equal(once.latitude, twice.latitude)
    np.testing.assert_array_equal(once.longitude, twice.longitude)
    assert once.transform == twice.transform


def test_normalize_labels_round_trips_to_meters(tiny_csv):
    raw = dataset.load_csv(tiny_csv)
    norm = dataset.normalize_labels(raw)
    lat, lon = norm.transform.denormalize(norm.latitude, norm.longitude)
    np.testing.assert_allclose(lat, raw.latitude, atol=1e-9)
    np.testing.assert_allclose(lon, raw.longitude, atol=1e-9)


def test_normalize_labels_degenerate_axis_raises():
    d = dataset.FingerprintDataset(
        rss=np.full((3, 1), -60.0),
        latitude=np.array([1.0, 2.0, 3.0]),
        longitude=np.zeros(3),
        floor=np.zeros(3, dtype=np.int64),
        ap_ids=["WAP001"],
    )
    with pytest.raises(DataError, match="longitude"):
        dataset.normalize_labels(d)


def test_split_is_floor_stratified():
    d = _uniform_floor_dataset(m=100, floors=5)
    sp = dataset.split(d, test_fraction=0.2, seed=7)
    assert sp.train.n_samples == 80
    assert sp.test.n_samples == 20
    for level in range(5):
        assert int((sp.test.floor == level).sum()) == 4  # round(20 * 0.2)


def test_split_same_seed_reproduces_rows():
    d = _uniform_floor_dataset()
    a = dataset.split(d, test_fraction=0.25, seed=3)
    b = dataset.split(d, test_fraction=0.25, seed=3)
    np.testing.assert_array_equal(a.test.latitude, b.test.latitude)
    np.testing.assert_array_equal(a.train.latitude, b.train.latitude)


@given(
    fraction=st.floats(min_value=0.05, max_value=0.95),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_split_partitions_every_row_exactly_once(fraction, seed):
    d = _uniform_floor_dataset()
    sp = dataset.split(d, test_fraction=fraction, seed=seed)
    ids = np.concatenate([sp.train.latitude, sp.test.latitude])
    np.testing.assert_array_equal(np.sort(ids), np.arange(d.n_samples))
    assert sp.train.n_samples >= 1 and sp.test.n_samples >= 1


def test_split_rejects_fraction_outside_unit_interval():
    d = _uniform_floor_dataset()
    for bad in (0.0, 1.0, -0.1, 1.7):
        with pytest.raises(ConfigError):
            dataset.split(d, test_fraction=bad, seed=0)


def test_split_rejects_floor_with_single_sample():
    d = dataset.FingerprintDataset(
        rss=np.full((3, 1), -60.0),
        latitude=np.arange(3, dtype=float),
        longitude=np.zeros(3),
        floor=np.array([0, 0, 1]),
        ap_ids=["WAP001"],
    )
    with pytest.raises(DataError, match="floor 1"):
        dataset.split(d, test_fraction=0.5, seed=0)


def test_dump_then_load_reproduces_dataset_exactly(tiny_csv, tmp_path):
    d = dataset.normalize_labels(dataset.load_csv(tiny_csv))
    out = tmp_path / "dump.csv"
    csv_path, sidecar = dataset.dump(d, out)
    again = dataset.load_dump(csv_path)
    np.testing.assert_array_equal(again.rss, d.rss)
    np.testing.assert_array_equal(again.latitude, d.latitude)
    np.testing.assert_array_equal(again.longitude, d.longitude)
    np.testing.assert_array_equal(again.floor, d.floor)
    assert again.transform == d.transform
    # the dump restores the raw sentinel so it ingests like any source CSV
    text = out.read_text()
    assert "100.0" in text and str(sidecar).endswith(".meta.json")


def test_concat_requires_matching_columns(tiny_csv):
    d = dataset.load_csv(tiny_csv)
    other = dataset.FingerprintDataset(
        rss=np.full((2, 1), -60.0),
        latitude=np.zeros(2),
        longitude=np.zeros(2),
        floor=np.zeros(2, dtype=np.int64),
        ap_ids=["WAP009"],
    )
    with pytest.raises(DataError, match="different AP columns"):
        dataset.concat(d, other)


def test_load_many_concatenates_in_order(tiny_csv, tmp_path):
    second = tmp_path / "second.csv"
    second.write_text(
        "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR\n-90,-91,-7200,4864748,3\n"
    )
    d = dataset.load_many([tiny_csv, second])
    assert d.n_samples == 4
    assert d.floor[-1] == 3 and d.rss[-1, 0] == -90.0


def test_load_many_requires_at_least_one_path():
    with pytest.raises(ConfigError):
        dataset.load_many([])


def test_corpus_has_expected_scale(full_data):
    # 520 radio columns, ~21k fingerprints split over two source files
    assert full_data.n_aps == 520
    assert full_data.n_samples == 19937 + 1111


def test_corpus_split_sizes_near_global_fraction(full_data):
    sp = dataset.split(full_data, test_fraction=0.2, seed=1)
    expected = round(full_data.n_samples * 0.2)
    assert abs(sp.test.n_samples - expected) <= 5
    assert sp.train.n_samples + sp.test.n_samples == full_data.n_samples
