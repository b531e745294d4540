import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from estrace.features import (
    FUNCTION_NAMES,
    FeatureMatrix,
    FeatureSpec,
    compute_feature,
    extract_row,
    raw_catalog,
    selected_catalog,
)
from estrace.trace import CHANNELS

from oracles import FEATURE_ORACLES


def test_function_names_are_the_published_eighteen():
    assert FUNCTION_NAMES == tuple(
        sorted(
            [
                "absolute_sum_of_changes",
                "approximate_entropy",
                "autocorrelation",
                "change_quantiles",
                "cid_ce",
                "energy_ratio_by_chunks",
                "fft_aggregated",
                "fft_coefficient",
                "index_mass_quantile",
                "mean",
                "median",
                "minimum",
                "number_crossing_m",
                "number_peaks",
                "partial_autocorrelation",
                "quantile",
                "range_count",
                "sum_values",
            ]
        )
    )
    assert set(FEATURE_ORACLES) == set(FUNCTION_NAMES)


def test_raw_catalog_shape():
    cat = raw_catalog()
    assert len(cat) == 592
    per_channel = {c: 0 for c in CHANNELS}
    for spec in cat:
        per_channel[spec.channel] += 1
    assert set(per_channel.values()) == {74}


def test_selected_catalog_shape():
    cat = selected_catalog()
    assert len(cat) == 32
    per_channel = {c: 0 for c in CHANNELS}
    for spec in cat:
        per_channel[spec.channel] += 1
    assert per_channel == {
        "ps_norm": 9,
        "ps_mean": 1,
        "pc_norm": 8,
        "v_norm": 5,
        "v_mean": 6,
        "sigma": 3,
        "f_best": 0,
        "pc_mean": 0,
    }
    raw_columns = {s.column_name() for s in raw_catalog()}
    assert all(s.column_name() in raw_columns for s in cat)


def test_column_names_are_unique_and_parse_back():
    for cat in (raw_catalog(), selected_catalog()):
        names = [s.column_name() for s in cat]
        assert len(set(names)) == len(names)
        for spec, name in zip(cat, names):
            assert FeatureSpec.parse(name) == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        FeatureSpec("no_such_feature", "sigma", ())
    with pytest.raises(ValueError):
        FeatureSpec("mean", "no_such_channel", ())
    with pytest.raises(ValueError):
        FeatureSpec("mean", "sigma", (1,))
    with pytest.raises(ValueError):
        FeatureSpec("autocorrelation", "sigma", ())


def test_compute_feature_input_discipline():
    spec = FeatureSpec("mean", "sigma", ())
    with pytest.raises(ValueError):
        compute_feature(spec, np.array([1.0, 2.0]))  # too short
    with pytest.raises(ValueError):
        compute_feature(spec, np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ValueError):
        compute_feature(spec, np.ones((2, 2)))


@pytest.mark.parametrize("name", FUNCTION_NAMES)
def test_every_function_matches_its_oracle(name, rng):
    """Package value vs independent reference on random series."""
    specs = [s for s in raw_catalog() if s.function_name == name and s.channel == "sigma"]
    assert specs, name
    for trial in range(25):
        n = int(rng.integers(10, 120))
        x = rng.normal(size=n) * 10.0 ** float(rng.integers(-2, 3))
        for spec in specs:
            got = compute_feature(spec, x)
            want = FEATURE_ORACLES[name](x, *spec.params)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12), (spec, n)


def test_constant_series_are_finite_everywhere():
    x = np.full(50, 3.25)
    for spec in raw_catalog():
        if spec.channel != "sigma":
            continue
        val = compute_feature(spec, x)
        assert np.isfinite(val), spec


def test_zero_series_guards():
    zeros = np.zeros(40)
    assert compute_feature(FeatureSpec("autocorrelation", "sigma", (1,)), zeros) == 0.0
    assert compute_feature(
        FeatureSpec("index_mass_quantile", "sigma", (0.5,)), zeros
    ) == 1.0
    assert compute_feature(
        FeatureSpec("energy_ratio_by_chunks", "sigma", (10, 0)), zeros
    ) == 0.0
    assert compute_feature(FeatureSpec("cid_ce", "sigma", (True,)), zeros) == 0.0


@given(
    st.integers(min_value=0, max_value=591),
    st.integers(min_value=0, max_value=2 ** 32 - 1),
)
@settings(max_examples=120, deadline=None)
def test_any_catalog_feature_is_finite_on_smooth_series(idx, seed):
    spec = raw_catalog()[idx]
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 80))
    x = np.cumsum(rng.normal(size=n))
    assert np.isfinite(compute_feature(spec, x))


def test_extract_row_uses_the_right_channel(short_trace):
    specs = [
        FeatureSpec("mean", "sigma", ()),
        FeatureSpec("mean", "f_best", ()),
    ]
    row = extract_row(short_trace, specs)
    mat = short_trace.channels()
    assert row[0] == pytest.approx(np.mean(mat[0]), rel=1e-15)
    assert row[1] == pytest.approx(np.mean(mat[1]), rel=1e-15)
    head = extract_row(short_trace, specs, length=10)
    assert head[0] == pytest.approx(np.mean(mat[0, :10]), rel=1e-15)


def _toy_matrix():
    specs = [
        FeatureSpec("mean", "sigma", ()),
        FeatureSpec("minimum", "sigma", ()),
    ]
    meta = [
        {"variant": v, "fid": f, "run": r, "L": 10, "targets_hit": r}
        for v in ("standard", "tpa")
        for f in (1, 8)
        for r in (0, 1)
    ]
    rng = np.random.default_rng(0)
    return FeatureMatrix(specs, rng.normal(size=(8, 2)), meta)


def test_matrix_validation():
    m = _toy_matrix()
    with pytest.raises(ValueError):
        FeatureMatrix(m.specs, m.values[:, :1], m.meta)
    with pytest.raises(ValueError):
        FeatureMatrix([m.specs[0], m.specs[0]], m.values, m.meta)
    bad_meta = [dict(d) for d in m.meta]
    del bad_meta[0]["fid"]
    with pytest.raises(ValueError):
        FeatureMatrix(m.specs, m.values, bad_meta)


def test_matrix_scaling_is_per_fid_unit_interval():
    m = _toy_matrix().scale_unit_interval()
    assert m.scaled
    fids = m.meta_array("fid")
    for fid in (1, 8):
        block = m.values[fids == fid]
        assert np.min(block) >= 0.0
        assert np.max(block) <= 1.0
        assert np.min(block, axis=0) == pytest.approx([0.0, 0.0], abs=0)
        assert np.max(block, axis=0) == pytest.approx([1.0, 1.0], abs=0)


def test_matrix_scaling_constant_column_becomes_zero():
    m = _toy_matrix()
    m.values[:, 1] = 7.0
    scaled = m.scale_unit_interval()
    assert np.all(scaled.values[:, 1] == 0.0)


def test_matrix_save_load_round_trip(tmp_path):
    m = _toy_matrix()
    path = m.save(tmp_path / "m.csv", extra_meta={"digest": "abc"})
    back = FeatureMatrix.load(path)
    assert back.columns == m.columns
    assert np.array_equal(back.values, m.values)
    assert back.meta == m.meta
    assert not back.scaled
    assert FeatureMatrix.read_sidecar(path)["digest"] == "abc"


def test_matrix_row_and_column_selection():
    m = _toy_matrix()
    sub = m.select_rows(m.meta_array("variant") == "tpa")
    assert sub.values.shape == (4, 2)
    assert set(sub.meta_array("variant")) == {"tpa"}
    one = m.select_columns([m.specs[1]])
    assert one.columns == [m.specs[1].column_name()]
    assert np.array_equal(one.values[:, 0], m.values[:, 1])
