"""CSV ingestion, windowing, and the synthetic generator."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlstm.data import TimeSeries, ingest_csv, make_dataset, synth_series


def write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_plain_floats(tmp_path):
    path = write(tmp_path, "".join(f"{v}.0\n" for v in range(1, 11)))
    series = ingest_csv(path)
    assert len(series) == 10
    assert series.values[0] == 1.0


def test_ingest_skips_header(tmp_path):
    path = write(tmp_path, "speed\n" + "".join(f"{v}.5\n" for v in range(10)))
    assert len(ingest_csv(path)) == 10


def test_ingest_reports_bad_row(tmp_path):
    path = write(tmp_path, "1.0\n2.0\n3.0\nabc\n5.0\n6.0\n7.0\n8.0\n")
    with pytest.raises(ValueError, match="row 4"):
        ingest_csv(path)


def test_ingest_rejects_non_finite(tmp_path):
    path = write(tmp_path, "1.0\n2.0\nnan\n4.0\n5.0\n6.0\n7.0\n8.0\n")
    with pytest.raises(ValueError, match="row 3"):
        ingest_csv(path)


def test_ingest_rejects_short_file(tmp_path):
    path = write(tmp_path, "1.0\n2.0\n")
    with pytest.raises(ValueError, match="at least 8"):
        ingest_csv(path)


def test_ingest_handles_crlf(tmp_path):
    path = tmp_path / "crlf.csv"
    path.write_bytes(b"1.0\r\n2.0\r\n3.0\r\n4.0\r\n5.0\r\n6.0\r\n7.0\r\n8.0\r\n")
    assert len(ingest_csv(path)) == 8


def test_window_count_small():
    series = TimeSeries(np.arange(10, dtype=float))
    train, test = make_dataset(series, seq_len=6, split_ratio=0.75)
    assert len(train) + len(test) == 4


def test_window_count_paper_sized():
    series = TimeSeries(np.linspace(0, 1, 8064))
    train, test = make_dataset(series, seq_len=6, split_ratio=0.75)
    assert len(train) + len(test) == 8058
    assert len(train) == 6043
    assert len(test) == 2015


def test_constant_series_normalizes_to_zero():
    series = TimeSeries(np.full(32, 7.0))
    train, test = make_dataset(series, seq_len=6)
    assert train.normalization is None
    assert np.all(train.windows == 0.0)
    assert np.all(test.targets == 0.0)


def test_windowing_bijection():
    series = synth_series(length=128, seed=3)
    train, test = make_dataset(series, seq_len=6)
    windows = np.concatenate([train.windows, test.windows])
    targets = np.concatenate([train.targets, test.targets])
    for i in range(len(windows) - 1):
        assert targets[i] == windows[i + 1][-1]


def test_normalization_round_trip():
    series = synth_series(length=256, seed=4)
    train, _ = make_dataset(series, seq_len=6)
    lo, hi = train.normalization
    raw = series.values[:100]
    normalized = (raw - lo) / (hi - lo)
    assert np.all(np.abs(train.denormalize(normalized) - raw) < 1e-12)


def test_series_too_short_rejected():
    with pytest.raises(ValueError):
        make_dataset(TimeSeries(np.arange(6, dtype=float)), seq_len=6)


def test_synth_deterministic_per_seed():
    a = synth_series(length=64, seed=1)
    b = synth_series(length=64, seed=1)
    c = synth_series(length=64, seed=2)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_synth_mean_near_fifty():
    series = synth_series(length=8064, seed=1)
    mean = float(series.values.mean())
    assert abs(mean - 50.0) < 1.0
    assert np.isclose(mean, 49.97836207894419, rtol=1e-12)  # pinned reference run


def test_synth_rejects_bad_args():
    with pytest.raises(ValueError):
        synth_series(kind="square", length=64, seed=0)
    with pytest.raises(ValueError):
        synth_series(length=10, seed=0)


@given(st.integers(8, 200), st.integers(1, 6))
def test_window_count_formula(length, seq_len):
    if length <= seq_len + 1:
        return
    series = TimeSeries(np.arange(length, dtype=float))
    train, test = make_dataset(series, seq_len=seq_len)
    assert len(train) + len(test) == length - seq_len
    assert len(train) == int(np.floor(0.75 * (length - seq_len)))
