"""Time-series ingestion, windowing, and the synthetic stand-in generator."""

from dataclasses import dataclass

import numpy as np


@dataclass
class TimeSeries:
    values: np.ndarray
    period_seconds: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time series contains non-finite values")

    def __len__(self):
        return len(self.values)


@dataclass
class WindowedDataset:
    """Supervised windows: seq_len consecutive values predicting the next one.

    Windows and targets are stored normalized; `normalization` holds the
    (min, max) fitted on the training portion (None when max == min, in
    which case everything maps to 0.0).
    """

    windows: np.ndarray  # (n, seq_len)
    targets: np.ndarray  # (n,)
    normalization: tuple[float, float] | None

    def __len__(self):
        return len(self.windows)

    def denormalize(self, values):
        if self.normalization is None:
            return np.asarray(values, dtype=np.float64)
        lo, hi = self.normalization
        return np.asarray(values, dtype=np.float64) * (hi - lo) + lo


def ingest_csv(path):
    """Read a one-value-per-line CSV (optional single header line).

    Malformed or non-finite rows raise with the 1-based row number; fewer
    than 8 data rows is rejected as too short to window.
    """
    values = []
    with open(path, "r", encoding="utf-8", newline=None) as fh:
        for row, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                if row == 1:
                    continue  # header line
                raise ValueError(f"{path}: malformed value at row {row}: {text!r}")
            if not np.isfinite(value):
                raise ValueError(f"{path}: non-finite value at row {row}")
            values.append(value)
    if len(values) < 8:
        raise ValueError(f"{path}: need at least 8 data rows, got {len(values)}")
    return TimeSeries(np.array(values))


def _normalize(arr, lo, hi):
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def make_dataset(series, seq_len, split_ratio=0.75):
    """Window a series and split it chronologically into train/test.

    The first floor(split_ratio * count) windows go to the training set
    (3:1 paper split == 0.75).  Min-max normalization to [0, 1] is fitted on
    the training span only and applied to both sets.
    """
    values = series.values
    count = len(values) - seq_len
    if count < 1:
        raise ValueError(
            f"series of length {len(values)} too short for seq_len {seq_len}"
        )
    if not 0.0 < split_ratio < 1.0:
        raise ValueError("split_ratio must be in (0, 1)")

    windows = np.lib.stride_tricks.sliding_window_view(values, seq_len)[:count]
    targets = values[seq_len:]
    n_train = int(np.floor(split_ratio * count))

    # training span = every value a training window or target can see
    train_span = values[: n_train + seq_len]
    lo, hi = float(train_span.min()), float(train_span.max())
    norm = None if hi == lo else (lo, hi)

    def build(sl):
        return WindowedDataset(
            windows=_normalize(windows[sl].copy(), lo, hi),
            targets=_normalize(targets[sl].copy(), lo, hi),
            normalization=norm,
        )

    return build(slice(0, n_train)), build(slice(n_train, count))


def synth_series(kind="sine-noise", length=8064, seed=0):
    """Deterministic synthetic traffic-like series.

    value_t = 50 + 20 sin(2 pi t / 288) + N(0, 2), one simulated sample per
    5 minutes (288 per day).
    """
    if kind != "sine-noise":
        raise ValueError(f"unknown synthetic series kind {kind!r}")
    if length < 64:
        raise ValueError("synthetic series length must be >= 64")
    t = np.arange(length)
    rng = np.random.default_rng(seed)
    values = 50.0 + 20.0 * np.sin(2.0 * np.pi * t / 288.0) + rng.normal(0.0, 2.0, length)
    return TimeSeries(values, period_seconds=300.0)
