"""Full-precision vanilla LSTM reference model.

One LSTM cell unrolled over the input sequence, followed by a dense layer on
the last hidden state.  Per step, with z = [h_{t-1} | x_t] (hidden part
first, then input part — this column order is fixed project-wide):

    f = sigmoid(W_f z + b_f)        forget gate
    i = sigmoid(W_i z + b_i)        input gate
    g = tanh   (W_g z + b_g)        candidate cell value
    o = sigmoid(W_o z + b_o)        output gate
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

All math is float64; this is the ground truth that quantized inference
approximates.
"""

from dataclasses import dataclass, fields

import numpy as np

GATE_ORDER = ("f", "i", "g", "o")


@dataclass(frozen=True)
class ModelConfig:
    input_size: int
    hidden_size: int
    seq_len: int
    out_features: int

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} must be >= 1")


@dataclass
class LstmParams:
    """Weights and biases of the cell plus the dense head.

    Gate matrices have shape (hidden_size, hidden_size + input_size) with
    columns ordered [hidden | input]; dense_w is (out_features, hidden_size).
    """

    w_f: np.ndarray
    w_i: np.ndarray
    w_g: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_g: np.ndarray
    b_o: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            arr = np.asarray(getattr(self, f.name), dtype=np.float64)
            object.__setattr__(self, f.name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {f.name}")
        n_h = self.w_f.shape[0]
        n_cols = self.w_f.shape[1]
        for name in ("w_i", "w_g", "w_o"):
            if getattr(self, name).shape != (n_h, n_cols):
                raise ValueError(f"{name} shape mismatch")
        for name in ("b_f", "b_i", "b_g", "b_o"):
            if getattr(self, name).shape != (n_h,):
                raise ValueError(f"{name} shape mismatch")
        if self.dense_w.shape[1] != n_h or self.dense_b.shape != (self.dense_w.shape[0],):
            raise ValueError("dense layer shape mismatch")

    @property
    def hidden_size(self):
        return self.w_f.shape[0]

    @property
    def input_size(self):
        return self.w_f.shape[1] - self.w_f.shape[0]

    @property
    def out_features(self):
        return self.dense_w.shape[0]

    def gate_weights(self):
        """Gate tensors stacked in (f, i, g, o) order."""
        return (
            np.stack([self.w_f, self.w_i, self.w_g, self.w_o]),
            np.stack([self.b_f, self.b_i, self.b_g, self.b_o]),
        )

    def tensors(self):
        """(name, array) pairs in canonical emission order."""
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size):
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


def sigmoid(z):
    """Stable logistic function; exp never sees a positive argument."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cell_step(params, state, x_t):
    """One recurrence step; returns the new CellState."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != (params.input_size,):
        raise ValueError(
            f"input length {x_t.shape} does not match input_size {params.input_size}"
        )
    z = np.concatenate([state.h, x_t])
    f = sigmoid(params.w_f @ z + params.b_f)
    i = sigmoid(params.w_i @ z + params.b_i)
    g = np.tanh(params.w_g @ z + params.b_g)
    o = sigmoid(params.w_o @ z + params.b_o)
    c = f * state.c + i * g
    h = o * np.tanh(c)
    return CellState(h, c)


def forward(params, config, inputs):
    """Unroll the cell over seq_len inputs, then apply the dense layer.

    The initial state is all zeros and only the last hidden state feeds the
    dense layer.
    """
    if params.hidden_size != config.hidden_size or params.input_size != config.input_size:
        raise ValueError("params do not match config")
    if params.out_features != config.out_features:
        raise ValueError("dense head does not match config")
    if len(inputs) != config.seq_len:
        raise ValueError(f"expected {config.seq_len} inputs, got {len(inputs)}")
    state = CellState.zeros(config.hidden_size)
    for x_t in inputs:
        state = cell_step(params, state, np.atleast_1d(np.asarray(x_t, dtype=np.float64)))
    return params.dense_w @ state.h + params.dense_b


def init_params(config, seed):
    """Seeded uniform(-k, k) init with k = 1/sqrt(hidden_size)."""
    rng = np.random.default_rng(seed)
    n_h, n_i, n_o = config.hidden_size, config.input_size, config.out_features
    k = 1.0 / np.sqrt(n_h)

    def u(*shape):
        return rng.uniform(-k, k, shape)

    return LstmParams(
        w_f=u(n_h, n_h + n_i),
        w_i=u(n_h, n_h + n_i),
        w_g=u(n_h, n_h + n_i),
        w_o=u(n_h, n_h + n_i),
        b_f=u(n_h),
        b_i=u(n_h),
        b_g=u(n_h),
        b_o=u(n_h),
        dense_w=u(n_o, n_h),
        dense_b=u(n_o),
    )
