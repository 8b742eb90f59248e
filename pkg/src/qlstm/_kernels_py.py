"""Pure-Python (numpy) fixed-point LSTM inference kernels.

Fallback twin of the compiled qlstm._kernels extension: identical raw-integer
semantics, vectorized over the batch dimension.  All arithmetic is exact:
the int64 fast path is used only when the widest accumulator provably fits
(2*(y-1) + log2(terms) <= 62 bits), otherwise the same code runs on
object-dtype arrays of Python ints.

Array conventions (shared with the compiled kernel):

  w        int64 (4, n_h, n_h + n_i)   gate weights, order f, i, g, o,
                                       columns [hidden | input]
  b        int64 (4, n_h)              gate biases
  dense_w  int64 (n_o, n_h)            dense weights
  dense_b  int64 (n_o,)                dense bias
  entries  int64 (depth,)              LUT contents
  x        int64 (N, seq_len, n_i)     quantized input windows
  returns  int64 (N, n_o)              quantized predictions
"""

import numpy as np


def _int64_safe(total_bits, n_terms):
    # products are < 2^(2y-2); n_terms of them plus the shifted bias must
    # stay below 2^62 to leave int64 headroom
    return 2 * (total_bits - 1) + int(n_terms + 2).bit_length() <= 62


def _round_raw(acc, frac_bits):
    """Round-half-away-from-zero of acc / 2^frac_bits, elementwise exact."""
    half = 1 << (frac_bits - 1)
    mag = np.abs(acc)
    q = (mag + half) >> frac_bits
    return np.where(acc < 0, -q, q)


def _finalize(acc, frac_bits, raw_min, raw_max):
    return np.clip(_round_raw(acc, frac_bits), raw_min, raw_max)


def _lut_index(raw, lo_scaled, span_scaled, depth):
    # floor((value - lo) / step) on raw integers; numpy // floors like Python
    idx = ((raw - lo_scaled) * depth) // span_scaled
    return np.clip(idx, 0, depth - 1).astype(np.intp)


def _quantize_values(values, frac_bits, raw_min, raw_max):
    """Vectorized quantize of real values to saturated raw integers."""
    scaled = np.asarray(values, dtype=np.float64) * (1 << frac_bits)
    raw = np.where(
        scaled >= 0,
        np.floor(scaled + 0.5),
        -np.floor(-scaled + 0.5),
    )
    return np.clip(raw, float(raw_min), float(raw_max)).astype(np.int64)


def _gate_preactivations(hx, w_flat, b_flat, frac_bits, raw_min, raw_max):
    acc = hx @ w_flat.T + (b_flat << frac_bits)
    return _finalize(acc, frac_bits, raw_min, raw_max)


def _cast(arrays, dtype):
    return [np.asarray(a).astype(dtype) for a in arrays]


def forward_lut_raw(
    w,
    b,
    dense_w,
    dense_b,
    sig_entries,
    tanh_entries,
    sig_lo_scaled,
    sig_span_scaled,
    tanh_lo_scaled,
    tanh_span_scaled,
    x,
    frac_bits,
    total_bits,
):
    """Quantized LSTM + dense forward pass with LUT activations."""
    n_h = w.shape[1]
    n_cols = w.shape[2]
    n_i = n_cols - n_h
    raw_min = -(1 << (total_bits - 1))
    raw_max = (1 << (total_bits - 1)) - 1

    dtype = np.int64 if _int64_safe(total_bits, n_cols) else object
    w, b, dense_w, dense_b, sig_entries, tanh_entries, x = _cast(
        [w, b, dense_w, dense_b, sig_entries, tanh_entries, x], dtype
    )

    n_samples, seq_len = x.shape[0], x.shape[1]
    w_flat = w.reshape(4 * n_h, n_cols)
    b_flat = b.reshape(4 * n_h)
    sig_depth = len(sig_entries)
    tanh_depth = len(tanh_entries)

    h = np.zeros((n_samples, n_h), dtype=dtype)
    c = np.zeros((n_samples, n_h), dtype=dtype)
    for t in range(seq_len):
        hx = np.concatenate([h, x[:, t, :]], axis=1)
        pre = _gate_preactivations(hx, w_flat, b_flat, frac_bits, raw_min, raw_max)
        f = sig_entries[_lut_index(pre[:, :n_h], sig_lo_scaled, sig_span_scaled, sig_depth)]
        i = sig_entries[_lut_index(pre[:, n_h : 2 * n_h], sig_lo_scaled, sig_span_scaled, sig_depth)]
        g = tanh_entries[_lut_index(pre[:, 2 * n_h : 3 * n_h], tanh_lo_scaled, tanh_span_scaled, tanh_depth)]
        o = sig_entries[_lut_index(pre[:, 3 * n_h :], sig_lo_scaled, sig_span_scaled, sig_depth)]

        c = _finalize(f * c + i * g, frac_bits, raw_min, raw_max)
        tanh_c = tanh_entries[_lut_index(c, tanh_lo_scaled, tanh_span_scaled, tanh_depth)]
        h = _finalize(o * tanh_c, frac_bits, raw_min, raw_max)

    acc = h @ dense_w.T + (dense_b << frac_bits)
    out = _finalize(acc, frac_bits, raw_min, raw_max)
    return out.astype(np.int64)


def forward_float_act_raw(w, b, dense_w, dense_b, x, frac_bits, total_bits):
    """Quantized forward pass with full-precision activations.

    Gate pre-activations and all products stay in exact fixed point, but
    sigmoid/tanh are evaluated in double on the dequantized value and the
    result is re-quantized.  Used to isolate the effect of the fractional
    width from LUT resolution.
    """
    n_h = w.shape[1]
    n_cols = w.shape[2]
    raw_min = -(1 << (total_bits - 1))
    raw_max = (1 << (total_bits - 1)) - 1
    scale = float(1 << frac_bits)

    dtype = np.int64 if _int64_safe(total_bits, n_cols) else object
    w, b, dense_w, dense_b, x = _cast([w, b, dense_w, dense_b, x], dtype)

    n_samples, seq_len = x.shape[0], x.shape[1]
    w_flat = w.reshape(4 * n_h, n_cols)
    b_flat = b.reshape(4 * n_h)

    def requantize(func, raw):
        values = func(raw.astype(np.float64) / scale)
        return _quantize_values(values, frac_bits, raw_min, raw_max).astype(dtype)

    h = np.zeros((n_samples, n_h), dtype=dtype)
    c = np.zeros((n_samples, n_h), dtype=dtype)
    for t in range(seq_len):
        hx = np.concatenate([h, x[:, t, :]], axis=1)
        pre = _gate_preactivations(hx, w_flat, b_flat, frac_bits, raw_min, raw_max)
        f = requantize(_sigmoid, pre[:, :n_h])
        i = requantize(_sigmoid, pre[:, n_h : 2 * n_h])
        g = requantize(np.tanh, pre[:, 2 * n_h : 3 * n_h])
        o = requantize(_sigmoid, pre[:, 3 * n_h :])

        c = _finalize(f * c + i * g, frac_bits, raw_min, raw_max)
        tanh_c = requantize(np.tanh, c)
        h = _finalize(o * tanh_c, frac_bits, raw_min, raw_max)

    acc = h @ dense_w.T + (dense_b << frac_bits)
    out = _finalize(acc, frac_bits, raw_min, raw_max)
    return out.astype(np.int64)


def _sigmoid(z):
    # numerically stable without scipy; exp only ever sees non-positive args
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
