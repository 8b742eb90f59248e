# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-point LSTM inference kernel.

Bit-identical to qlstm._kernels_py.forward_lut_raw: exact integer MACs in a
128-bit accumulator, one round-half-away-from-zero per output word,
saturation to the Q(x, y) range, truncating LUT addressing.
"""

import numpy as np

cimport numpy as cnp

cdef extern from *:
    ctypedef long long int128 "__int128"


cdef inline long long _round_shift(int128 acc, int shift) noexcept:
    cdef int128 half = (<int128> 1) << (shift - 1)
    if acc >= 0:
        return <long long> ((acc + half) >> shift)
    return -(<long long> (((-acc) + half) >> shift))


cdef inline long long _saturate(long long raw, long long raw_min, long long raw_max) noexcept:
    if raw > raw_max:
        return raw_max
    if raw < raw_min:
        return raw_min
    return raw


cdef inline Py_ssize_t _lut_index(long long raw, long long lo_scaled,
                                  long long span_scaled, Py_ssize_t depth) noexcept:
    # floor division: C division truncates toward zero, adjust for negatives
    cdef long long num = (raw - lo_scaled) * <long long> depth
    cdef long long idx = num / span_scaled
    if num % span_scaled != 0 and (num < 0) != (span_scaled < 0):
        idx -= 1
    if idx < 0:
        return 0
    if idx >= depth:
        return depth - 1
    return <Py_ssize_t> idx


def forward_lut_raw(
    object w_in,
    object b_in,
    object dense_w_in,
    object dense_b_in,
    object sig_entries_in,
    object tanh_entries_in,
    long long sig_lo_scaled,
    long long sig_span_scaled,
    long long tanh_lo_scaled,
    long long tanh_span_scaled,
    object x_in,
    int frac_bits,
    int total_bits,
):
    """Quantized LSTM + dense forward pass with LUT activations."""
    cdef const long long[:, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.int64)
    cdef const long long[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.int64)
    cdef const long long[:, ::1] dense_w = np.ascontiguousarray(dense_w_in, dtype=np.int64)
    cdef const long long[::1] dense_b = np.ascontiguousarray(dense_b_in, dtype=np.int64)
    cdef const long long[::1] sig = np.ascontiguousarray(sig_entries_in, dtype=np.int64)
    cdef const long long[::1] tanh = np.ascontiguousarray(tanh_entries_in, dtype=np.int64)
    cdef const long long[:, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.int64)

    cdef Py_ssize_t n_h = w.shape[1]
    cdef Py_ssize_t n_cols = w.shape[2]
    cdef Py_ssize_t n_i = n_cols - n_h
    cdef Py_ssize_t n_samples = x.shape[0]
    cdef Py_ssize_t seq_len = x.shape[1]
    cdef Py_ssize_t n_o = dense_w.shape[0]
    cdef Py_ssize_t sig_depth = sig.shape[0]
    cdef Py_ssize_t tanh_depth = tanh.shape[0]

    cdef long long raw_min = -(<long long> 1 << (total_bits - 1))
    cdef long long raw_max = (<long long> 1 << (total_bits - 1)) - 1

    out_arr = np.empty((n_samples, n_o), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    h_arr = np.zeros(n_h, dtype=np.int64)
    c_arr = np.zeros(n_h, dtype=np.int64)
    gates_arr = np.zeros((4, n_h), dtype=np.int64)
    cdef long long[::1] h = h_arr
    cdef long long[::1] c = c_arr
    cdef long long[:, ::1] gates = gates_arr

    cdef Py_ssize_t s, t, gate, row, col, n
    cdef int128 acc
    cdef long long pre, f, i, g, o, tanh_c

    for s in range(n_samples):
        for n in range(n_h):
            h[n] = 0
            c[n] = 0
        for t in range(seq_len):
            for gate in range(4):
                for row in range(n_h):
                    acc = (<int128> b[gate, row]) << frac_bits
                    for col in range(n_h):
                        acc += <int128> w[gate, row, col] * <int128> h[col]
                    for col in range(n_i):
                        acc += <int128> w[gate, row, n_h + col] * <int128> x[s, t, col]
                    pre = _saturate(_round_shift(acc, frac_bits), raw_min, raw_max)
                    if gate == 2:
                        gates[gate, row] = tanh[_lut_index(pre, tanh_lo_scaled, tanh_span_scaled, tanh_depth)]
                    else:
                        gates[gate, row] = sig[_lut_index(pre, sig_lo_scaled, sig_span_scaled, sig_depth)]
            for row in range(n_h):
                f = gates[0, row]
                i = gates[1, row]
                g = gates[2, row]
                o = gates[3, row]
                acc = <int128> f * <int128> c[row] + <int128> i * <int128> g
                c[row] = _saturate(_round_shift(acc, frac_bits), raw_min, raw_max)
                tanh_c = tanh[_lut_index(c[row], tanh_lo_scaled, tanh_span_scaled, tanh_depth)]
                acc = <int128> o * <int128> tanh_c
                h[row] = _saturate(_round_shift(acc, frac_bits), raw_min, raw_max)
        for row in range(n_o):
            acc = (<int128> dense_b[row]) << frac_bits
            for col in range(n_h):
                acc += <int128> dense_w[row, col] * <int128> h[col]
            out[s, row] = _saturate(_round_shift(acc, frac_bits), raw_min, raw_max)

    return out_arr
