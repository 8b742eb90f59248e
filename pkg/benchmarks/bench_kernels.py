#!/usr/bin/env python3
"""Benchmark the compiled quantized-inference kernel against the numpy lane.

Both lanes compute exact integer fixed-point arithmetic, so outputs must be
bit-identical; this script re-verifies that while timing them.

Usage:
    python3 benchmarks/bench_kernels.py [--windows 512] [--repeats 5]
"""

import argparse
import time

import numpy as np

from qlstm import _kernels_py, kernels
from qlstm.fxp import FxpFormat
from qlstm.model import ModelConfig
from qlstm.quantize import quantize_array, random_quantized_model


def kernel_args(qm, n_windows, seed):
    rng = np.random.default_rng(seed)
    raw = quantize_array(rng.uniform(-1, 1, (n_windows, qm.config.seq_len, qm.config.input_size)), qm.format).raw
    w, b = qm.gate_stacks()
    sig_lo, sig_span = qm.sigmoid_lut.scaled_bounds()
    tanh_lo, tanh_span = qm.tanh_lut.scaled_bounds()
    return (
        w, b, qm.dense_w.raw, qm.dense_b.raw,
        qm.sigmoid_lut.entries, qm.tanh_lut.entries,
        sig_lo, sig_span, tanh_lo, tanh_span,
        raw, qm.format.frac_bits, qm.format.total_bits,
    )


def time_lane(func, args, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = func(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--windows", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    config = ModelConfig(1, 20, 6, 1)
    qm = random_quantized_model(config, FxpFormat(8, 16), seed=1)
    kargs = kernel_args(qm, args.windows, seed=2)

    print(f"model (1, 20, 6, 1), Q(8,16), depth 256; {args.windows} windows, "
          f"best of {args.repeats}")
    lanes = [("numpy fallback", _kernels_py.forward_lut_raw)]
    if kernels.HAVE_COMPILED:
        from qlstm import _kernels

        lanes.append(("compiled (cython)", _kernels.forward_lut_raw))
    else:
        print("compiled kernel not built; only the numpy lane is available")

    results = {}
    for name, func in lanes:
        seconds, out = time_lane(func, kargs, args.repeats)
        results[name] = (seconds, out)
        rate = args.windows / seconds
        print(f"  {name:<18} {seconds * 1e3:8.2f} ms   {rate:10.0f} inferences/s")

    if len(results) == 2:
        numpy_out = results["numpy fallback"][1]
        compiled_out = results["compiled (cython)"][1]
        assert np.array_equal(numpy_out, compiled_out), "lane outputs differ"
        speedup = results["numpy fallback"][0] / results["compiled (cython)"][0]
        print(f"  bit-identical outputs; compiled speedup {speedup:.1f}x")


if __name__ == "__main__":
    main()
