"""Kernel lane selection: compiled extension if built, numpy fallback if not.

Both lanes implement exact integer arithmetic, so their outputs are
bit-identical; the compiled lane only changes speed.  `benchmarks/
bench_kernels.py` measures the gap and re-verifies equality.
"""

from . import _kernels_py

try:
    from . import _kernels as _impl

    HAVE_COMPILED = True
except ImportError:
    _impl = _kernels_py
    HAVE_COMPILED = False

# the float-activation sweep path is numpy-only (vectorized transcendentals)
forward_lut_raw = _impl.forward_lut_raw
forward_float_act_raw = _kernels_py.forward_float_act_raw

python_forward_lut_raw = _kernels_py.forward_lut_raw
