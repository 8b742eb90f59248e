"""Post-training quantization and the bit-exact functional simulator.

A QuantizedModel carries every tensor as raw two's-complement integers plus
one lookup table per activation kind.  Inference semantics, shared with the
datapath simulator so both produce identical bits:

  * gate pre-activations: exact wide-accumulator MAC over [h | x] with the
    bias added at full precision, then one rounding to Q(x, y)
  * activations: LUT read addressed by truncating the pre-activation
    (left-edge sampling, floor indexing, clamped to the table)
  * cell update: the two products f*c and i*g accumulate exactly, then one
    rounding; hidden update o * tanh(c) rounds per multiplication
  * dense layer: wide-accumulator MAC, one rounding per output

The default LUT input range is [-8, 8): sigmoid is within 3.4e-4 of its
asymptote at +-8 and tanh saturates far earlier; out-of-range inputs clamp
to the edge entries.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .fxp import FxpFormat, FxpWord, quantize
from .model import ModelConfig

LUT_DEPTHS = (64, 128, 256, 512)
LUT_RANGE = (-8.0, 8.0)


@dataclass(frozen=True)
class FxpTensor:
    """An ndarray of raw fixed-point payloads sharing one format."""

    raw: np.ndarray
    format: FxpFormat

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.int64)
        object.__setattr__(self, "raw", raw)
        if raw.size and (raw.min() < self.format.raw_min or raw.max() > self.format.raw_max):
            raise ValueError(f"raw values out of range for {self.format}")

    @property
    def shape(self):
        return self.raw.shape

    def values(self):
        return self.raw.astype(np.float64) / self.format.scale

    def word(self, *idx):
        return FxpWord(int(self.raw[idx]), self.format)


def quantize_array(values, fmt):
    """Quantize a float array to an FxpTensor (vectorized fxp.quantize)."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    scaled = values * fmt.scale
    raw = np.where(scaled >= 0, np.floor(scaled + 0.5), -np.floor(-scaled + 0.5))
    raw = np.clip(raw, float(fmt.raw_min), float(fmt.raw_max)).astype(np.int64)
    return FxpTensor(raw, fmt)


@dataclass(frozen=True)
class ActivationLut:
    """Depth-D table of quantized activation samples over [input_lo, input_hi)."""

    kind: str
    depth: int
    format: FxpFormat
    input_lo: float
    input_hi: float
    entries: np.ndarray  # int64 raw values

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int64)
        object.__setattr__(self, "entries", entries)
        if len(entries) != self.depth:
            raise ValueError(f"LUT holds {len(entries)} entries, depth says {self.depth}")

    @property
    def step(self):
        return (self.input_hi - self.input_lo) / self.depth

    def scaled_bounds(self):
        """(lo, span) in raw input units; exact ints by the dyadic check."""
        scale = self.format.scale
        return round(self.input_lo * scale), round((self.input_hi - self.input_lo) * scale)


_ACTIVATIONS = {
    "sigmoid": lambda v: 1.0 / (1.0 + math.exp(-v)) if v >= 0 else math.exp(v) / (1.0 + math.exp(v)),
    "tanh": math.tanh,
}


def build_lut(kind, depth, fmt, input_range=LUT_RANGE):
    """Left-edge sampled LUT: entry i = quantize(f(lo + i * step))."""
    if kind not in _ACTIVATIONS:
        raise ValueError(f"unknown activation kind {kind!r}")
    if depth not in LUT_DEPTHS:
        raise ValueError(f"LUT depth must be one of {LUT_DEPTHS}, got {depth}")
    lo, hi = float(input_range[0]), float(input_range[1])
    if not lo < hi:
        raise ValueError("LUT input range must satisfy lo < hi")
    for bound in (lo, hi):
        if bound * fmt.scale != round(bound * fmt.scale):
            raise ValueError(
                f"LUT bound {bound} is not aligned to the {fmt} grid; "
                "index arithmetic would not be exact"
            )
    func = _ACTIVATIONS[kind]
    step = (hi - lo) / depth
    entries = np.array(
        [quantize(func(lo + i * step), fmt).raw for i in range(depth)], dtype=np.int64
    )
    if np.any(np.diff(entries) < 0):
        raise ValueError(f"{kind} LUT entries are not monotone")
    return ActivationLut(kind, depth, fmt, lo, hi, entries)


def lut_index(lut, raw):
    """ROM address of a raw input: floor((value - lo)/step), clamped.

    Computed on integers so it equals the hardware truncation of the
    fixed-point input's low bits.
    """
    lo_scaled, span_scaled = lut.scaled_bounds()
    idx = ((int(raw) - lo_scaled) * lut.depth) // span_scaled
    return min(max(idx, 0), lut.depth - 1)


def lut_lookup(lut, word):
    """Read the table entry addressed by a fixed-point word."""
    if word.format != lut.format:
        raise ValueError(f"format mismatch: {word.format} vs LUT {lut.format}")
    return FxpWord(int(lut.entries[lut_index(lut, word.raw)]), lut.format)


@dataclass(frozen=True)
class QuantizedModel:
    """All model tensors quantized to one format, plus both activation LUTs."""

    format: FxpFormat
    config: ModelConfig
    w_f: FxpTensor
    w_i: FxpTensor
    w_g: FxpTensor
    w_o: FxpTensor
    b_f: FxpTensor
    b_i: FxpTensor
    b_g: FxpTensor
    b_o: FxpTensor
    dense_w: FxpTensor
    dense_b: FxpTensor
    sigmoid_lut: ActivationLut
    tanh_lut: ActivationLut

    TENSOR_ROLES = ("w_f", "b_f", "w_i", "b_i", "w_g", "b_g", "w_o", "b_o", "dense_w", "dense_b")

    def __post_init__(self):
        for role in self.TENSOR_ROLES:
            if getattr(self, role).format != self.format:
                raise ValueError(f"tensor {role!r} format differs from model format")
        for lut in (self.sigmoid_lut, self.tanh_lut):
            if lut.format != self.format:
                raise ValueError(f"{lut.kind} LUT format differs from model format")

    def tensor(self, role):
        return getattr(self, role)

    def gate_stacks(self):
        """(w, b) int64 stacks in (f, i, g, o) order for the kernels."""
        w = np.stack([self.w_f.raw, self.w_i.raw, self.w_g.raw, self.w_o.raw])
        b = np.stack([self.b_f.raw, self.b_i.raw, self.b_g.raw, self.b_o.raw])
        return w, b


def quantize_model(params, config, fmt, lut_depth=256, lut_range=LUT_RANGE):
    """Quantize trained float params and build both LUTs.

    Saturating parameters trigger a warning naming the tensor (saturation is
    the documented overflow policy, not an error).  The returned model's
    `quant_errors` maps tensor name to its max absolute quantization error.
    """
    if params.hidden_size != config.hidden_size or params.input_size != config.input_size:
        raise ValueError("params do not match config")
    tensors = {}
    errors = {}
    for name, arr in params.tensors():
        qt = quantize_array(arr, fmt)
        if arr.size and (arr.max() > fmt.max_value or arr.min() < fmt.min_value):
            warnings.warn(f"tensor {name!r} saturates in {fmt}", RuntimeWarning)
        tensors[name] = qt
        errors[name] = float(np.max(np.abs(qt.values() - arr))) if arr.size else 0.0
    model = QuantizedModel(
        format=fmt,
        config=config,
        sigmoid_lut=build_lut("sigmoid", lut_depth, fmt, lut_range),
        tanh_lut=build_lut("tanh", lut_depth, fmt, lut_range),
        **tensors,
    )
    object.__setattr__(model, "quant_errors", errors)
    return model


def _as_raw_windows(qm, inputs):
    """Accept an FxpTensor (or raw int64 array) shaped (seq, n_i) or (N, seq, n_i)."""
    if isinstance(inputs, FxpTensor):
        if inputs.format != qm.format:
            raise ValueError(f"input format {inputs.format} != model format {qm.format}")
        raw = inputs.raw
    else:
        raw = np.asarray(inputs, dtype=np.int64)
    single = raw.ndim == 2
    if single:
        raw = raw[None, :, :]
    if raw.ndim != 3 or raw.shape[1] != qm.config.seq_len or raw.shape[2] != qm.config.input_size:
        raise ValueError(
            f"inputs must be (N, {qm.config.seq_len}, {qm.config.input_size}), got {raw.shape}"
        )
    return raw, single


def q_forward(qm, inputs):
    """Bit-exact quantized forward pass.

    `inputs` is an FxpTensor of shape (seq_len, n_i) for one sequence or
    (N, seq_len, n_i) for a batch; the result keeps the batch shape.
    """
    raw, single = _as_raw_windows(qm, inputs)
    w, b = qm.gate_stacks()
    sig_lo, sig_span = qm.sigmoid_lut.scaled_bounds()
    tanh_lo, tanh_span = qm.tanh_lut.scaled_bounds()
    out = kernels.forward_lut_raw(
        w, b, qm.dense_w.raw, qm.dense_b.raw,
        qm.sigmoid_lut.entries, qm.tanh_lut.entries,
        sig_lo, sig_span, tanh_lo, tanh_span,
        raw, qm.format.frac_bits, qm.format.total_bits,
    )
    return FxpTensor(out[0] if single else out, qm.format)


def q_forward_float_act(qm, inputs):
    """Quantized forward pass with exact sigmoid/tanh (LUT bypassed)."""
    raw, single = _as_raw_windows(qm, inputs)
    w, b = qm.gate_stacks()
    out = kernels.forward_float_act_raw(
        w, b, qm.dense_w.raw, qm.dense_b.raw,
        raw, qm.format.frac_bits, qm.format.total_bits,
    )
    return FxpTensor(out[0] if single else out, qm.format)


# ---------------------------------------------------------------------------
# Accuracy sweeps
# ---------------------------------------------------------------------------

def _dataset_raw_windows(dataset, fmt):
    return quantize_array(dataset.windows[:, :, None], fmt).raw


def _quantized_mse(pred_tensor, targets):
    pred = pred_tensor.values().reshape(-1)
    return float(np.mean((pred - np.asarray(targets, dtype=np.float64)) ** 2))


def sweep_frac_bits(params, config, dataset, frac_bits_range, int_bits=8):
    """Test MSE per fractional width with full-precision activations.

    Each width x is evaluated at Q(x, x + int_bits); the LUTs are bypassed
    so only the word width varies.  Returns [(x, mse), ...].
    """
    rows = []
    for x in frac_bits_range:
        if not 2 <= x <= 16:
            raise ValueError(f"fractional width {x} outside supported range [2, 16]")
        fmt = FxpFormat(x, x + int_bits)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            qm = quantize_model(params, config, fmt)
        pred = q_forward_float_act(qm, _dataset_raw_windows(dataset, fmt))
        rows.append((x, _quantized_mse(pred, dataset.targets)))
    return rows


def sweep_lut_depth(qm, depths, dataset):
    """Test MSE per LUT depth with full fixed-point inference.

    The same depth is used for both activation kinds.  Returns
    [(depth, mse), ...].
    """
    rows = []
    raw = _dataset_raw_windows(dataset, qm.format)
    for depth in depths:
        variant = replace(
            qm,
            sigmoid_lut=build_lut("sigmoid", depth, qm.format, (qm.sigmoid_lut.input_lo, qm.sigmoid_lut.input_hi)),
            tanh_lut=build_lut("tanh", depth, qm.format, (qm.tanh_lut.input_lo, qm.tanh_lut.input_hi)),
        )
        pred = q_forward(variant, raw)
        rows.append((depth, _quantized_mse(pred, dataset.targets)))
    return rows


def sweep_csv(rows, header):
    """Render sweep rows as a CSV table (6 significant digits, LF lines)."""
    lines = [header]
    for key, mse in rows:
        lines.append(f"{key},{mse:.6g}")
    return "\n".join(lines) + "\n"


def random_quantized_model(config, fmt, lut_depth=256, seed=0, weight_scale=0.5):
    """Seeded random quantized model for equivalence harnesses."""
    rng = np.random.default_rng(seed)

    def t(*shape):
        return quantize_array(rng.uniform(-weight_scale, weight_scale, shape), fmt)

    n_h, n_i, n_o = config.hidden_size, config.input_size, config.out_features
    return QuantizedModel(
        format=fmt,
        config=config,
        w_f=t(n_h, n_h + n_i), w_i=t(n_h, n_h + n_i),
        w_g=t(n_h, n_h + n_i), w_o=t(n_h, n_h + n_i),
        b_f=t(n_h), b_i=t(n_h), b_g=t(n_h), b_o=t(n_h),
        dense_w=t(n_o, n_h), dense_b=t(n_o),
        sigmoid_lut=build_lut("sigmoid", lut_depth, fmt),
        tanh_lut=build_lut("tanh", lut_depth, fmt),
    )
