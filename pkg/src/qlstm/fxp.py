"""Exact two's-complement fixed-point arithmetic in Q(x, y) notation.

A format Q(x, y) has y total bits (sign included) of which x are fractional;
a word with raw payload r represents the real value r / 2^x exactly.

Conventions, fixed project-wide so every simulator layer agrees bit-exactly:

  * rounding: round-half-away-from-zero, applied exactly once per result
  * overflow: saturate to the representable raw range, never wrap
  * multiply-accumulate: products sum exactly in a wide accumulator;
    a single finalize step rounds and saturates to the output format

All functions are pure and operate on Python ints, so intermediates are
arbitrary-precision and never overflow.  Vectorized raw-integer variants of
the hot paths live in qlstm._kernels_py / qlstm._kernels.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class FxpFormat:
    """Q(x, y) format: frac_bits fractional bits out of total_bits."""

    frac_bits: int
    total_bits: int

    def __post_init__(self):
        if not 1 <= self.frac_bits < self.total_bits <= 32:
            raise ValueError(
                f"invalid fixed-point format Q({self.frac_bits}, {self.total_bits}): "
                "need 1 <= frac_bits < total_bits <= 32"
            )

    @property
    def raw_min(self):
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self):
        return (1 << (self.total_bits - 1)) - 1

    @property
    def scale(self):
        return 1 << self.frac_bits

    @property
    def min_value(self):
        return self.raw_min / self.scale

    @property
    def max_value(self):
        return self.raw_max / self.scale

    @property
    def resolution(self):
        return 1.0 / self.scale

    def __str__(self):
        return f"Q({self.frac_bits},{self.total_bits})"


@dataclass(frozen=True)
class FxpWord:
    """One fixed-point word: signed raw payload plus its format."""

    raw: int
    format: FxpFormat

    def __post_init__(self):
        if not self.format.raw_min <= self.raw <= self.format.raw_max:
            raise ValueError(
                f"raw value {self.raw} out of range for {self.format}"
            )

    @property
    def value(self):
        return self.raw / self.format.scale

    def __add__(self, other):
        return fxp_add(self, other)

    def __mul__(self, other):
        return fxp_mul(self, other)


def round_half_away(num, den):
    """Exact round-half-away-from-zero of the rational num/den (den > 0)."""
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((2 * -num + den) // (2 * den))


def saturate_raw(raw, fmt):
    """Clamp a raw integer into fmt's representable range. Idempotent."""
    if raw > fmt.raw_max:
        return fmt.raw_max
    if raw < fmt.raw_min:
        return fmt.raw_min
    return raw


def quantize(value, fmt):
    """Convert a finite real to the nearest representable word.

    Ties round away from zero; out-of-range values saturate.
    """
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite model parameter {value!r}")
    scaled = value * fmt.scale
    if scaled >= 0:
        raw = math.floor(scaled + 0.5)
    else:
        raw = -math.floor(-scaled + 0.5)
    return FxpWord(saturate_raw(raw, fmt), fmt)


def _check_formats(a, b):
    if a.format != b.format:
        raise ValueError(f"format mismatch: {a.format} vs {b.format}")


def fxp_add(a, b):
    """Saturating addition of two words in the same format."""
    _check_formats(a, b)
    return FxpWord(saturate_raw(a.raw + b.raw, a.format), a.format)


def fxp_mul(a, b):
    """Saturating multiplication with one round-half-away-from-zero step.

    The double-width product a.raw * b.raw is divided by 2^x exactly, so
    the result is the correctly rounded representable value.
    """
    _check_formats(a, b)
    raw = round_half_away(a.raw * b.raw, a.format.scale)
    return FxpWord(saturate_raw(raw, a.format), a.format)


def mac_accumulate(acc, a, b):
    """Add the exact product a.raw * b.raw to a wide accumulator.

    The accumulator carries raw units scaled by 2^(2x); no rounding happens
    here.  Python ints make the accumulator as wide as needed (>= 2y +
    log2(n) bits for any supported vector length).
    """
    _check_formats(a, b)
    return acc + a.raw * b.raw


def mac_bias(acc, bias):
    """Add a bias word into a 2^(2x)-scaled accumulator exactly."""
    return acc + (bias.raw << bias.format.frac_bits)


def mac_finalize(acc, fmt):
    """Round the wide accumulator once and saturate to fmt."""
    raw = round_half_away(acc, fmt.scale)
    return FxpWord(saturate_raw(raw, fmt), fmt)


def word_from_value(value, fmt):
    """Alias of quantize for call sites that read better this way."""
    return quantize(value, fmt)


def raw_to_hex(raw, fmt):
    """Uppercase two's-complement hex of a raw value, ceil(y/4) digits."""
    digits = (fmt.total_bits + 3) // 4
    return format(raw & ((1 << fmt.total_bits) - 1), f"0{digits}X")


def hex_to_raw(text, fmt):
    """Parse a two's-complement hex word back to a signed raw integer."""
    unsigned = int(text, 16)
    if unsigned >= (1 << fmt.total_bits):
        raise ValueError(f"hex word {text!r} wider than {fmt}")
    if unsigned & (1 << (fmt.total_bits - 1)):
        return unsigned - (1 << fmt.total_bits)
    return unsigned
