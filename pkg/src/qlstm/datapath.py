"""Cycle-accurate simulator of the parallel LSTM-cell datapath.

Functional results are bit-identical to quantize.q_forward (same exact
integer arithmetic, evaluated here scalar and in hardware row order); on top
of that an integer-cycle event scheduler tracks when every unit does what.

Cost model
----------
Every matvec engine streams output rows back-to-back; one row costs
row_macs * alu_latency cycles (a MAC produces a result every alu_latency
cycles, non-overlapped), and each matvec pass is followed by one extra
row-time during which the accumulate/round/writeback pipeline and the
trailing activation lookups drain.  That drain slot is why a gate matvec
with n_h rows occupies (n_h + 1) row-times.

parallel schedule
    Four gate ALUs compute the f/i/g/o rows of the same index concurrently.
    When row n completes, its three sigmoid lookups serialize on the shared
    sigmoid unit (fixed priority f -> i -> o) while g uses the tanh unit;
    once all four values are out, the elementwise unit computes
    c[n] = f*c_prev + i*g (two products on separate DSPs, the chained add
    absorbed in the post-adder) and, after a tanh lookup on c[n],
    h[n] = o * tanh(c[n]) -- all overlapped with later rows' MACs.  The
    controller starts the next recursion after the drain slot, or later if
    the h pipeline is still running (only possible below n_h = 3 with the
    default three elementwise DSPs).

sequential schedule
    The pre-optimization baseline: a single ALU runs the four gate matvecs
    one after another (each with its own drain slot covering its lookups),
    then the elementwise chain strictly serially per element (two MACs for
    c, tanh lookup, one MAC for h), then the next recursion.

The dense layer runs on its own single-DSP engine after the last recursion,
as one more matvec pass (n_o rows + drain).

Phase attribution measures wall-clock ownership: overlapped work is charged
to the phase that owns the time slot, so "activation" counts only lookup
cycles nothing else hides (zero in the parallel schedule).
"""

import json
from dataclasses import dataclass

import numpy as np

from .fxp import round_half_away, saturate_raw
from .model import ModelConfig
from .quantize import FxpTensor, lut_index, q_forward
from . import perf

PHASES = ("gate-matvec", "activation", "elementwise", "dense")


@dataclass(frozen=True)
class DatapathConfig:
    model: ModelConfig
    alu_latency_cycles: int = 2
    lut_latency_cycles: int = 1
    gate_alu_count: int | None = None  # resolved from schedule when None
    alu5_dsp_count: int = 3
    schedule: str = "parallel"

    def __post_init__(self):
        if self.schedule not in ("parallel", "sequential"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.alu_latency_cycles < 1 or self.lut_latency_cycles < 1:
            raise ValueError("unit latencies must be >= 1")
        if self.alu5_dsp_count < 1:
            raise ValueError("alu5_dsp_count must be >= 1")
        required = 4 if self.schedule == "parallel" else 1
        if self.gate_alu_count is None:
            object.__setattr__(self, "gate_alu_count", required)
        elif self.gate_alu_count != required:
            raise ValueError(
                f"{self.schedule} schedule requires gate_alu_count == {required}"
            )


@dataclass
class CycleTrace:
    schedule: str
    per_recursion: list[int]
    unit_busy: dict[str, int]
    phase_cycles: dict[str, int]
    total_cycles: int

    def as_dict(self):
        return {
            "schedule": self.schedule,
            "total_cycles": self.total_cycles,
            "per_recursion_cycles": list(self.per_recursion),
            "phase_cycles": dict(self.phase_cycles),
            "unit_busy_cycles": dict(self.unit_busy),
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


class CrossCheckError(AssertionError):
    pass


@dataclass
class CrossCheckReport:
    outputs_equal: bool
    n_outputs: int
    simulated_cycles: int
    analytic_cycles: int | None
    cycle_deviation: float | None


class _Unit:
    """Single-server resource: grants [start, start+duration) slots."""

    def __init__(self):
        self.free = 0
        self.busy = 0

    def grant(self, earliest, duration):
        start = max(earliest, self.free)
        self.free = start + duration
        self.busy += duration
        return start + duration


class _Pool:
    """Fixed set of identical DSPs; each grant picks the earliest-free one."""

    def __init__(self, size):
        self.units = [_Unit() for _ in range(size)]

    def grant(self, earliest, duration):
        unit = min(self.units, key=lambda u: u.free)
        return unit.grant(earliest, duration)

    @property
    def busy(self):
        return [u.busy for u in self.units]


# ---------------------------------------------------------------------------
# Exact scalar fixed-point helpers (independent of the vectorized kernels)
# ---------------------------------------------------------------------------

def _finalize(acc, fmt):
    return saturate_raw(round_half_away(acc, fmt.scale), fmt)


def _row_mac(w_row, z, bias, fmt):
    acc = int(bias) << fmt.frac_bits
    for wv, zv in zip(w_row, z):
        acc += int(wv) * int(zv)
    return _finalize(acc, fmt)


def simulate(qm, inputs, dpc):
    """Run the datapath on one input sequence.

    Returns (outputs, trace): outputs is an FxpTensor bit-identical to
    q_forward(qm, inputs); the trace carries per-recursion cycle counts,
    per-unit busy cycles, and the wall-clock phase split.
    """
    if dpc.model != qm.config:
        raise ValueError("datapath model config does not match the quantized model")
    raw = inputs.raw if isinstance(inputs, FxpTensor) else np.asarray(inputs, dtype=np.int64)
    if isinstance(inputs, FxpTensor) and inputs.format != qm.format:
        raise ValueError("input format does not match the model")
    cfg = qm.config
    if raw.shape != (cfg.seq_len, cfg.input_size):
        raise ValueError(f"inputs must be ({cfg.seq_len}, {cfg.input_size}), got {raw.shape}")

    if dpc.schedule == "parallel":
        return _simulate_parallel(qm, raw, dpc)
    return _simulate_sequential(qm, raw, dpc)


def _gate_tensors(qm):
    return (
        (qm.w_f.raw, qm.b_f.raw, qm.sigmoid_lut),
        (qm.w_i.raw, qm.b_i.raw, qm.sigmoid_lut),
        (qm.w_g.raw, qm.b_g.raw, qm.tanh_lut),
        (qm.w_o.raw, qm.b_o.raw, qm.sigmoid_lut),
    )


def _simulate_parallel(qm, raw, dpc):
    fmt = qm.format
    cfg = qm.config
    n_h, n_i = cfg.hidden_size, cfg.input_size
    alu_lat = dpc.alu_latency_cycles
    lut_lat = dpc.lut_latency_cycles
    row_time = (n_i + n_h) * alu_lat

    sig_unit = _Unit()
    tanh_unit = _Unit()
    elem_pool = _Pool(dpc.alu5_dsp_count)
    gate_busy = 0  # per gate ALU; all four stream identically
    gates = _gate_tensors(qm)

    h = [0] * n_h
    c = [0] * n_h
    per_recursion = []
    phase = dict.fromkeys(PHASES, 0)

    clock = 0
    for t in range(cfg.seq_len):
        rec_start = clock
        z = h + [int(v) for v in raw[t]]
        h_new = [0] * n_h
        c_new = [0] * n_h
        last_h_done = rec_start
        for n in range(n_h):
            row_end = rec_start + (n + 1) * row_time

            # four ALUs finish row n together; lookups fan out
            vals = []
            ready = []
            for w, b, lut in gates:
                pre = _row_mac(w[n], z, b[n], fmt)
                unit = tanh_unit if lut.kind == "tanh" else sig_unit
                done = unit.grant(row_end, lut_lat)
                vals.append(int(lut.entries[lut_index(lut, pre)]))
                ready.append(done)
            f_v, i_v, g_v, o_v = vals
            gates_done = max(ready)

            # c[n]: both products issue once the row's gate values exist
            end_a = elem_pool.grant(gates_done, alu_lat)
            end_b = elem_pool.grant(gates_done, alu_lat)
            c_done = max(end_a, end_b)
            assert c_done - alu_lat >= max(ready[:3])  # schedule legality
            c_new[n] = _finalize(f_v * c[n] + i_v * g_v, fmt)

            tanh_done = tanh_unit.grant(c_done, lut_lat)
            tanh_v = int(qm.tanh_lut.entries[lut_index(qm.tanh_lut, c_new[n])])

            h_done = elem_pool.grant(max(ready[3], tanh_done), alu_lat)
            assert h_done - alu_lat >= ready[3] and h_done - alu_lat >= tanh_done
            h_new[n] = _finalize(o_v * tanh_v, fmt)
            last_h_done = max(last_h_done, h_done)

        gate_busy += n_h * row_time
        cadence_end = rec_start + (n_h + 1) * row_time
        clock = max(cadence_end, last_h_done)
        per_recursion.append(clock - rec_start)
        phase["gate-matvec"] += n_h * row_time
        phase["elementwise"] += (clock - rec_start) - n_h * row_time
        h, c = h_new, c_new

    dense_cycles = (cfg.out_features + 1) * n_h * alu_lat
    outs = []
    for j in range(cfg.out_features):
        acc = int(qm.dense_b.raw[j]) << fmt.frac_bits
        for n in range(n_h):
            acc += int(qm.dense_w.raw[j][n]) * h[n]
        outs.append(_finalize(acc, fmt))
    phase["dense"] += dense_cycles
    total = clock + dense_cycles

    unit_busy = {f"gate_alu_{k}": gate_busy for k in range(4)}
    unit_busy["sigmoid_lut"] = sig_unit.busy
    unit_busy["tanh_lut"] = tanh_unit.busy
    for k, busy in enumerate(elem_pool.busy):
        unit_busy[f"alu5_dsp_{k}"] = busy
    unit_busy["dense_alu"] = cfg.out_features * n_h * alu_lat

    trace = CycleTrace("parallel", per_recursion, unit_busy, phase, total)
    _check_trace(trace)
    return FxpTensor(np.array(outs, dtype=np.int64), fmt), trace


def _simulate_sequential(qm, raw, dpc):
    fmt = qm.format
    cfg = qm.config
    n_h, n_i = cfg.hidden_size, cfg.input_size
    alu_lat = dpc.alu_latency_cycles
    lut_lat = dpc.lut_latency_cycles
    row_time = (n_i + n_h) * alu_lat

    sig_unit = _Unit()
    tanh_unit = _Unit()
    alu_busy = 0  # the one ALU: gate MACs + elementwise MACs
    gates = _gate_tensors(qm)

    h = [0] * n_h
    c = [0] * n_h
    per_recursion = []
    phase = dict.fromkeys(PHASES, 0)

    clock = 0
    for t in range(cfg.seq_len):
        rec_start = clock
        z = h + [int(v) for v in raw[t]]

        # gate matvecs back-to-back, each with a drain slot hiding lookups
        vals = [None] * 4
        cursor = rec_start
        for gi, (w, b, lut) in enumerate(gates):
            unit = tanh_unit if lut.kind == "tanh" else sig_unit
            out = []
            for n in range(n_h):
                row_end = cursor + (n + 1) * row_time
                pre = _row_mac(w[n], z, b[n], fmt)
                done = unit.grant(row_end, lut_lat)
                assert done <= cursor + (n_h + 1) * row_time  # hidden in drain
                out.append(int(lut.entries[lut_index(lut, pre)]))
            vals[gi] = out
            alu_busy += n_h * row_time
            cursor += (n_h + 1) * row_time
        phase["gate-matvec"] += cursor - rec_start
        f_v, i_v, g_v, o_v = vals

        # elementwise strictly serial: 2 MACs (c), tanh lookup, 1 MAC (h)
        h_new = [0] * n_h
        c_new = [0] * n_h
        for n in range(n_h):
            cursor += 2 * alu_lat
            c_new[n] = _finalize(f_v[n] * c[n] + i_v[n] * g_v[n], fmt)
            tanh_done = tanh_unit.grant(cursor, lut_lat)
            cursor = tanh_done
            tanh_v = int(qm.tanh_lut.entries[lut_index(qm.tanh_lut, c_new[n])])
            cursor += alu_lat
            h_new[n] = _finalize(o_v[n] * tanh_v, fmt)
            alu_busy += 3 * alu_lat
        phase["activation"] += n_h * lut_lat
        phase["elementwise"] += n_h * 3 * alu_lat

        clock = cursor
        per_recursion.append(clock - rec_start)
        h, c = h_new, c_new

    dense_cycles = (cfg.out_features + 1) * n_h * alu_lat
    outs = []
    for j in range(cfg.out_features):
        acc = int(qm.dense_b.raw[j]) << fmt.frac_bits
        for n in range(n_h):
            acc += int(qm.dense_w.raw[j][n]) * h[n]
        outs.append(_finalize(acc, fmt))
    phase["dense"] += dense_cycles
    total = clock + dense_cycles

    unit_busy = {
        "alu": alu_busy,
        "sigmoid_lut": sig_unit.busy,
        "tanh_lut": tanh_unit.busy,
        "dense_alu": cfg.out_features * n_h * alu_lat,
    }
    trace = CycleTrace("sequential", per_recursion, unit_busy, phase, total)
    _check_trace(trace)
    return FxpTensor(np.array(outs, dtype=np.int64), fmt), trace


def _check_trace(trace):
    assert sum(trace.per_recursion) + trace.phase_cycles["dense"] == trace.total_cycles
    assert sum(trace.phase_cycles.values()) == trace.total_cycles
    for name, busy in trace.unit_busy.items():
        assert busy <= trace.total_cycles, f"unit {name} busier than wall clock"


def phase_breakdown(trace):
    """Fraction of total cycles per phase; fractions sum to 1."""
    if trace.total_cycles <= 0:
        raise ValueError("empty trace")
    return {name: cyc / trace.total_cycles for name, cyc in trace.phase_cycles.items()}


def cross_check(qm, inputs, dpc, functional_model=None):
    """Two-implementation equivalence: datapath outputs vs q_forward.

    Raises CrossCheckError on the first differing element or (parallel
    schedule) when the simulated total strays more than 5% from the
    analytic cycle model.  `functional_model` substitutes the model given
    to q_forward, which fault-injection tests use to make the two sides
    disagree on purpose.
    """
    outputs, trace = simulate(qm, inputs, dpc)
    reference = q_forward(functional_model if functional_model is not None else qm, inputs)
    sim_raw = outputs.raw
    ref_raw = np.atleast_1d(reference.raw)
    for k, (a, b) in enumerate(zip(sim_raw, ref_raw)):
        if a != b:
            raise CrossCheckError(
                f"functional mismatch at element {k}: simulate raw {int(a)} "
                f"!= q_forward raw {int(b)} ({dpc.schedule} schedule)"
            )

    analytic = deviation = None
    if dpc.schedule == "parallel":
        counts = perf.cycles(dpc.model)
        analytic = counts.n_total
        deviation = abs(trace.total_cycles - analytic) / analytic
        if deviation > 0.05:
            raise CrossCheckError(
                f"cycle deviation {deviation:.3f} exceeds 5%: "
                f"simulated {trace.total_cycles} vs analytic {analytic}"
            )
    return CrossCheckReport(
        outputs_equal=True,
        n_outputs=len(sim_raw),
        simulated_cycles=trace.total_cycles,
        analytic_cycles=analytic,
        cycle_deviation=deviation,
    )
