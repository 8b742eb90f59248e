"""Datapath simulator: cycle model vs analytic, bit-exact functional twin."""

import numpy as np
import pytest

from qlstm.datapath import (
    CrossCheckError,
    DatapathConfig,
    cross_check,
    phase_breakdown,
    simulate,
)
from qlstm.fxp import FxpFormat
from qlstm.model import ModelConfig
from qlstm.perf import cycles
from qlstm.quantize import q_forward, quantize_array, random_quantized_model

Q8_16 = FxpFormat(8, 16)
PAPER = ModelConfig(1, 20, 6, 1)


def random_inputs(config, fmt, seed, lo=-1.0, hi=1.0):
    rng = np.random.default_rng(seed)
    return quantize_array(rng.uniform(lo, hi, (config.seq_len, config.input_size)), fmt)


def test_config_validation():
    with pytest.raises(ValueError):
        DatapathConfig(PAPER, schedule="diagonal")
    with pytest.raises(ValueError):
        DatapathConfig(PAPER, schedule="parallel", gate_alu_count=2)
    with pytest.raises(ValueError):
        DatapathConfig(PAPER, schedule="sequential", gate_alu_count=4)
    with pytest.raises(ValueError):
        DatapathConfig(PAPER, alu_latency_cycles=0)
    assert DatapathConfig(PAPER, schedule="sequential").gate_alu_count == 1


def test_model_mismatch_rejected():
    qm = random_quantized_model(PAPER, Q8_16, seed=0)
    dpc = DatapathConfig(ModelConfig(1, 8, 6, 1))
    with pytest.raises(ValueError):
        simulate(qm, random_inputs(PAPER, Q8_16, 1), dpc)


def test_parallel_recursion_cycles_paper_config():
    qm = random_quantized_model(PAPER, Q8_16, seed=1)
    _, trace = simulate(qm, random_inputs(PAPER, Q8_16, 2), DatapathConfig(PAPER))
    # steady-state band around the published 860 cycles per recursion
    for rec in trace.per_recursion:
        assert 860 <= rec <= 900
    lstm_cycles = sum(trace.per_recursion)
    assert abs(lstm_cycles - 5292) / 5292 <= 0.05
    assert abs(trace.total_cycles - cycles(PAPER).n_total) / cycles(PAPER).n_total <= 0.05


def test_parallel_matches_analytic_across_hidden_sizes():
    for n_h in (3, 8, 12, 20, 32, 64):
        config = ModelConfig(1, n_h, 6, 1)
        qm = random_quantized_model(config, Q8_16, seed=n_h)
        _, trace = simulate(qm, random_inputs(config, Q8_16, n_h + 1), DatapathConfig(config))
        analytic = cycles(config).n_total
        assert abs(trace.total_cycles - analytic) / analytic <= 0.05, n_h


def test_sequential_to_parallel_ratio():
    qm = random_quantized_model(PAPER, Q8_16, seed=3)
    inputs = random_inputs(PAPER, Q8_16, 4)
    _, par = simulate(qm, inputs, DatapathConfig(PAPER, schedule="parallel"))
    _, seq = simulate(qm, inputs, DatapathConfig(PAPER, schedule="sequential"))
    assert seq.total_cycles / par.total_cycles >= 4.0


def test_parallel_never_slower_than_sequential():
    for n_h, n_i, seq_len in [(3, 1, 2), (5, 2, 4), (20, 1, 6), (32, 3, 3)]:
        config = ModelConfig(n_i, n_h, seq_len, 1)
        qm = random_quantized_model(config, Q8_16, seed=n_h + n_i)
        inputs = random_inputs(config, Q8_16, 9)
        _, par = simulate(qm, inputs, DatapathConfig(config, schedule="parallel"))
        _, seq = simulate(qm, inputs, DatapathConfig(config, schedule="sequential"))
        assert par.total_cycles <= seq.total_cycles


def test_steady_state_recursion_cycles():
    for schedule in ("parallel", "sequential"):
        config = ModelConfig(1, 7, 5, 1)
        qm = random_quantized_model(config, Q8_16, seed=11)
        _, trace = simulate(qm, random_inputs(config, Q8_16, 12), DatapathConfig(config, schedule=schedule))
        assert len(set(trace.per_recursion[1:])) == 1


def test_tiny_config_outputs_and_lower_bound():
    config = ModelConfig(1, 1, 1, 1)
    qm = random_quantized_model(config, Q8_16, seed=13)
    inputs = random_inputs(config, Q8_16, 14)
    outputs, trace = simulate(qm, inputs, DatapathConfig(config))
    assert np.array_equal(outputs.raw, np.atleast_1d(q_forward(qm, inputs).raw))
    assert trace.total_cycles >= (1 + 1) * 2


def test_functional_equivalence_both_schedules():
    rng_models = 12
    for seed in range(rng_models):
        config = ModelConfig(1, 6, 4, 2)
        qm = random_quantized_model(config, Q8_16, seed=seed, weight_scale=1.0)
        inputs = random_inputs(config, Q8_16, 100 + seed, lo=-2.0, hi=2.0)
        expected = np.atleast_1d(q_forward(qm, inputs).raw)
        for schedule in ("parallel", "sequential"):
            outputs, _ = simulate(qm, inputs, DatapathConfig(config, schedule=schedule))
            assert np.array_equal(outputs.raw, expected), (seed, schedule)


def test_sequential_phase_breakdown_paper_config():
    qm = random_quantized_model(PAPER, Q8_16, seed=5)
    _, trace = simulate(qm, random_inputs(PAPER, Q8_16, 6), DatapathConfig(PAPER, schedule="sequential"))
    frac = phase_breakdown(trace)
    assert abs(frac["gate-matvec"] - 0.971) <= 0.02
    assert abs(frac["dense"] - 0.006) <= 0.004
    assert abs(sum(frac.values()) - 1.0) <= 1e-9


def test_parallel_phase_breakdown_gate_dominates():
    qm = random_quantized_model(PAPER, Q8_16, seed=7)
    _, trace = simulate(qm, random_inputs(PAPER, Q8_16, 8), DatapathConfig(PAPER))
    frac = phase_breakdown(trace)
    assert frac["gate-matvec"] > 0.9
    assert abs(sum(frac.values()) - 1.0) <= 1e-9


def test_phase_breakdown_degenerate_model_sums_to_one():
    config = ModelConfig(1, 1, 1, 1)
    qm = random_quantized_model(config, Q8_16, seed=9)
    _, trace = simulate(qm, random_inputs(config, Q8_16, 10), DatapathConfig(config))
    frac = phase_breakdown(trace)
    assert abs(sum(frac.values()) - 1.0) <= 1e-9


def test_unit_busy_within_wall_clock():
    for schedule in ("parallel", "sequential"):
        qm = random_quantized_model(PAPER, Q8_16, seed=15)
        _, trace = simulate(qm, random_inputs(PAPER, Q8_16, 16), DatapathConfig(PAPER, schedule=schedule))
        for unit, busy in trace.unit_busy.items():
            assert 0 <= busy <= trace.total_cycles, unit


def test_single_elementwise_dsp_stretches_small_models():
    # with one DSP the c products serialize; the cadence no longer hides the
    # tail at n_h = 3, so the recursion stretches past the analytic count
    config = ModelConfig(1, 3, 6, 1)
    qm = random_quantized_model(config, Q8_16, seed=17)
    inputs = random_inputs(config, Q8_16, 18)
    _, three = simulate(qm, inputs, DatapathConfig(config, alu5_dsp_count=3))
    _, one = simulate(qm, inputs, DatapathConfig(config, alu5_dsp_count=1))
    assert one.total_cycles > three.total_cycles
    assert three.total_cycles == cycles(config).n_total + 2 * config.hidden_size


def test_trace_json_stable():
    qm = random_quantized_model(PAPER, Q8_16, seed=19)
    inputs = random_inputs(PAPER, Q8_16, 20)
    _, t1 = simulate(qm, inputs, DatapathConfig(PAPER))
    _, t2 = simulate(qm, inputs, DatapathConfig(PAPER))
    assert t1.to_json() == t2.to_json()
    assert '"schedule"' in t1.to_json()


def test_cross_check_clean_model():
    qm = random_quantized_model(PAPER, Q8_16, seed=21)
    report = cross_check(qm, random_inputs(PAPER, Q8_16, 22), DatapathConfig(PAPER))
    assert report.outputs_equal
    assert report.cycle_deviation <= 0.05


def test_cross_check_detects_corrupted_lut():
    import dataclasses

    from qlstm.model import LstmParams
    from qlstm.quantize import quantize_model

    # zero weights except b_g = 1: every step reads sigmoid entry 128
    # (pre-activation 0 for f/i/o), and i scales g so that entry reaches
    # the output
    config = ModelConfig(1, 4, 4, 1)
    z = np.zeros
    params = LstmParams(
        w_f=z((4, 5)), w_i=z((4, 5)), w_g=z((4, 5)), w_o=z((4, 5)),
        b_f=z(4), b_i=z(4), b_g=np.ones(4), b_o=z(4),
        dense_w=np.ones((1, 4)), dense_b=z(1),
    )
    qm = quantize_model(params, config, Q8_16)
    entries = qm.sigmoid_lut.entries.copy()
    entries[128] += 9  # corrupt one ROM word
    corrupted = dataclasses.replace(
        qm, sigmoid_lut=dataclasses.replace(qm.sigmoid_lut, entries=entries)
    )
    inputs = random_inputs(config, Q8_16, 24)
    with pytest.raises(CrossCheckError, match="element 0"):
        cross_check(corrupted, inputs, DatapathConfig(config), functional_model=qm)
    # pristine model passes the same harness
    assert cross_check(qm, inputs, DatapathConfig(config)).outputs_equal
