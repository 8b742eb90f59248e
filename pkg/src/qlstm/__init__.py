"""Fixed-point LSTM forecaster toolchain.

Train a small float LSTM on a time series, quantize it to Q(x, y) fixed
point with lookup-table activations, simulate the parallel FPGA datapath
bit-exactly and cycle-accurately, reproduce the analytic timing/throughput/
energy model, and emit hardware-initialization ROM files.
"""

from .fxp import FxpFormat, FxpWord, fxp_add, fxp_mul, mac_accumulate, mac_finalize, quantize
from .model import CellState, LstmParams, ModelConfig, cell_step, forward, init_params
from .data import TimeSeries, WindowedDataset, ingest_csv, make_dataset, synth_series
from .train import TrainConfig, grad_bptt, loss_mse, train
from .quantize import (
    ActivationLut,
    FxpTensor,
    QuantizedModel,
    build_lut,
    lut_lookup,
    q_forward,
    quantize_model,
    sweep_frac_bits,
    sweep_lut_depth,
)
from .datapath import CycleTrace, DatapathConfig, cross_check, phase_breakdown, simulate
from .perf import ClockConfig, PerfReport, ResourceEstimate, cycles, efficiency, latency_throughput, op_count, resources
from .emit import Manifest, emit_all, emit_rom, load_manifest

__version__ = "0.1.0"
