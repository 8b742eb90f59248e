"""Command-line entry point: train -> quantize -> sweep -> simulate -> report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation.  QLSTM_SEED serves as the --seed fallback.  All primary outputs
are machine-readable (JSON / CSV) and byte-deterministic for identical
flags; human-readable tables are decoration on stdout.
"""

import argparse
import os
import sys


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _seed(args):
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("QLSTM_SEED", "0"))


def _load_series(args):
    from .data import ingest_csv, synth_series

    if args.data is not None:
        return ingest_csv(args.data)
    return synth_series(length=args.length, seed=_seed(args))


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_train(args):
    from .data import make_dataset
    from .emit import emit_float_model
    from .model import ModelConfig, init_params
    from .train import TrainConfig, train

    seed = _seed(args)
    series = _load_series(args)
    config = ModelConfig(1, args.hidden, args.seq, 1)
    train_ds, test_ds = make_dataset(series, args.seq)
    tc = TrainConfig(epochs=args.epochs, lr=args.lr, seed=seed)
    params, losses = train(init_params(config, seed), config, tc, train_ds)

    os.makedirs(args.out_dir, exist_ok=True)
    emit_float_model(params, config, args.out_dir, normalization=train_ds.normalization)
    curve = "epoch,loss\n" + "".join(
        f"{epoch},{loss:.6g}\n" for epoch, loss in enumerate(losses, start=1)
    )
    _write(os.path.join(args.out_dir, "loss_curve.csv"), curve)
    print(f"trained {args.epochs} epochs on {len(train_ds)} windows "
          f"({len(test_ds)} held out); final loss {losses[-1]:.6g}")
    print(f"model manifest: {os.path.join(args.out_dir, 'manifest.json')}")
    return 0


def cmd_quantize(args):
    from .emit import emit_all, load_float_model
    from .fxp import FxpFormat
    from .quantize import quantize_model

    params, config, normalization = load_float_model(args.model)
    fmt = FxpFormat(args.frac, args.total)
    qm = quantize_model(params, config, fmt, lut_depth=args.lut_depth)
    os.makedirs(args.out_dir, exist_ok=True)
    emit_all(qm, args.out_dir, normalization=normalization)
    worst = max(qm.quant_errors.items(), key=lambda kv: kv[1])
    print(f"quantized to {fmt}, LUT depth {args.lut_depth}; "
          f"max quantization error {worst[1]:.3g} ({worst[0]})")
    print(f"ROMs + manifest: {args.out_dir}")
    return 0


def cmd_sweep(args):
    from .data import make_dataset
    from .emit import load_float_model
    from .quantize import quantize_model, sweep_csv, sweep_frac_bits, sweep_lut_depth
    from .fxp import FxpFormat

    params, config, _ = load_float_model(args.model)
    series = _load_series(args)
    _, test_ds = make_dataset(series, config.seq_len)
    if args.mode == "frac":
        rows = sweep_frac_bits(params, config, test_ds,
                               range(args.frac_min, args.frac_max + 1), args.int_bits)
        text = sweep_csv(rows, "x,mse")
    else:
        depths = tuple(int(d) for d in args.depths.split(","))
        fmt = FxpFormat(args.frac, args.total)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            qm = quantize_model(params, config, fmt, lut_depth=depths[0])
        rows = sweep_lut_depth(qm, depths, test_ds)
        text = sweep_csv(rows, "depth,mse")
    if args.out is not None:
        _write(args.out, text)
        print(f"sweep table: {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args):
    from .data import ingest_csv
    from .datapath import DatapathConfig, simulate
    from .emit import load_manifest, read_manifest
    from .quantize import quantize_array

    qm = load_manifest(args.model)
    manifest = read_manifest(args.model)
    series = ingest_csv(args.inputs)
    seq = qm.config.seq_len
    n_windows = len(series) // seq
    if n_windows < 1:
        raise ValueError(f"need at least {seq} input values, got {len(series)}")

    values = series.values[: n_windows * seq].reshape(n_windows, seq, 1)
    if manifest.normalization is not None:
        lo, hi = manifest.normalization
        values = (values - lo) / (hi - lo)
    dpc = DatapathConfig(qm.config, schedule=args.schedule)

    lines = ["window,prediction"]
    trace = None
    for k in range(n_windows):
        window = quantize_array(values[k], qm.format)
        outputs, trace = simulate(qm, window, dpc)
        pred = outputs.values()
        if manifest.normalization is not None:
            lo, hi = manifest.normalization
            pred = pred * (hi - lo) + lo
        lines.append(f"{k},{float(pred[0]):.6g}")

    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "predictions.csv"), "\n".join(lines) + "\n")
    _write(os.path.join(args.out_dir, "trace.json"), trace.to_json())
    print(f"{n_windows} windows simulated on the {args.schedule} schedule; "
          f"{trace.total_cycles} cycles per inference")
    from .datapath import phase_breakdown

    fractions = phase_breakdown(trace)
    print(f"{'phase':<12} {'cycles':>8} {'share':>7}")
    for phase, cyc in trace.phase_cycles.items():
        print(f"{phase:<12} {cyc:>8} {fractions[phase]:>6.1%}")
    print(f"outputs: {args.out_dir}/predictions.csv, {args.out_dir}/trace.json")
    return 0


def cmd_report(args):
    from .emit import read_manifest
    from .model import ModelConfig
    from .perf import ClockConfig, build_report, comparison_table, resources

    if args.model is not None:
        manifest = read_manifest(args.model)
        config = manifest.config
        lut_depth = manifest.lut_depth or args.lut_depth
    else:
        config = ModelConfig(args.input, args.hidden, args.seq, args.out_features)
        lut_depth = args.lut_depth
    clock = ClockConfig(args.clock_mhz * 1e6)
    measured_s = None if args.measured_us is None else args.measured_us * 1e-6
    report = build_report(config, clock, power_mw=args.power_mw, measured_s=measured_s)
    est = resources(config, lut_depth=lut_depth)
    sys.stdout.write(report.to_json())
    sys.stdout.write("\n" + comparison_table(report, est))
    return 0


def build_parser():
    parser = _Parser(prog="qlstm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (default: QLSTM_SEED env var, else 0)")

    def add_data_source(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--data", help="CSV time series, one value per line")
        src.add_argument("--synthetic", action="store_true",
                         help="use the seeded synthetic sine+noise series")
        p.add_argument("--length", type=_positive_int, default=8064,
                       help="synthetic series length (default 8064)")

    p = sub.add_parser("train", help="train the float LSTM forecaster")
    add_data_source(p)
    p.add_argument("--hidden", type=_positive_int, default=20, help="hidden size (default 20)")
    p.add_argument("--seq", type=_positive_int, default=6, help="input window length (default 6)")
    p.add_argument("--epochs", type=_positive_int, default=30, help="training epochs (default 30)")
    p.add_argument("--lr", type=_positive_float, default=0.01, help="initial learning rate")
    add_seed(p)
    p.add_argument("--out-dir", default="qlstm_model", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("quantize", help="quantize a trained model and emit ROMs")
    p.add_argument("--model", required=True, help="float-model manifest.json from train")
    p.add_argument("--frac", type=_positive_int, default=8, help="fractional bits x (default 8)")
    p.add_argument("--total", type=_positive_int, default=16, help="total bits y (default 16)")
    p.add_argument("--lut-depth", type=_positive_int, default=256, help="LUT depth (default 256)")
    p.add_argument("--out-dir", default="qlstm_quantized", help="output directory")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("sweep", help="accuracy sweeps over word width or LUT depth")
    p.add_argument("--mode", choices=("frac", "lutdepth"), required=True,
                   help="sweep fractional bits or LUT depth")
    p.add_argument("--model", required=True, help="float-model manifest.json")
    add_data_source(p)
    p.add_argument("--frac-min", type=_positive_int, default=4, help="first fractional width")
    p.add_argument("--frac-max", type=_positive_int, default=12, help="last fractional width")
    p.add_argument("--int-bits", type=_positive_int, default=8,
                   help="integer bits (incl. sign) per frac sweep point")
    p.add_argument("--frac", type=_positive_int, default=8, help="frac bits for lutdepth mode")
    p.add_argument("--total", type=_positive_int, default=16, help="total bits for lutdepth mode")
    p.add_argument("--depths", default="64,128,256,512", help="comma-separated LUT depths")
    add_seed(p)
    p.add_argument("--out", default=None, help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="cycle-accurate datapath simulation")
    p.add_argument("--model", required=True, help="quantized-model manifest.json")
    p.add_argument("--schedule", choices=("parallel", "sequential"), default="parallel")
    p.add_argument("--inputs", required=True, help="CSV of input values (chunked into windows)")
    p.add_argument("--out-dir", default="qlstm_sim", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="analytic timing/throughput/energy report")
    p.add_argument("--model", default=None, help="manifest.json (either kind) for the config")
    p.add_argument("--hidden", type=_positive_int, default=20, help="hidden size")
    p.add_argument("--seq", type=_positive_int, default=6, help="sequence length")
    p.add_argument("--input", type=_positive_int, default=1, help="input features per step")
    p.add_argument("--out-features", type=_positive_int, default=1, help="dense outputs")
    p.add_argument("--clock-mhz", type=_positive_float, default=100.0, help="reference clock")
    p.add_argument("--power-mw", type=_positive_float, default=71.0, help="total power draw")
    p.add_argument("--measured-us", type=_positive_float, default=None,
                   help="use a measured inference time for throughput/energy")
    p.add_argument("--lut-depth", type=_positive_int, default=256)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    from .emit import ManifestError
    from .train import TrainingDiverged

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, ManifestError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # invariant violations and everything unexpected
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
