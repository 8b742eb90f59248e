"""Hardware-initialization artifacts: ROM files plus a model manifest.

Quantized tensors and LUTs are written one word per line as uppercase
two's-complement hex with exactly ceil(y/4) digits and LF endings, matrices
row-major with columns ordered [hidden | input] -- the memory-init format
ROM generators consume directly.  Float models (the training output that the
quantizer consumes) use the same layout with one C99 hex-float per line,
which round-trips float64 exactly.

manifest.json records the model config, number format, LUT geometry, and
every emitted file with its role, shape, and SHA-256.  Emission is a pure
function of the model: rerunning it produces byte-identical files.  The
creation timestamp is quarantined in a separate created.txt precisely so it
cannot perturb hashes or byte-level determinism.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .fxp import FxpFormat, hex_to_raw, raw_to_hex
from .model import LstmParams, ModelConfig
from .quantize import ActivationLut, FxpTensor, QuantizedModel

MANIFEST_NAME = "manifest.json"
TIMESTAMP_NAME = "created.txt"

TENSOR_ROLES = ("w_f", "b_f", "w_i", "b_i", "w_g", "b_g", "w_o", "b_o", "dense_w", "dense_b")
LUT_ROLES = ("sigmoid_lut", "tanh_lut")


class ManifestError(ValueError):
    pass


@dataclass
class Manifest:
    kind: str  # "quantized" or "float"
    config: ModelConfig
    format: FxpFormat | None
    lut_depth: int | None
    lut_range: tuple[float, float] | None
    files: list[dict]
    normalization: tuple[float, float] | None = None
    created: str | None = None
    tool: dict = field(default_factory=lambda: {"name": "qlstm", "version": "0.1.0"})

    def as_dict(self):
        data = {
            "config": {
                "input_size": self.config.input_size,
                "hidden_size": self.config.hidden_size,
                "seq_len": self.config.seq_len,
                "out_features": self.config.out_features,
            },
            "files": self.files,
            "format": None
            if self.format is None
            else {"frac_bits": self.format.frac_bits, "total_bits": self.format.total_bits},
            "kind": self.kind,
            "layout": {"column_order": "hidden_then_input", "matrix_order": "row_major"},
            "luts": None
            if self.lut_depth is None
            else {
                "depth": self.lut_depth,
                "input_lo": self.lut_range[0],
                "input_hi": self.lut_range[1],
            },
            "normalization": None
            if self.normalization is None
            else {"min": self.normalization[0], "max": self.normalization[1]},
            "tool": self.tool,
        }
        return data

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def rom_lines(tensor: FxpTensor):
    flat = tensor.raw.reshape(-1)
    return [raw_to_hex(int(raw), tensor.format) for raw in flat]


def emit_rom(tensor: FxpTensor, path):
    """Write one tensor as a hex-per-line ROM file; returns its SHA-256."""
    if tensor.format.total_bits > 32:
        raise ValueError("ROM emission supports word widths up to 32 bits")
    data = ("\n".join(rom_lines(tensor)) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(data)
    return _sha256(data)


def _float_lines(arr):
    return [float(v).hex() for v in np.asarray(arr, dtype=np.float64).reshape(-1)]


def _emit_files(out_dir, named_payloads):
    """Write payloads, removing everything already written if any write fails."""
    written = []
    try:
        for name, data in named_payloads:
            path = os.path.join(out_dir, name)
            with open(path, "wb") as fh:
                fh.write(data)
            written.append(path)
    except OSError:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    return written


def _file_entry(role, name, shape, data):
    return {
        "role": role,
        "path": name,
        "shape": list(shape),
        "sha256": _sha256(data),
    }


def emit_all(qm: QuantizedModel, out_dir, normalization=None):
    """Emit every tensor ROM, both LUT ROMs, and the manifest.

    Output is byte-deterministic; the creation timestamp goes to a separate
    created.txt so reruns hash identically.
    """
    payloads = []
    files = []
    for role in TENSOR_ROLES:
        tensor = qm.tensor(role)
        name = f"{role}.hex"
        data = ("\n".join(rom_lines(tensor)) + "\n").encode("ascii")
        payloads.append((name, data))
        files.append(_file_entry(role, name, tensor.shape, data))
    for role, lut in (("sigmoid_lut", qm.sigmoid_lut), ("tanh_lut", qm.tanh_lut)):
        name = f"{role}.hex"
        tensor = FxpTensor(lut.entries, qm.format)
        data = ("\n".join(rom_lines(tensor)) + "\n").encode("ascii")
        payloads.append((name, data))
        files.append(_file_entry(role, name, (lut.depth,), data))

    manifest = Manifest(
        kind="quantized",
        config=qm.config,
        format=qm.format,
        lut_depth=qm.sigmoid_lut.depth,
        lut_range=(qm.sigmoid_lut.input_lo, qm.sigmoid_lut.input_hi),
        files=files,
        normalization=normalization,
    )
    payloads.append((MANIFEST_NAME, manifest.to_json().encode("ascii")))
    payloads.append((TIMESTAMP_NAME, _timestamp().encode("ascii")))
    _emit_files(out_dir, payloads)
    return manifest


def emit_float_model(params: LstmParams, config: ModelConfig, out_dir, normalization=None):
    """Emit a trained float model in the same manifest format (hex floats)."""
    payloads = []
    files = []
    for role in TENSOR_ROLES:
        arr = getattr(params, role)
        name = f"{role}.fp.txt"
        data = ("\n".join(_float_lines(arr)) + "\n").encode("ascii")
        payloads.append((name, data))
        files.append(_file_entry(role, name, arr.shape, data))
    manifest = Manifest(
        kind="float",
        config=config,
        format=None,
        lut_depth=None,
        lut_range=None,
        files=files,
        normalization=normalization,
    )
    payloads.append((MANIFEST_NAME, manifest.to_json().encode("ascii")))
    payloads.append((TIMESTAMP_NAME, _timestamp().encode("ascii")))
    _emit_files(out_dir, payloads)
    return manifest


def _timestamp():
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    if stamp is not None:
        when = datetime.fromtimestamp(int(stamp), tz=timezone.utc)
    else:
        when = datetime.now(tz=timezone.utc)
    return when.isoformat() + "\n"


def read_manifest(path):
    """Parse manifest.json (and created.txt when present) into a Manifest."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="ascii") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    try:
        config = ModelConfig(**data["config"])
        fmt = None if data["format"] is None else FxpFormat(**data["format"])
        luts = data["luts"]
        norm = data["normalization"]
        manifest = Manifest(
            kind=data["kind"],
            config=config,
            format=fmt,
            lut_depth=None if luts is None else luts["depth"],
            lut_range=None if luts is None else (luts["input_lo"], luts["input_hi"]),
            files=data["files"],
            normalization=None if norm is None else (norm["min"], norm["max"]),
            tool=data.get("tool", {}),
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from None
    created_path = os.path.join(directory, TIMESTAMP_NAME)
    if os.path.exists(created_path):
        with open(created_path, "r", encoding="ascii") as fh:
            manifest.created = fh.read().strip()
    return manifest


def _verified_lines(directory, entry):
    path = os.path.join(directory, entry["path"])
    if not os.path.exists(path):
        raise ManifestError(f"missing file for role {entry['role']!r}: {entry['path']}")
    with open(path, "rb") as fh:
        data = fh.read()
    if _sha256(data) != entry["sha256"]:
        raise ManifestError(f"hash mismatch for {entry['path']} (role {entry['role']!r})")
    return data.decode("ascii").splitlines()


def _load_fxp_tensor(directory, entry, fmt):
    lines = _verified_lines(directory, entry)
    try:
        raw = np.array([hex_to_raw(line, fmt) for line in lines], dtype=np.int64)
    except ValueError as exc:
        raise ManifestError(f"{entry['path']}: {exc}") from None
    shape = tuple(entry["shape"])
    if raw.size != int(np.prod(shape)):
        raise ManifestError(f"{entry['path']}: {raw.size} words, expected shape {shape}")
    return FxpTensor(raw.reshape(shape), fmt)


def load_manifest(path):
    """Reconstruct a QuantizedModel bit-identically from an emitted manifest."""
    manifest = read_manifest(path)
    if manifest.kind != "quantized":
        raise ManifestError(f"expected a quantized-model manifest, got kind {manifest.kind!r}")
    directory = os.path.dirname(os.path.abspath(path))
    by_role = {entry["role"]: entry for entry in manifest.files}
    missing = [r for r in (*TENSOR_ROLES, *LUT_ROLES) if r not in by_role]
    if missing:
        raise ManifestError(f"manifest missing roles: {missing}")

    fmt = manifest.format
    tensors = {role: _load_fxp_tensor(directory, by_role[role], fmt) for role in TENSOR_ROLES}
    luts = {}
    for role, kind in (("sigmoid_lut", "sigmoid"), ("tanh_lut", "tanh")):
        entries = _load_fxp_tensor(directory, by_role[role], fmt).raw
        luts[role] = ActivationLut(
            kind=kind,
            depth=manifest.lut_depth,
            format=fmt,
            input_lo=manifest.lut_range[0],
            input_hi=manifest.lut_range[1],
            entries=entries,
        )
    return QuantizedModel(format=fmt, config=manifest.config, **tensors, **luts)


def load_float_model(path):
    """Load a float-model manifest; returns (params, config, normalization)."""
    manifest = read_manifest(path)
    if manifest.kind != "float":
        raise ManifestError(f"expected a float-model manifest, got kind {manifest.kind!r}")
    directory = os.path.dirname(os.path.abspath(path))
    by_role = {entry["role"]: entry for entry in manifest.files}
    arrays = {}
    for role in TENSOR_ROLES:
        if role not in by_role:
            raise ManifestError(f"manifest missing role {role!r}")
        entry = by_role[role]
        lines = _verified_lines(directory, entry)
        try:
            flat = np.array([float.fromhex(line) for line in lines], dtype=np.float64)
        except ValueError as exc:
            raise ManifestError(f"{entry['path']}: {exc}") from None
        arrays[role] = flat.reshape(tuple(entry["shape"]))
    return LstmParams(**arrays), manifest.config, manifest.normalization
