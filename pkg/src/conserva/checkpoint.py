"""Model checkpoints: a YAML manifest plus little-endian float64 blobs."""

import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import yaml

from .errors import DatasetFormatError
from .neural.mlp import Mlp
from .neural.training import DynamicsModel, PhiModel, Standardizer

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "model.yaml"
DTYPE = "<f8"

Model = Union[DynamicsModel, PhiModel]


def _write_blob(path: Path, filename: str, array: np.ndarray) -> Dict[str, Any]:
    data = np.ascontiguousarray(array, dtype=DTYPE).tobytes()
    (path / filename).write_bytes(data)
    return {"file": filename, "shape": list(np.shape(array)), "sha256": hashlib.sha256(data).hexdigest()}


def _read_blob(path: Path, entry: Dict[str, Any]) -> np.ndarray:
    blob = path / entry["file"]
    if not blob.exists():
        raise DatasetFormatError(f"missing checkpoint blob {blob}")
    data = blob.read_bytes()
    expected = int(np.prod(entry["shape"], dtype=np.int64)) * 8
    if len(data) != expected:
        raise DatasetFormatError(f"truncated checkpoint blob {blob}")
    if hashlib.sha256(data).hexdigest() != entry["sha256"]:
        raise DatasetFormatError(f"checksum mismatch for {blob}")
    return np.frombuffer(data, dtype=DTYPE).reshape(entry["shape"]).copy()


def save_model(model: Model, path: Union[str, Path]) -> Path:
    """Write a dynamics or phi model into directory path"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    kind = "dynamics" if isinstance(model, DynamicsModel) else "phi"
    layers: List[Dict[str, Any]] = []
    for i, (w, b) in enumerate(zip(model.net.weights, model.net.biases)):
        layers.append({
            "weight": _write_blob(path, f"layer{i}.weight.f64", w),
            "bias": _write_blob(path, f"layer{i}.bias.f64", b),
        })
    stats = {
        "input_mean": _write_blob(path, "input_mean.f64", model.inputs.mean),
        "input_std": _write_blob(path, "input_std.f64", model.inputs.std),
    }
    if kind == "dynamics":
        stats["delta_mean"] = _write_blob(path, "delta_mean.f64", model.delta.mean)
        stats["delta_std"] = _write_blob(path, "delta_std.f64", model.delta.std)

    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "sizes": list(model.net.sizes),
        "activation": "tanh",
        "layers": layers,
        "stats": stats,
    }
    with open(path / MANIFEST, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=True)
    log.debug(f"Saved {kind} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> Model:
    path = Path(path)
    manifest_path = path / MANIFEST
    if not manifest_path.exists():
        raise DatasetFormatError(f"no model manifest in {path}")
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = yaml.safe_load(f)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported checkpoint version {manifest.get('format_version')}")

    net = Mlp(
        [_read_blob(path, layer["weight"]) for layer in manifest["layers"]],
        [_read_blob(path, layer["bias"]) for layer in manifest["layers"]],
    ).freeze()
    if list(net.sizes) != list(manifest["sizes"]):
        raise DatasetFormatError(f"layer shapes {net.sizes} do not match manifest sizes {manifest['sizes']}")
    stats = manifest["stats"]
    inputs = Standardizer(_read_blob(path, stats["input_mean"]), _read_blob(path, stats["input_std"]))
    if manifest["kind"] == "dynamics":
        delta = Standardizer(_read_blob(path, stats["delta_mean"]), _read_blob(path, stats["delta_std"]))
        return DynamicsModel(net, inputs, delta)
    return PhiModel(net, inputs)
