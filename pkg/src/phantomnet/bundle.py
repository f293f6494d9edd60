"""The sealed broadcast-bundle format: the only object that crosses sites.

A bundle is a directory holding a canonical ``metadata.json`` plus one raw
little-endian IEEE-754 blob per named tensor, covered by a whole-bundle
SHA-256 checksum. Serialization is byte-deterministic (save -> load -> save
reproduces identical bytes) and refuses anything tagged as derived from
individual training samples: models and scalar metadata cross the membrane,
data never does.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gan as gan_mod
from . import nn
from .errors import IntegrityError, MembraneError, ParameterError

FORMAT_VERSION = 1
BLOB_DTYPE = "<f8"
_META_NAME = "metadata.json"


@dataclass(frozen=True)
class PerSampleStatistic:
    """Marks a value as computed per training sample.

    The serializer rejects any metadata carrying this tag: per-sample
    statistics are an encoding of the dataset and may not be broadcast.
    """

    value: object


@dataclass
class LoadedBundle:
    classifier: nn.ClassifierModel | None
    gan: gan_mod.GanModel | None
    metadata: dict
    path: Path


def _layer_spec(layer: nn.DenseLayer) -> dict:
    spec = {"in": layer.in_dim, "out": layer.weights.shape[1],
            "activation": layer.activation, "pool_size": layer.pool_size}
    if layer.dropout:
        spec["dropout"] = layer.dropout
        spec["dropout_seed"] = layer.dropout_seed
    if layer.batch_norm:
        spec["batch_norm"] = True
    return spec


_BN_TENSORS = ("bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var")


def _mlp_tensors(prefix: str, mlp: nn.MLP, tensors: dict) -> list[dict]:
    specs = []
    for i, layer in enumerate(mlp.layers):
        specs.append(_layer_spec(layer))
        tensors[f"{prefix}.{i}.w"] = layer.weights
        tensors[f"{prefix}.{i}.b"] = layer.bias
        if layer.batch_norm:
            for name in _BN_TENSORS:
                tensors[f"{prefix}.{i}.{name}"] = getattr(layer, name)
    return specs


def _mlp_from_spec(prefix: str, specs: list[dict], tensors: dict) -> nn.MLP:
    layers = []
    for i, spec in enumerate(specs):
        layer = nn.DenseLayer(tensors[f"{prefix}.{i}.w"],
                              tensors[f"{prefix}.{i}.b"],
                              spec["activation"], spec["pool_size"],
                              spec.get("dropout", 0.0),
                              spec.get("batch_norm", False),
                              spec.get("dropout_seed", 0))
        if layer.batch_norm:
            for name in _BN_TENSORS:
                setattr(layer, name, tensors[f"{prefix}.{i}.{name}"].copy())
        layers.append(layer)
    return nn.MLP(layers)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, indent=1).encode() + b"\n"


def _checksum(meta: dict, blobs: dict[str, bytes]) -> str:
    h = hashlib.sha256()
    scrubbed = dict(meta)
    scrubbed["checksum"] = ""
    h.update(_canonical_json(scrubbed))
    for name in sorted(blobs):
        h.update(name.encode())
        h.update(blobs[name])
    return h.hexdigest()


def _validate_extra(extra: dict | None) -> dict:
    if not extra:
        return {}
    clean = {}
    for key, value in extra.items():
        if isinstance(value, PerSampleStatistic):
            raise MembraneError(
                f"metadata field {key!r} is tagged per-sample; "
                "it may not cross the data membrane")
        if not isinstance(value, (str, int, float, bool, type(None))):
            raise MembraneError(
                f"metadata field {key!r} must be a scalar, got "
                f"{type(value).__name__}")
        clean[str(key)] = value
    return clean


def write_bundle(path, classifier: nn.ClassifierModel | None = None,
                 gan: gan_mod.GanModel | None = None, *,
                 input_dim: int, base_class_count: int,
                 gan_epoch: int | None = None,
                 creation_seed: int | None = None,
                 extra: dict | None = None) -> Path:
    """Serialize models + metadata to ``path`` and seal with a checksum."""
    if classifier is None and gan is None:
        raise ParameterError("a bundle must hold at least one model")
    path = Path(path)
    tensors: dict[str, np.ndarray] = {}
    models: dict[str, dict] = {}
    if classifier is not None:
        models["classifier"] = {
            "trunk": _mlp_tensors("classifier.trunk", classifier.trunk,
                                  tensors),
            "num_classes": classifier.num_classes,
        }
        tensors["classifier.head.w"] = classifier.head_weights
        tensors["classifier.head.b"] = classifier.head_bias
    if gan is not None:
        models["gan"] = {
            "noise_dim": gan.noise_dim,
            "epochs_trained": gan.epochs_trained,
            "generator": _mlp_tensors("gan.generator", gan.generator,
                                      tensors),
            "discriminator": _mlp_tensors("gan.discriminator",
                                          gan.discriminator, tensors),
        }

    blobs = {name: np.ascontiguousarray(arr, dtype=BLOB_DTYPE).tobytes()
             for name, arr in tensors.items()}
    meta = {
        "format_version": FORMAT_VERSION,
        "dtype": BLOB_DTYPE,
        "input_dim": int(input_dim),
        "base_class_count": int(base_class_count),
        "gan_epoch": gan_epoch,
        "creation_seed": creation_seed,
        "models": models,
        "tensors": {name: {"shape": list(tensors[name].shape),
                           "file": f"tensors/{name}.bin"}
                    for name in tensors},
        "extra": _validate_extra(extra),
        "checksum": "",
    }
    meta["checksum"] = _checksum(meta, blobs)

    (path / "tensors").mkdir(parents=True, exist_ok=True)
    for name, blob in blobs.items():
        (path / "tensors" / f"{name}.bin").write_bytes(blob)
    (path / _META_NAME).write_bytes(_canonical_json(meta))
    return path


def read_bundle(path) -> LoadedBundle:
    """Load and verify a bundle; any corruption raises before models exist."""
    path = Path(path)
    meta_path = path / _META_NAME
    if not meta_path.is_file():
        raise IntegrityError(f"no bundle metadata at {meta_path}")
    try:
        meta = json.loads(meta_path.read_bytes())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IntegrityError(f"corrupt bundle metadata at {meta_path}: {exc}")
    if meta.get("format_version") != FORMAT_VERSION:
        raise IntegrityError(
            f"unsupported bundle format_version {meta.get('format_version')}")

    blobs = {}
    for name, info in meta.get("tensors", {}).items():
        blob_path = path / info["file"]
        if not blob_path.is_file():
            raise IntegrityError(f"missing tensor blob {blob_path}")
        blobs[name] = blob_path.read_bytes()
    if _checksum(meta, blobs) != meta.get("checksum"):
        raise IntegrityError(f"checksum mismatch in bundle at {path}")

    dtype = meta.get("dtype", BLOB_DTYPE)
    tensors = {}
    for name, info in meta["tensors"].items():
        shape = tuple(info["shape"])
        arr = np.frombuffer(blobs[name], dtype=dtype)
        if arr.size != int(np.prod(shape)):
            raise IntegrityError(f"tensor {name} has wrong size")
        tensors[name] = arr.reshape(shape).astype(np.float64)

    classifier = None
    if "classifier" in meta["models"]:
        spec = meta["models"]["classifier"]
        trunk = _mlp_from_spec("classifier.trunk", spec["trunk"], tensors)
        classifier = nn.ClassifierModel(trunk, tensors["classifier.head.w"],
                                        tensors["classifier.head.b"])
    loaded_gan = None
    if "gan" in meta["models"]:
        spec = meta["models"]["gan"]
        loaded_gan = gan_mod.GanModel(
            _mlp_from_spec("gan.generator", spec["generator"], tensors),
            _mlp_from_spec("gan.discriminator", spec["discriminator"],
                           tensors),
            spec["noise_dim"], spec["epochs_trained"])
    return LoadedBundle(classifier, loaded_gan, meta, path)
