"""Versioned JSON model files and deployment-footprint accounting.

Numbers are written with Python's shortest round-trip ``repr``, so every
float64 survives a save/load cycle bit for bit. With ``binary=True`` the
arrays are stored instead as base64 little-endian float64 blobs.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Scaler
from .errors import ModelFormatError
from .model import RadModel, ThresholdMode

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class ModelFile:
    model: RadModel
    column_names: tuple[str, ...] | None = None
    scaler: Scaler | None = None


def _pack(values: np.ndarray, binary: bool):
    flat = np.ascontiguousarray(values, dtype="<f8").ravel()
    if binary:
        return {"dtype": "<f8", "base64": base64.b64encode(flat.tobytes()).decode("ascii")}
    return flat.tolist()


def _unpack(obj, size: int, what: str) -> np.ndarray:
    if isinstance(obj, dict):
        if obj.get("dtype") != "<f8":
            raise ModelFormatError(f"{what}: unsupported binary dtype {obj.get('dtype')!r}")
        arr = np.frombuffer(base64.b64decode(obj["base64"]), dtype="<f8").astype(np.float64)
    else:
        arr = np.array(obj, dtype=np.float64)
    if arr.size != size:
        raise ModelFormatError(f"{what}: expected {size} values, got {arr.size}")
    return arr


def to_json(mf: ModelFile, binary: bool = False) -> str:
    m = mf.model
    doc = {
        "format_version": FORMAT_VERSION,
        "d": m.d,
        "r": m.r,
        "A": _pack(m.basis, binary),  # row-major d x r
        "median": _pack(m.median, binary),
        "threshold": m.threshold,
        "threshold_mode": m.threshold_mode.value,
        "column_names": list(mf.column_names) if mf.column_names is not None else None,
        "scaler": None,
        "provenance": m.trained_on,
    }
    if mf.scaler is not None:
        doc["scaler"] = {
            "center": _pack(mf.scaler.center, binary),
            "scale": _pack(mf.scaler.scale, binary),
        }
    return json.dumps(doc, indent=1) + "\n"


def from_json(text: str) -> ModelFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})"
        )
    try:
        d, r = int(doc["d"]), int(doc["r"])
        A = _unpack(doc["A"], d * r, "A").reshape(d, r)
        median = _unpack(doc["median"], d, "median")
        model = RadModel(
            A, median, float(doc["threshold"]), ThresholdMode(doc["threshold_mode"]),
            doc.get("provenance") or {},
        )
        scaler = None
        if doc.get("scaler"):
            scaler = Scaler(
                _unpack(doc["scaler"]["center"], d, "scaler.center"),
                _unpack(doc["scaler"]["scale"], d, "scaler.scale"),
            )
        names = doc.get("column_names")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if names is not None and len(names) != d:
        raise ModelFormatError(f"column_names has {len(names)} entries, expected {d}")
    return ModelFile(model, tuple(names) if names is not None else None, scaler)


def save(path, mf: ModelFile, binary: bool = False) -> int:
    """Write the model file; returns its size in bytes."""
    data = to_json(mf, binary).encode("utf-8")
    Path(path).write_bytes(data)
    return len(data)


def load(path) -> ModelFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc.strerror}") from exc
    return from_json(text)


def footprint(d: int, r: int, scalar_bytes: int = 8, with_buffers: bool = False) -> dict:
    """Deployment memory for ``{A, m, theta}``.

    With ``with_buffers`` the runtime vectors ``x_j`` (d) and ``A^T x_j`` (r)
    are counted as well: ``d*r + 2*d + r + 1`` scalars.
    """
    params = d * r + d + 1
    scalars = d * r + 2 * d + r + 1 if with_buffers else params
    return {
        "parameter_count": params,
        "scalar_count": scalars,
        "scalar_bytes": scalar_bytes,
        "bytes": scalars * scalar_bytes,
    }
