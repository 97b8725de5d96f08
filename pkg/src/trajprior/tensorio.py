"""Self-describing tensor container and grayscale image export.

File layout: 8-byte magic, uint32 little-endian header length, a UTF-8
JSON header (sorted keys), then the raw little-endian row-major payloads
back to back. No timestamps or other nondeterministic content, so writing
the same tensors twice produces byte-identical files.
"""
from __future__ import annotations

import json
import struct
from typing import Dict, Tuple

import numpy as np

MAGIC = b"TRAJPRI1"

_DTYPES = {"float64": "<f8", "int64": "<i8"}


def save_tensors(path, tensors: Dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named tensors (float64 or int64) plus a JSON metadata dict."""
    entries = []
    payloads = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.kind == "f":
            dtype = "float64"
        elif arr.dtype.kind in "iu":
            dtype = "int64"
        else:
            raise ValueError(f"unsupported dtype for tensor '{name}': {arr.dtype}")
        raw = arr.astype(_DTYPES[dtype]).tobytes(order="C")
        entries.append({"name": name, "shape": list(arr.shape),
                        "dtype": dtype, "offset": offset})
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps({"tensors": entries, "meta": meta or {}},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for raw in payloads:
            f.write(raw)


def load_tensors(path) -> Tuple[Dict[str, np.ndarray], dict]:
    """Read a tensor container; returns ({name: array}, meta)."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a tensor container (bad magic)")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        payload = f.read()
    tensors = {}
    for entry in header["tensors"]:
        dt = np.dtype(_DTYPES[entry["dtype"]])
        n = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype=dt, count=n, offset=start)
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(dt.newbyteorder("="))
    return tensors, header.get("meta", {})


def save_heatmap(path, heatmap) -> None:
    meta = {"kind": "heatmap", "layout": "row-major",
            "height": heatmap.spec.height, "width": heatmap.spec.width,
            "n_max": heatmap.n_max, "spec": heatmap.spec.to_dict()}
    save_tensors(path, {"density": heatmap.density,
                        "direction": heatmap.direction,
                        "count": heatmap.count}, meta)


def load_heatmap(path):
    from .core import GridSpec, Heatmap
    tensors, meta = load_tensors(path)
    return Heatmap(GridSpec.from_dict(meta["spec"]), tensors["density"],
                   tensors["direction"], tensors["count"].astype(np.int64),
                   int(meta["n_max"]))


def save_feature_map(path, fm) -> None:
    meta = {"kind": "feature", "layout": "row-major",
            "height": fm.spec.height, "width": fm.spec.width,
            "channels": fm.channels, "spec": fm.spec.to_dict()}
    save_tensors(path, {"data": fm.data}, meta)


def load_feature_map(path):
    from .core import FeatureMap, GridSpec
    tensors, meta = load_tensors(path)
    return FeatureMap(GridSpec.from_dict(meta["spec"]), tensors["data"])


def save_params(path, offset_params, fusion_params) -> None:
    meta = {"kind": "params",
            "channels": int(offset_params.w1.shape[1]) // 2,
            "hidden": int(offset_params.w1.shape[0])}
    save_tensors(path, {"off_w1": offset_params.w1, "off_b1": offset_params.b1,
                        "off_w2": offset_params.w2, "off_b2": offset_params.b2,
                        "logit_weight": fusion_params.weight,
                        "logit_bias": fusion_params.bias}, meta)


def load_params(path):
    from .fusion import FusionParams, OffsetParams
    tensors, _ = load_tensors(path)
    op = OffsetParams(tensors["off_w1"], tensors["off_b1"],
                      tensors["off_w2"], tensors["off_b2"])
    fp = FusionParams(tensors["logit_weight"], tensors["logit_bias"])
    return op, fp


def write_pgm(path, values: np.ndarray) -> None:
    """Write an H x W array in [0, 1] as a binary 8-bit PGM grayscale image."""
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    pix = np.round(arr * 255.0).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pix.tobytes(order="C"))
