"""Model checkpoints: the MWAMDL1 binary format.

Layout (all integers and floats little-endian)::

    magic   8 bytes  b"MWAMDL1\\0"
    config  u32 dim, u32 max_span, u32 hidden, f64 cost_scale, u64 seed
    count   u32      number of tensors
    per tensor:
        name_len u16, name utf-8
        rank     u8,  dims u32 * rank
        payload  float32 row-major

Model tensors appear first, in a fixed field order; optimizer tensors (if
any) follow under ``adam.``-prefixed names. Because parameter values are
kept float32-representable in memory, save -> load -> save reproduces the
file byte for byte.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .scorer import PARAM_TENSOR_FIELDS, ModelParameters

MAGIC = b"MWAMDL1\0"


def save_checkpoint(params: ModelParameters, path: str | Path,
                    extras: dict[str, np.ndarray] | None = None) -> None:
    """Write parameters (and optional optimizer tensors) to ``path``."""
    tensors = list(params.tensors())
    if extras:
        tensors += sorted(extras.items())
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<IIIdQ", params.dim, params.max_span,
                                 params.hidden, params.cost_scale,
                                 params.seed))
        handle.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors:
            encoded = name.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<B", tensor.ndim))
            for size in tensor.shape:
                handle.write(struct.pack("<I", size))
            handle.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def _read_exact(handle, count: int, path, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise FormatError(f"{path}: truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path: str | Path
                    ) -> tuple[ModelParameters, dict[str, np.ndarray]]:
    """Read a checkpoint; returns (parameters, extra tensors)."""
    with open(path, "rb") as handle:
        if _read_exact(handle, 8, path, "magic") != MAGIC:
            raise FormatError(f"{path}: not an MWAMDL1 checkpoint (bad magic)")
        dim, max_span, hidden, cost_scale, seed = struct.unpack(
            "<IIIdQ", _read_exact(handle, struct.calcsize("<IIIdQ"), path,
                                  "config"))
        (count,) = struct.unpack("<I", _read_exact(handle, 4, path,
                                                   "tensor count"))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack(
                "<H", _read_exact(handle, 2, path, "tensor name length"))
            name = _read_exact(handle, name_len, path,
                               "tensor name").decode("utf-8")
            if name in tensors:
                raise FormatError(f"{path}: duplicate tensor {name!r}")
            (rank,) = struct.unpack(
                "<B", _read_exact(handle, 1, path, f"rank of {name!r}"))
            shape = tuple(
                struct.unpack("<I", _read_exact(handle, 4, path,
                                                f"dims of {name!r}"))[0]
                for _ in range(rank))
            size = int(np.prod(shape)) if shape else 1
            raw = _read_exact(handle, 4 * size, path, f"payload of {name!r}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").astype(
                np.float64).reshape(shape)
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after last tensor")

    values = {}
    for name in PARAM_TENSOR_FIELDS:
        if name not in tensors:
            raise FormatError(f"{path}: missing model tensor {name!r}")
        values[name] = tensors.pop(name)
    params = ModelParameters(dim=dim, max_span=max_span, hidden=hidden,
                             cost_scale=cost_scale, seed=seed, **values)
    for name, shape in params.expected_shapes().items():
        if values[name].shape != shape:
            raise FormatError(
                f"{path}: tensor {name!r} has shape {values[name].shape}, "
                f"expected {shape}")
    return params, tensors
