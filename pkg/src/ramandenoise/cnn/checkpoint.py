"""Binary checkpoint files.

Layout (all integers little-endian)::

    b"RSDN" | u32 version | u64 header_len | header (UTF-8 JSON, sorted keys)
    | weights f64[n] | adam_m f64[n] | adam_v f64[n] | adam_step u64

The header carries the network config, training hyperparameters, zero-centre
means, batchnorm running statistics and the loss history. JSON floats use the
shortest round-trip repr, so every value survives bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagic, CountMismatch, IoFailure, ParseFailure, VersionMismatch
from .network import NetworkConfig
from .training import AdamState, Checkpoint, TrainHyper

MAGIC = b"RSDN"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
_F64 = np.dtype("<f8")


def checkpoint_bytes(ckpt: Checkpoint) -> bytes:
    n = ckpt.weights.size
    header = {
        "config": ckpt.config.to_dict(),
        "hyper": ckpt.hyper.to_dict(),
        "weight_count": n,
        "input_mean": np.asarray(ckpt.input_mean, dtype=np.float64).tolist(),
        "bn_running_mean": [np.asarray(a).tolist() for a in ckpt.bn_running_mean],
        "bn_running_var": [np.asarray(a).tolist() for a in ckpt.bn_running_var],
        "train_history": [float(x) for x in ckpt.train_history],
    }
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [
        _PREFIX.pack(MAGIC, VERSION, len(text)),
        text,
        np.ascontiguousarray(ckpt.weights, dtype=_F64).tobytes(),
        np.ascontiguousarray(ckpt.adam.m, dtype=_F64).tobytes(),
        np.ascontiguousarray(ckpt.adam.v, dtype=_F64).tobytes(),
        struct.pack("<Q", ckpt.adam.step),
    ]
    return b"".join(parts)


def save_checkpoint(ckpt: Checkpoint, dest) -> None:
    try:
        Path(dest).write_bytes(checkpoint_bytes(ckpt))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def parse_checkpoint(blob: bytes) -> Checkpoint:
    if len(blob) < _PREFIX.size or blob[:4] != MAGIC:
        raise BadMagic("not a checkpoint file (bad magic bytes)")
    _, version, header_len = _PREFIX.unpack_from(blob)
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    start = _PREFIX.size
    try:
        header = json.loads(blob[start:start + header_len].decode("utf-8"))
        config = NetworkConfig(**header["config"])
        hyper = TrainHyper(**header["hyper"])
        n = int(header["weight_count"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseFailure(0, f"bad checkpoint header: {exc}") from exc
    if n != config.parameter_count():
        raise CountMismatch(f"header lists {n} weights, config implies {config.parameter_count()}")
    body = memoryview(blob)[start + header_len:]
    if len(body) != 3 * 8 * n + 8:
        raise CountMismatch(f"payload holds {len(body)} bytes, expected {3 * 8 * n + 8}")
    arrays = np.frombuffer(body[:3 * 8 * n], dtype=_F64).astype(np.float64).reshape(3, n)
    (step,) = struct.unpack("<Q", body[3 * 8 * n:])
    return Checkpoint(
        config=config,
        hyper=hyper,
        weights=arrays[0].copy(),
        adam=AdamState(arrays[1].copy(), arrays[2].copy(), int(step)),
        input_mean=np.array(header["input_mean"], dtype=np.float64),
        bn_running_mean=[np.array(a, dtype=np.float64) for a in header["bn_running_mean"]],
        bn_running_var=[np.array(a, dtype=np.float64) for a in header["bn_running_var"]],
        train_history=[float(x) for x in header["train_history"]],
    )


def load_checkpoint(src) -> Checkpoint:
    try:
        blob = Path(src).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return parse_checkpoint(blob)


def checkpoints_equal(a: Checkpoint, b: Checkpoint) -> bool:
    """Bitwise equality of every stored array and scalar."""
    return checkpoint_bytes(a) == checkpoint_bytes(b)
