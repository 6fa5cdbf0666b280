"""Versioned binary checkpoints: JSON header + raw little-endian float32 tensors.

Layout: 4-byte magic ``ULTC``, uint32 version, uint64 header length, the
UTF-8 JSON header, then each tensor's bytes in the header's declared key
order. Tensors are stored as little-endian float32, which is also the
training dtype, so save -> load -> forward is bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
import torch

from .model import ModelConfig, UnitTransformer

MAGIC = b"ULTC"
VERSION = 1


def save_checkpoint(
    model: UnitTransformer,
    path: str | Path,
    step: int = 0,
    extra: dict[str, Any] | None = None,
) -> None:
    state = model.state_dict()
    keys = list(state.keys())
    header = {
        "version": VERSION,
        "model_config": model.cfg.to_dict(),
        "step": step,
        "rng_state": torch.get_rng_state().numpy().tobytes().hex(),
        "tensors": [[k, list(state[k].shape)] for k in keys],
        "extra": extra or {},
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(blob)))
        fh.write(blob)
        for key in keys:
            array = state[key].detach().cpu().numpy().astype("<f4", copy=False)
            fh.write(array.tobytes())


def read_header(path: str | Path) -> dict[str, Any]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, length = struct.unpack("<IQ", fh.read(12))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        return json.loads(fh.read(length).decode("utf-8"))


def load_checkpoint(path: str | Path) -> tuple[UnitTransformer, dict[str, Any]]:
    """Rebuild the model from a checkpoint; returns (model, header)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, length = struct.unpack("<IQ", fh.read(12))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(length).decode("utf-8"))
        cfg = ModelConfig.from_dict(header["model_config"])
        model = UnitTransformer(cfg)
        state = {}
        for key, shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise ValueError(f"{path}: truncated tensor {key}")
            array = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
            state[key] = torch.from_numpy(array)
        model.load_state_dict(state)
    model.eval()
    return model, header
