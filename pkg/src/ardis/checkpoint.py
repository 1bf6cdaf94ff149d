"""Checkpoint container: magic, version, embedded config, named f32 blobs.

Layout (all integers little-endian):

    4s    magic "ARDS"
    u32   format version (currently 1)
    u32   config length, then that many bytes of canonical config text
    u32   parameter count
    per parameter: u32 name length, name bytes, u32 element count,
                   element count * f32 payload
    u8    optimizer-state flag
    if set: u64 step counter, then first-moment and second-moment blobs
            (u32 element count + f32 payload each, in parameter order)

Parameters are stored in model order, values cast to f32, so
save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import dataclasses
import struct

import numpy as np

from . import autodiff as ad
from .config import ArdisConfig

MAGIC = b"ARDS"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(model, path, adam_state=None):
    named = model.named_params()
    parts = [MAGIC, struct.pack("<I", VERSION)]
    cfg_bytes = model.config.to_text().encode("utf-8")
    parts.append(struct.pack("<I", len(cfg_bytes)))
    parts.append(cfg_bytes)
    parts.append(struct.pack("<I", len(named)))
    for name, p in named:
        parts.append(_blob(name, p.data))
    if adam_state is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<B", 1))
        parts.append(struct.pack("<Q", adam_state.step_count))
        for moments in (adam_state.m, adam_state.v):
            for arr in moments:
                parts.append(_payload(arr))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def _blob(name, arr):
    nb = name.encode("utf-8")
    return struct.pack("<I", len(nb)) + nb + _payload(arr)


def _payload(arr):
    flat = np.asarray(arr, dtype="<f4").reshape(-1)
    return struct.pack("<I", flat.size) + flat.tobytes()


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self.take(8))[0]

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def floats(self, n):
        return np.frombuffer(self.take(4 * n), dtype="<f4").astype(np.float64)

    def done(self):
        return self.pos == len(self.data)


def load_checkpoint(path, expect_config=None):
    """Rebuild (model, adam_state or None) from a checkpoint file.

    expect_config, when given, must match the embedded config exactly;
    any shape-relevant drift also fails the per-parameter guards below.
    """
    from .pipeline import ArdisModel

    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not an ARDS checkpoint")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    config = ArdisConfig.from_text(r.take(r.u32()).decode("utf-8"))
    if expect_config is not None and expect_config != config:
        diffs = [f.name for f in dataclasses.fields(ArdisConfig)
                 if getattr(config, f.name) != getattr(expect_config, f.name)]
        raise CheckpointError(f"{path}: checkpoint config differs from expected config in: {diffs}")

    model = ArdisModel(config)
    named = model.named_params()
    n = r.u32()
    if n != len(named):
        raise CheckpointError(f"{path}: checkpoint has {n} parameters, model expects {len(named)}")
    for name, p in named:
        blob_name = r.take(r.u32()).decode("utf-8")
        if blob_name != name:
            raise CheckpointError(f"{path}: parameter order mismatch: expected {name!r}, found {blob_name!r}")
        count = r.u32()
        if count != p.data.size:
            raise CheckpointError(
                f"{path}: parameter {name!r} has {count} elements, model expects {p.data.size}")
        p.data = r.floats(count).reshape(p.data.shape)

    adam_state = None
    if r.u8():
        adam_state = ad.AdamState(model.params())
        adam_state.step_count = r.u64()
        for moments in (adam_state.m, adam_state.v):
            for i, arr in enumerate(moments):
                count = r.u32()
                if count != arr.size:
                    raise CheckpointError(f"{path}: optimizer moment {i} has wrong size {count}")
                moments[i] = r.floats(count).reshape(arr.shape)
    if not r.done():
        raise CheckpointError(f"{path}: {len(r.data) - r.pos} trailing bytes after checkpoint payload")
    return model, adam_state
