"""Versioned checkpoint file: ``RFGAN1`` header, config echo, raw tensors.

Layout: magic line ``RFGAN1\\n``, an 8-byte little-endian header length, a
JSON header (config plus a tensor manifest with names, shapes, dtypes, in
order), then the concatenated tensor bytes (little-endian, C order). The
write is byte-deterministic for identical parameters, which is what makes
rerun-identical training artifacts checkable.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError
from .config import GanConfig
from .networks import PatchDiscriminator, UnetGenerator, build_discriminator, build_generator

MAGIC = b"RFGAN1\n"


def _state_arrays(prefix: str, module: torch.nn.Module) -> list[tuple[str, np.ndarray]]:
    return [(f"{prefix}.{name}", tensor.detach().numpy())
            for name, tensor in module.state_dict().items()]


def save_checkpoint(path: str | os.PathLike, config: GanConfig,
                    generator: UnetGenerator,
                    discriminator: PatchDiscriminator | None = None) -> Path:
    entries = _state_arrays("g", generator)
    if discriminator is not None:
        entries += _state_arrays("d", discriminator)
    manifest = [{"name": name, "shape": list(arr.shape), "dtype": str(arr.dtype)}
                for name, arr in entries]
    header = json.dumps({"config": config.to_dict(), "tensors": manifest},
                        sort_keys=True).encode()
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for _, arr in entries:
            fh.write(np.ascontiguousarray(arr).tobytes())
    os.replace(tmp, out)
    return out


def load_checkpoint(path: str | os.PathLike) -> tuple[GanConfig, UnetGenerator,
                                                      PatchDiscriminator | None]:
    p = Path(path)
    if not p.is_file():
        raise CheckpointError(f"checkpoint not found: {p}")
    raw = p.read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"bad checkpoint magic in {p}; expected RFGAN1")
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<Q", raw, off)
    off += 8
    try:
        header = json.loads(raw[off:off + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header in {p}: {exc}") from exc
    off += hlen

    config = GanConfig.from_dict(header["config"])
    tensors: dict[str, np.ndarray] = {}
    for meta in header["tensors"]:
        count = int(np.prod(meta["shape"])) if meta["shape"] else 1
        dtype = np.dtype(meta["dtype"])
        nbytes = count * dtype.itemsize
        if off + nbytes > len(raw):
            raise CheckpointError(f"truncated checkpoint {p}")
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=off)
        tensors[meta["name"]] = arr.reshape(meta["shape"]).copy()
        off += nbytes

    generator = build_generator(config)
    g_state = {k[2:]: torch.from_numpy(v) for k, v in tensors.items()
               if k.startswith("g.")}
    generator.load_state_dict(g_state)

    discriminator = None
    d_state = {k[2:]: torch.from_numpy(v) for k, v in tensors.items()
               if k.startswith("d.")}
    if d_state:
        discriminator = build_discriminator(config)
        discriminator.load_state_dict(d_state)
    return config, generator, discriminator
