"""Versioned binary container for named dense networks.

Layout (all integers little-endian):

    magic     8 bytes   b"DNETPACK"
    version   uint32    currently 1
    n_nets    uint32
    for each net:
        name_len  uint16, then name_len bytes of UTF-8 name
        n_layers  uint32
        for each layer: in_dim uint32, out_dim uint32, activation uint8
                        (0 = identity, 1 = relu)
    then, in the same net/layer order, the parameter blocks:
        weight  out_dim*in_dim float32 little-endian, row-major (out, in)
        bias    out_dim float32 little-endian

Parameters are stored as 32-bit reals regardless of the in-memory dtype, so
saving a float64 network is lossy by design.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .net import ACTIVATIONS, DenseNet, Layer
from .tensor import Tensor

MAGIC = b"DNETPACK"
VERSION = 1

_ACT_CODE = {name: i for i, name in enumerate(ACTIVATIONS)}


def save_nets(path: str | Path, nets: dict[str, DenseNet]) -> None:
    """Write the named networks to ``path`` in the container format."""
    chunks = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(nets))]
    blocks = []
    for name, net in nets.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", len(net.layers)))
        for layer in net.layers:
            chunks.append(struct.pack("<IIB", layer.in_dim, layer.out_dim, _ACT_CODE[layer.activation]))
            blocks.append(np.ascontiguousarray(layer.weight.data, dtype="<f4").tobytes())
            blocks.append(np.ascontiguousarray(layer.bias.data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks + blocks))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_nets(path: str | Path, dtype=np.float32) -> dict[str, DenseNet]:
    """Read a container written by :func:`save_nets`."""
    r = _Reader(Path(path).read_bytes())
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a network checkpoint")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (n_nets,) = r.unpack("<I")

    headers = []
    for _ in range(n_nets):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (n_layers,) = r.unpack("<I")
        layers = [r.unpack("<IIB") for _ in range(n_layers)]
        headers.append((name, layers))

    nets: dict[str, DenseNet] = {}
    for name, layer_specs in headers:
        layers = []
        for in_dim, out_dim, act_code in layer_specs:
            if act_code >= len(ACTIVATIONS):
                raise CheckpointError(f"{path}: unknown activation code {act_code}")
            w = np.frombuffer(r.take(4 * in_dim * out_dim), dtype="<f4").reshape(out_dim, in_dim)
            b = np.frombuffer(r.take(4 * out_dim), dtype="<f4")
            layers.append(
                Layer(
                    Tensor(w.astype(dtype), requires_grad=True),
                    Tensor(b.astype(dtype), requires_grad=True),
                    ACTIVATIONS[act_code],
                )
            )
        nets[name] = DenseNet(layers)
    if r.pos != len(r.buf):
        raise CheckpointError(f"{path}: {len(r.buf) - r.pos} trailing bytes")
    return nets
