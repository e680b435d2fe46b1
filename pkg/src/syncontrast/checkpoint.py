"""Binary run checkpoints: encoder pair, queue, generator state, step counter.

Little-endian layout, CRC-protected:

    magic "S2CK" | u32 version=1 | u64 step
    | u64 rng blob length | rng state blob (JSON bytes)
    | encoder section (online) | encoder section (target)
    | u32 queue capacity | u32 fill | u32 head | capacity * dim float64 ring buffer
    | u32 CRC32 of all preceding bytes

An encoder section is u32 layer count followed by, per layer, u32 in_dim,
u32 out_dim, the float64 weight matrix in row-major order, and the float64
bias vector. The queue dim equals the encoder output dim. Round trips are
bit-exact, so a resumed run continues the original trajectory.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams
from .errors import (
    BadMagicError,
    ChecksumError,
    FileFormatError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .momentum import NegativeQueue

MAGIC = b"S2CK"
FORMAT_VERSION = 1


@dataclass
class CheckpointData:
    step: int
    rng_state: dict
    online: EncoderParams
    target: EncoderParams
    queue: NegativeQueue


def _pack_encoder(params: EncoderParams) -> bytes:
    parts = [struct.pack("<I", len(params.weights))]
    for w, b in zip(params.weights, params.biases):
        parts.append(struct.pack("<II", w.shape[0], w.shape[1]))
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.path = path
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.blob):
            raise TruncatedFileError(f"{self.path}: ends at byte {len(self.blob)}, needed {self.offset + n}")
        out = self.blob[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _read_encoder(r: _Reader) -> EncoderParams:
    (n_layers,) = r.unpack("<I")
    if n_layers == 0 or n_layers > 1024:
        raise FileFormatError(f"{r.path}: implausible layer count {n_layers}")
    weights = []
    biases = []
    for _ in range(n_layers):
        in_dim, out_dim = r.unpack("<II")
        if in_dim == 0 or out_dim == 0:
            raise FileFormatError(f"{r.path}: zero layer dimension")
        w = np.frombuffer(r.take(in_dim * out_dim * 8), dtype="<f8").reshape(in_dim, out_dim)
        b = np.frombuffer(r.take(out_dim * 8), dtype="<f8")
        weights.append(w.copy())
        biases.append(b.copy())
    return EncoderParams(weights=weights, biases=biases)


def save_checkpoint(path, step: int, rng_state: dict, online: EncoderParams,
                    target: EncoderParams, queue: NegativeQueue) -> None:
    rng_blob = json.dumps(rng_state, sort_keys=True).encode()
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("<Q", int(step)),
        struct.pack("<Q", len(rng_blob)),
        rng_blob,
        _pack_encoder(online),
        _pack_encoder(target),
        struct.pack("<III", queue.capacity, queue.fill, queue.head),
        np.ascontiguousarray(queue.buffer, dtype="<f8").tobytes(),
    ]
    body = b"".join(parts)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def load_checkpoint(path) -> CheckpointData:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise TruncatedFileError(f"{path}: too short for a checkpoint")
    if blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {blob[:4]!r}")
    body, stored = blob[:-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", stored)
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError(f"{path}: CRC mismatch")
    r = _Reader(body, path)
    r.take(4)  # magic
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} unsupported")
    (step,) = r.unpack("<Q")
    (rng_len,) = r.unpack("<Q")
    try:
        rng_state = json.loads(r.take(rng_len))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: corrupt generator state blob") from exc
    online = _read_encoder(r)
    target = _read_encoder(r)
    capacity, fill, head = r.unpack("<III")
    dim = online.out_dim
    if fill > capacity or head >= max(capacity, 1):
        raise FileFormatError(f"{path}: inconsistent queue fields")
    buf = np.frombuffer(r.take(capacity * dim * 8), dtype="<f8").reshape(capacity, dim)
    if r.offset != len(body):
        raise FileFormatError(f"{path}: {len(body) - r.offset} trailing bytes")
    queue = NegativeQueue(capacity=capacity, dim=dim)
    queue.buffer = buf.copy()
    queue.head = int(head)
    queue.fill = int(fill)
    return CheckpointData(
        step=int(step), rng_state=rng_state, online=online, target=target, queue=queue
    )
