"""Small-scale Rayleigh fading and per-block channel assembly."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from . import streams
from .topology import LargeScaleProfile

__all__ = [
    "ChannelRealization",
    "draw_small_scale",
    "assemble_channel",
    "realization",
    "dump_realization",
    "load_realization",
]

_SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel blocks ``G[m][n]`` (K_m x N_n complex) for one fading draw."""

    G: list[list[np.ndarray]]

    @property
    def num_subnetworks(self) -> int:
        return len(self.G)

    def own(self, m: int) -> np.ndarray:
        return self.G[m][m]


def draw_small_scale(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """``rows x cols`` matrix of i.i.d. CN(0, 1) entries (variance 1/2 per
    real component)."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    out = np.empty((rows, cols), dtype=np.complex128)
    view = out.view(np.float64)
    rng.standard_normal(out=view)
    view *= _SQRT_HALF
    return out


def assemble_channel(profile: LargeScaleProfile, rng) -> ChannelRealization:
    """Hadamard product ``l[m][n] * H[m][n]`` for every block.

    ``rng`` is either a single generator, used for all blocks in row-major
    block order, or a callable ``rng(m, n)`` returning a generator per block.
    """
    M = profile.num_subnetworks
    pick = rng if callable(rng) else (lambda m, n: rng)
    blocks = []
    for m in range(M):
        row = []
        for n in range(M):
            l = profile.l[m][n]
            h = draw_small_scale(*l.shape, pick(m, n))
            h *= l
            h.setflags(write=False)
            row.append(h)
        blocks.append(row)
    return ChannelRealization(blocks)


def realization(profile: LargeScaleProfile, seed: int, *key: int) -> ChannelRealization:
    """Channel draw keyed by ``(seed, key)`` with one stream per block."""
    return assemble_channel(
        profile, lambda m, n: streams.stream(seed, streams.CHANNEL, *key, m, n))


_MAGIC = b"CFCH"


def dump_realization(chan: ChannelRealization, fh: BinaryIO) -> None:
    """Write a realization as: magic, M, then per block (rows, cols) and the
    row-major complex64 entries (little endian)."""
    M = chan.num_subnetworks
    fh.write(_MAGIC + struct.pack("<I", M))
    for m in range(M):
        for n in range(M):
            blk = chan.G[m][n]
            fh.write(struct.pack("<II", *blk.shape))
            fh.write(np.ascontiguousarray(blk, dtype="<c8").tobytes())


def load_realization(fh: BinaryIO) -> ChannelRealization:
    head = fh.read(8)
    if head[:4] != _MAGIC:
        raise ValueError("not a channel dump")
    (M,) = struct.unpack("<I", head[4:])
    blocks = []
    for _ in range(M):
        row = []
        for _ in range(M):
            r, c = struct.unpack("<II", fh.read(8))
            data = np.frombuffer(fh.read(8 * r * c), dtype="<c8").reshape(r, c)
            row.append(data.astype(np.complex128))
        blocks.append(row)
    return ChannelRealization(blocks)
