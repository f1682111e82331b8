"""Reproducible i.i.d. uniform kicks on [-eps, eps].

Streams are counter based (Philox-4x64): the key is (master_seed, stream_id)
and the 256-bit counter carries (block, substream, 0, 0).  The kick at a
given (master_seed, stream_id, substream, position) is therefore a pure
function of those four integers, independent of how work is scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


@dataclass(frozen=True)
class NoiseConfig:
    epsilon: float
    master_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2], got {self.epsilon}")


class KickStream:
    """Single-owner cursor into one kick sequence."""

    def __init__(self, cfg: NoiseConfig, stream_id: int, substream: int = 0, position: int = 0):
        self.cfg = cfg
        self.stream_id = int(stream_id)
        self.substream = int(substream)
        self._key = np.array([cfg.master_seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self.seek(position)

    @property
    def epsilon(self) -> float:
        return self.cfg.epsilon

    @property
    def position(self) -> int:
        return self._pos

    def seek(self, position: int) -> None:
        if position < 0:
            raise ValueError("position must be nonnegative")
        block, skip = divmod(int(position), 4)
        counter = np.array([block & _MASK64, self.substream & _MASK64, 0, 0], dtype=np.uint64)
        self._bitgen = Philox(counter=counter, key=self._key)
        if skip:
            self._bitgen.random_raw(skip)
        self._pos = int(position)

    def uniforms(self, n: int) -> np.ndarray:
        """n uniforms on [0, 1) built from the top 53 bits of each 64-bit word."""
        raw = self._bitgen.random_raw(int(n))
        self._pos += int(n)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def kicks(self, n: int) -> np.ndarray:
        u = self.uniforms(n)
        return (2.0 * u - 1.0) * self.cfg.epsilon

    def next_kick(self) -> float:
        return float(self.kicks(1)[0])


def make_stream(cfg: NoiseConfig, stream_id: int, substream: int = 0) -> KickStream:
    return KickStream(cfg, stream_id, substream)
