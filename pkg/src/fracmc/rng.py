"""Counter-based random streams.

Every draw is a pure function of ``(key, counter)``, where the key is
derived by hashing ``(seed, path index, step, channel)``. Streams are
therefore reproducible on any platform and independent of how paths are
batched or split across workers. The mixing function is the SplitMix64
finalizer, applied with wrapping uint64 arithmetic.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "RngStream",
    "derive_stream",
    "derive_key",
    "raw_block",
    "uniform_from_raw",
    "normals_from_uniform",
    "signs_from_raw",
    "N_CHANNELS",
    "CH_TIME",
    "CH_JUMP",
    "CH_RADEMACHER",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# per-step channels; draws on one channel never shift another's
N_CHANNELS = 4
CH_TIME = 0
CH_JUMP = 1
CH_RADEMACHER = 2


def _mix64(z: np.ndarray) -> np.ndarray:
    # uint64 wraparound is intended; numpy only warns about it for scalars
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(value) -> np.ndarray:
    if isinstance(value, np.ndarray):
        return value.astype(np.uint64, copy=False)
    return np.asarray(int(value) & _MASK64, dtype=np.uint64)


def derive_key(parent, label) -> np.ndarray:
    """Child key for ``label`` under ``parent`` (both uint64 scalars or arrays).

    For a fixed parent the map label -> child key is a bijection, so
    distinct labels never collide.
    """
    with np.errstate(over="ignore"):
        z = _as_u64(label) + _GOLDEN
    return _mix64(_as_u64(parent) ^ _mix64(z))


def raw_block(keys: np.ndarray, count: int, start=0) -> np.ndarray:
    """Raw uint64 draws ``start .. start+count-1`` for every key, shape (m, count).

    ``start`` may be a per-key array.
    """
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    start = np.asarray(start, dtype=np.uint64).reshape(-1, 1)
    counters = start + np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys + counters * _GOLDEN
    return _mix64(z)


def uniform_from_raw(raw: np.ndarray) -> np.ndarray:
    """Map uint64 draws to doubles on (0, 1]; zero is never produced."""
    return ((raw >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53


def normals_from_uniform(u: np.ndarray, n: int) -> np.ndarray:
    """Box-Muller: the last axis holds 2*ceil(n/2) uniforms, returns n normals."""
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(u.shape[:-1] + (u1.shape[-1] * 2,))
    z[..., 0::2] = r * np.cos(theta)
    z[..., 1::2] = r * np.sin(theta)
    return z[..., :n]


def signs_from_raw(raw: np.ndarray) -> np.ndarray:
    return np.where(raw >> np.uint64(63), 1.0, -1.0)


class RngStream:
    """Sequential view of one counter-based stream.

    Single-owner: reading advances the internal counter. ``child`` returns
    an independent stream for a sub-label, which is how per-step channels
    are addressed.
    """

    __slots__ = ("key", "counter")

    def __init__(self, key, counter: int = 0):
        self.key = np.uint64(_as_u64(key))
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"RngStream(key=0x{int(self.key):016x}, counter={self.counter})"

    def child(self, label: int) -> "RngStream":
        return RngStream(derive_key(self.key, label))

    def step(self, step: int, channel: int) -> "RngStream":
        """Stream for one (step, channel) pair of a path simulation."""
        return self.child(step * N_CHANNELS + channel)

    def raw(self, size: int) -> np.ndarray:
        out = raw_block(self.key, size, self.counter)[0]
        self.counter += size
        return out

    def uniform(self, size: int | None = None):
        if size is None:
            return float(uniform_from_raw(self.raw(1))[0])
        return uniform_from_raw(self.raw(size))

    def normal(self, size: int) -> np.ndarray:
        u = self.uniform(2 * ((size + 1) // 2))
        return normals_from_uniform(u, size)

    def rademacher(self, size: int) -> np.ndarray:
        return signs_from_raw(self.raw(size))


def derive_stream(seed: int, index: int) -> RngStream:
    """Stream for path ``index`` of an experiment seeded with ``seed``."""
    return RngStream(derive_key(derive_key(0, seed), index))
