"""Dense float64 arithmetic and deterministic, splittable random streams.

All randomness in the library flows through :class:`RngStream`, a
counter-based stream keyed by (seed, stream_id). Two streams with the same
key replay the same sequence bit for bit; streams with different ids are
statistically independent, so parallel workers stay reproducible without
any shared mutable state.
"""

from __future__ import annotations

import os

import numpy as np

_MASK64 = (1 << 64) - 1


def _mix64(a: int, b: int) -> int:
    # splitmix64 finalizer over the pair; distinct (a, b) map to distinct
    # outputs with overwhelming probability
    x = (a * 0x9E3779B97F4A7C15 + b + 0xD1B54A32D192ED03) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class RngStream:
    """Deterministic random stream identified by (seed, stream_id).

    Backed by the Philox counter-based bit generator. Normal variates use
    the exact Box-Muller transform (never the ziggurat rejection method),
    so the output is a pure function of the key and the call sequence.

    A stream is owned by one logical task; hand independent work a child
    stream from :meth:`split` instead of sharing this one.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative integers")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._bitgen = np.random.Philox(key=[self.seed, self.stream_id])
        self._gen = np.random.Generator(self._bitgen)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def split(self, child_id: int) -> "RngStream":
        """Derive an independent child stream.

        The child key depends only on (seed, stream_id, child_id), not on
        how far this stream has advanced, so split layouts are stable.
        """
        return RngStream(self.seed, _mix64(self.stream_id, int(child_id)))

    def uniform(self, size=None):
        """Uniform draws in [0, 1)."""
        return self._gen.random(size)

    def integers(self, high: int, size=None):
        """Uniform integers in [0, high)."""
        if high <= 0:
            raise ValueError("high must be positive")
        return self._gen.integers(0, high, size=size)

    def standard_normal(self, shape):
        """Standard normal draws via Box-Muller on Philox uniforms."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        half = (n + 1) // 2
        u1 = 1.0 - self._gen.random(half)  # (0, 1], keeps log finite
        u2 = self._gen.random(half)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.empty(2 * half)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n].reshape(shape)

    @property
    def state(self) -> dict:
        """JSON-serializable snapshot of the stream position."""
        s = self._bitgen.state
        return {
            "seed": self.seed,
            "stream_id": self.stream_id,
            "counter": s["state"]["counter"].tolist(),
            "key": s["state"]["key"].tolist(),
            "buffer": s["buffer"].tolist(),
            "buffer_pos": int(s["buffer_pos"]),
            "has_uint32": int(s["has_uint32"]),
            "uinteger": int(s["uinteger"]),
        }

    @state.setter
    def state(self, snap: dict) -> None:
        self.seed = int(snap["seed"])
        self.stream_id = int(snap["stream_id"])
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": snap["counter"], "key": snap["key"]},
            "buffer": snap["buffer"],
            "buffer_pos": snap["buffer_pos"],
            "has_uint32": snap["has_uint32"],
            "uinteger": snap["uinteger"],
        }


def gaussian_sample(rng: RngStream, dim: int) -> np.ndarray:
    """One standard-normal vector of length `dim`, advancing `rng`."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return rng.standard_normal(dim)


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product with shape and finiteness checks."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1:
        raise ValueError(f"expected matrix and vector, got shapes {m.shape} and {v.shape}")
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix is {m.shape}, vector has dim {v.shape[0]}")
    out = m @ v
    if not np.all(np.isfinite(out)):
        raise ValueError("matvec produced non-finite entries")
    return out


def worker_count() -> int:
    """Worker cap for parallel sweeps: FLOWMATCH_THREADS, else machine cores."""
    raw = os.environ.get("FLOWMATCH_THREADS", "").strip()
    if raw:
        count = int(raw)
        if count < 1:
            raise ValueError("FLOWMATCH_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1
