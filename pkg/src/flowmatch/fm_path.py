"""Conditional optimal-transport probability path and regression targets.

The path interpolates a prior draw x0 toward a data draw x1 along a
straight line,

    x_t = (1 - (1 - sigma_min) * t) * x0 + t * x1
    v_t = x1 - (1 - sigma_min) * x0

so the velocity target is constant in t and the pair satisfies
x_t + (1 - t) * v_t = x1 + sigma_min * x0 for every t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream


@dataclass(frozen=True)
class PathConfig:
    """Path hyperparameters; sigma_min is the residual prior scale at t=1."""

    sigma_min: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.sigma_min <= 0.1:
            raise ValueError(f"sigma_min must lie in (0, 0.1], got {self.sigma_min}")


@dataclass(frozen=True, eq=False)
class PathSample:
    """One training tuple on the conditional path."""

    x0: np.ndarray
    x1: np.ndarray
    t: float
    x_t: np.ndarray
    v_t: np.ndarray
    cond: int | None


def interpolate(x0: np.ndarray, x1: np.ndarray, t: float, cfg: PathConfig):
    """Evaluate (x_t, v_t) at flow step t."""
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    if x0.shape != x1.shape:
        raise ValueError(f"dimension mismatch: x0 has shape {x0.shape}, x1 has shape {x1.shape}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    a = 1.0 - (1.0 - cfg.sigma_min) * t
    x_t = a * x0 + t * x1
    v_t = x1 - (1.0 - cfg.sigma_min) * x0
    return x_t, v_t


def sample_path(x1, cond, cfg: PathConfig, rng: RngStream, *, t=None, x0=None) -> PathSample:
    """Draw one path sample: t ~ U[0,1], x0 ~ N(0, I), then interpolate.

    `t` and `x0` may be forced for endpoint tests; omitted values are drawn
    in the order (t, x0).
    """
    x1 = np.asarray(x1, dtype=np.float64)
    if not np.all(np.isfinite(x1)):
        raise ValueError("x1 must be finite")
    if t is None:
        t = float(rng.uniform())
    if x0 is None:
        x0 = rng.standard_normal(x1.shape[0])
    x_t, v_t = interpolate(x0, x1, t, cfg)
    return PathSample(x0=x0, x1=x1, t=float(t), x_t=x_t, v_t=v_t, cond=cond)


def sample_path_batch(x1_batch: np.ndarray, conds: np.ndarray, cfg: PathConfig, rng: RngStream):
    """Vectorized path construction for a batch of data draws.

    Returns (x0, t, x_t, v_t) arrays; conds pass through untouched. Uses
    the same per-sample draw order as `sample_path` (all t, then all x0).
    """
    x1_batch = np.asarray(x1_batch, dtype=np.float64)
    n, dim = x1_batch.shape
    t = rng.uniform(n)
    x0 = rng.standard_normal((n, dim))
    a = 1.0 - (1.0 - cfg.sigma_min) * t
    x_t = a[:, None] * x0 + t[:, None] * x1_batch
    v_t = x1_batch - (1.0 - cfg.sigma_min) * x0
    return x0, t, x_t, v_t
