"""Deterministic synthetic conditional datasets.

Each dataset pairs a low-dimensional sample with an integer class label.
A spec can optionally lift its samples into a higher-dimensional ambient
space through a fixed seeded orthogonal map, producing data supported on a
`dim`-dimensional subspace -- the regime the linear codec is built for.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .numerics import RngStream

KINDS = ("gaussian-mixture", "two-moons", "rings")

# reserved stream id for deriving the lifting matrix from the spec seed
_LIFT_STREAM = 0x4C494654


@dataclass(frozen=True)
class DatasetSpec:
    """Parameters of one synthetic conditional dataset.

    For `gaussian-mixture`, `means` holds one length-`dim` tuple per class
    and `cov_scales` one positive variance per class (isotropic). The other
    kinds use `noise` as an isotropic jitter scale. `lift_dim`, when set,
    embeds samples into that many ambient dimensions via a fixed orthogonal
    map derived from `seed`.
    """

    kind: str = "gaussian-mixture"
    dim: int = 2
    num_classes: int = 4
    means: tuple = ()
    cov_scales: tuple = ()
    noise: float = 0.05
    seed: int = 42
    lift_dim: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; expected one of {KINDS}")
        if not 1 <= self.num_classes <= 64:
            raise ValueError(f"num_classes must be in [1, 64], got {self.num_classes}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "gaussian-mixture":
            means = tuple(tuple(float(x) for x in m) for m in self.means)
            scales = tuple(float(s) for s in self.cov_scales)
            object.__setattr__(self, "means", means)
            object.__setattr__(self, "cov_scales", scales)
            if len(means) != self.num_classes:
                raise ValueError("need exactly one mean per class")
            if any(len(m) != self.dim for m in means):
                raise ValueError(f"every mean must have length dim={self.dim}")
            if len(scales) != self.num_classes:
                raise ValueError("need exactly one covariance scale per class")
            if any(s <= 0.0 for s in scales):
                raise ValueError("covariance scales must be strictly positive")
        else:
            if self.dim != 2:
                raise ValueError(f"{self.kind} is a 2-D dataset")
            if self.kind == "two-moons" and self.num_classes != 2:
                raise ValueError("two-moons has exactly 2 classes")
            if self.noise <= 0.0:
                raise ValueError("noise must be strictly positive")
        if self.lift_dim is not None and self.lift_dim < self.dim:
            raise ValueError("lift_dim must be >= dim")

    @property
    def data_dim(self) -> int:
        """Ambient dimension of emitted samples."""
        return self.lift_dim if self.lift_dim is not None else self.dim


@lru_cache(maxsize=None)
def lift_matrix(spec: DatasetSpec) -> np.ndarray | None:
    """Orthonormal (data_dim, dim) lifting map, or None when not lifted.

    Derived from the spec seed on a reserved stream; column signs are
    fixed so the map is canonical for a given spec.
    """
    if spec.lift_dim is None:
        return None
    rng = RngStream(spec.seed, _LIFT_STREAM)
    raw = rng.standard_normal((spec.lift_dim, spec.dim))
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))[None, :]
    return q


def draw_batch(spec: DatasetSpec, rng: RngStream, n: int):
    """Draw n (sample, class) pairs; classes are uniform over [0, K).

    Returns (X, conds) with X of shape (n, data_dim) and conds of shape
    (n,). Draw order is fixed: class labels first, then shape noise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    conds = rng.integers(spec.num_classes, size=n)
    if spec.kind == "gaussian-mixture":
        means = np.asarray(spec.means, dtype=np.float64)
        scales = np.asarray(spec.cov_scales, dtype=np.float64)
        eps = rng.standard_normal((n, spec.dim))
        x = means[conds] + np.sqrt(scales[conds])[:, None] * eps
    elif spec.kind == "two-moons":
        phi = np.pi * rng.uniform(n)
        eps = rng.standard_normal((n, 2))
        upper = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        lower = np.stack([1.0 - np.cos(phi), 0.5 - np.sin(phi)], axis=1)
        x = np.where((conds == 0)[:, None], upper, lower) + spec.noise * eps
    else:  # rings
        radii = 1.0 + conds.astype(np.float64)
        phi = 2.0 * np.pi * rng.uniform(n)
        eps = rng.standard_normal((n, 2))
        x = radii[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1) + spec.noise * eps
    q = lift_matrix(spec)
    if q is not None:
        x = x @ q.T
    return x, conds


def draw_pair(spec: DatasetSpec, rng: RngStream):
    """Draw one (x1, c) pair."""
    x, conds = draw_batch(spec, rng, 1)
    return x[0], int(conds[0])


def default_spec() -> DatasetSpec:
    """Canonical benchmark: 4-class 2-D Gaussian mixture at the corners."""
    return DatasetSpec(
        kind="gaussian-mixture",
        dim=2,
        num_classes=4,
        means=((-2.0, -2.0), (-2.0, 2.0), (2.0, -2.0), (2.0, 2.0)),
        cov_scales=(0.25, 0.25, 0.25, 0.25),
        seed=42,
    )


def default_benchmark_spec(lift_dim: int | None = 8) -> DatasetSpec:
    """Default benchmark lifted into `lift_dim` ambient dimensions."""
    return replace(default_spec(), lift_dim=lift_dim)


def class_mean(spec: DatasetSpec, k: int) -> np.ndarray:
    """Exact class-conditional mean in data space."""
    _require_mixture(spec)
    mu = np.asarray(spec.means[k], dtype=np.float64)
    q = lift_matrix(spec)
    return mu if q is None else q @ mu


def class_cov(spec: DatasetSpec, k: int) -> np.ndarray:
    """Exact class-conditional covariance in data space."""
    _require_mixture(spec)
    cov = spec.cov_scales[k] * np.eye(spec.dim)
    q = lift_matrix(spec)
    return cov if q is None else q @ cov @ q.T


def mixture_moments(spec: DatasetSpec):
    """Exact (mean, covariance) of the class-marginalized mixture."""
    _require_mixture(spec)
    k = spec.num_classes
    means = np.stack([class_mean(spec, i) for i in range(k)])
    mean = means.mean(axis=0)
    cov = np.zeros((spec.data_dim, spec.data_dim))
    for i in range(k):
        d = means[i] - mean
        cov += (class_cov(spec, i) + np.outer(d, d)) / k
    return mean, cov


def _require_mixture(spec: DatasetSpec) -> None:
    if spec.kind != "gaussian-mixture":
        raise ValueError(f"operation requires a gaussian-mixture spec, got {spec.kind!r}")
