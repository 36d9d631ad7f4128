"""Linear codec between data space and the latent space where flows run.

Three modes:
  identity         -- E = G = I, latent space is data space
  fixed-orthogonal -- E has seeded orthonormal rows, G = E^T
  linear-trained   -- E, G minimize mean squared reconstruction error over
                      drawn samples (principal-subspace solution via SVD)

All round-trip semantics are exact linear algebra, so encode/decode
behaviour is testable to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import DatasetSpec, draw_batch
from .numerics import RngStream

MODES = ("identity", "linear-trained", "fixed-orthogonal")


class RankDeficientError(ValueError):
    """Sample covariance cannot support the requested latent dimension."""


@dataclass(frozen=True)
class CodecConfig:
    data_dim: int
    latent_dim: int
    mode: str = "linear-trained"
    recon_weight: float = 1.0  # positive scale on the reconstruction objective;
    # the principal-subspace minimizer is invariant to it
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown codec mode {self.mode!r}; expected one of {MODES}")
        if not 1 <= self.latent_dim <= self.data_dim:
            raise ValueError(f"need 1 <= latent_dim <= data_dim, got "
                             f"{self.latent_dim} and {self.data_dim}")
        if self.mode == "identity" and self.latent_dim != self.data_dim:
            raise ValueError("identity mode requires latent_dim == data_dim")
        if self.recon_weight <= 0.0:
            raise ValueError("recon_weight must be positive")


@dataclass(eq=False)
class LatentCodec:
    """Encode matrix E (d x D) and decode matrix G (D x d)."""

    encode_mat: np.ndarray
    decode_mat: np.ndarray
    config: CodecConfig

    @property
    def data_dim(self) -> int:
        return self.encode_mat.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.encode_mat.shape[0]


def encode(codec: LatentCodec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (codec.data_dim,):
        raise ValueError(f"x must have shape ({codec.data_dim},), got {x.shape}")
    return codec.encode_mat @ x


def decode(codec: LatentCodec, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (codec.latent_dim,):
        raise ValueError(f"z must have shape ({codec.latent_dim},), got {z.shape}")
    return codec.decode_mat @ z


def encode_batch(codec: LatentCodec, x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) @ codec.encode_mat.T


def decode_batch(codec: LatentCodec, z: np.ndarray) -> np.ndarray:
    return np.asarray(z, dtype=np.float64) @ codec.decode_mat.T


def identity_codec(dim: int) -> LatentCodec:
    eye = np.eye(dim)
    cfg = CodecConfig(data_dim=dim, latent_dim=dim, mode="identity")
    return LatentCodec(encode_mat=eye.copy(), decode_mat=eye.copy(), config=cfg)


def fixed_orthogonal_codec(cfg: CodecConfig) -> LatentCodec:
    """Seeded random orthonormal rows; G = E^T."""
    if cfg.mode != "fixed-orthogonal":
        raise ValueError("config mode must be fixed-orthogonal")
    rng = RngStream(cfg.seed, 0x434F4445)  # reserved codec stream
    raw = rng.standard_normal((cfg.data_dim, cfg.latent_dim))
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))[None, :]
    return LatentCodec(encode_mat=q.T.copy(), decode_mat=q.copy(), config=cfg)


def fit_linear(spec: DatasetSpec, cfg: CodecConfig, num_samples: int, rng: RngStream) -> LatentCodec:
    """Least-squares linear autoencoder fit on drawn samples.

    The minimizer of mean ||x - G E x||^2 over rank-d maps is projection
    onto the top-d principal subspace of the samples; computed by SVD with
    a canonical sign convention so the fit is deterministic.
    """
    if cfg.mode != "linear-trained":
        raise ValueError("config mode must be linear-trained")
    if spec.data_dim != cfg.data_dim:
        raise ValueError(f"spec emits dim {spec.data_dim}, codec expects {cfg.data_dim}")
    if num_samples < 10 * cfg.data_dim:
        raise ValueError(f"need at least {10 * cfg.data_dim} samples, got {num_samples}")
    x, _ = draw_batch(spec, rng, num_samples)
    _, svals, vt = np.linalg.svd(x, full_matrices=False)
    if svals[cfg.latent_dim - 1] <= 1e-9 * max(svals[0], 1.0):
        raise RankDeficientError(
            f"sample covariance has rank < {cfg.latent_dim}; cannot fit latent basis")
    basis = vt[:cfg.latent_dim]
    # canonical sign: largest-magnitude entry of each basis row is positive
    lead = np.argmax(np.abs(basis), axis=1)
    basis = basis * np.sign(basis[np.arange(cfg.latent_dim), lead])[:, None]
    return LatentCodec(encode_mat=basis.copy(), decode_mat=basis.T.copy(), config=cfg)


def reconstruction_mse(codec: LatentCodec, x: np.ndarray) -> float:
    """Mean squared reconstruction error over rows of x."""
    x = np.asarray(x, dtype=np.float64)
    recon = decode_batch(codec, encode_batch(codec, x))
    return float(np.mean(np.sum((x - recon) ** 2, axis=1)))
