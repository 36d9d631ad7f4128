"""Velocity-regression training with AdamW and condition dropout.

Each step draws (x1, c) pairs, encodes them through the latent codec,
replaces the condition with NULL independently per sample at the dropout
probability, builds conditional path samples, and applies one AdamW
update with decoupled weight decay. The NULL embedding row is exempt from
decay so unconditional predictions do not drift toward a shrinking token.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import datasets, evaluation, fm_path, latent_codec, vector_field
from .datasets import DatasetSpec
from .evaluation import BruteForceConfig
from .fm_path import PathConfig
from .numerics import RngStream
from .vector_field import NULL_COND, VectorFieldNet


class NanLossError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"training loss became non-finite at step {step}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 64
    num_steps: int = 20_000
    cond_dropout_prob: float = 0.10
    eval_every: int = 1000
    seed: int = 42

    def __post_init__(self):
        # dropout 1.0 and learning rate 0 are degenerate but legal: they
        # exercise the all-unconditional and no-update diagnostic cases
        if not 0.0 <= self.cond_dropout_prob <= 1.0:
            raise ValueError("cond_dropout_prob must lie in [0, 1]")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.num_steps < 0 or self.eval_every < 1:
            raise ValueError("batch_size >= 1, num_steps >= 0, eval_every >= 1 required")
        if not (0.0 <= self.betas[0] < 1.0 and 0.0 <= self.betas[1] < 1.0):
            raise ValueError("betas must lie in [0, 1)")


@dataclass(eq=False)
class AdamWState:
    """First/second moment arrays mirroring the net parameters."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0


def init_adamw(net: VectorFieldNet) -> AdamWState:
    return AdamWState(
        m=[np.zeros_like(a) for _, a in net.param_arrays()],
        v=[np.zeros_like(a) for _, a in net.param_arrays()],
        step=0,
    )


def adamw_update(net: VectorFieldNet, grads, state: AdamWState, cfg: TrainConfig) -> None:
    """One decoupled-weight-decay AdamW step, in place."""
    state.step += 1
    b1, b2 = cfg.betas
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step
    decay = cfg.learning_rate * cfg.weight_decay
    for i, ((name, p), (_, g)) in enumerate(zip(net.param_arrays(), grads.param_arrays())):
        m, v = state.m[i], state.v[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        if decay:
            if name == "cond_embed":
                p[: net.config.num_classes] *= 1.0 - decay  # null row exempt
            else:
                p *= 1.0 - decay
        p -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)


def _draw_training_batch(spec: DatasetSpec, path_cfg: PathConfig, cfg: TrainConfig,
                         rng: RngStream, codec, n: int):
    """Shared draw pipeline: pairs, encode, dropout, path. Fixed draw order."""
    x1, conds = datasets.draw_batch(spec, rng, n)
    z1 = x1 if codec is None else latent_codec.encode_batch(codec, x1)
    if cfg.cond_dropout_prob > 0.0:
        dropped = rng.uniform(n) < cfg.cond_dropout_prob
        conds = np.where(dropped, NULL_COND, conds)
    _, t, z_t, v_t = fm_path.sample_path_batch(z1, conds, path_cfg, rng)
    return z_t, t, conds, v_t


def train_step(net: VectorFieldNet, opt_state: AdamWState, spec: DatasetSpec,
               path_cfg: PathConfig, cfg: TrainConfig, rng: RngStream,
               codec=None) -> float:
    """One optimizer step; returns the pre-update batch loss."""
    z_t, t, conds, v_t = _draw_training_batch(spec, path_cfg, cfg, rng, codec, cfg.batch_size)
    loss, grads = vector_field.loss_and_grad_arrays(net, z_t, t, conds, v_t)
    adamw_update(net, grads, opt_state, cfg)
    return loss


@dataclass(eq=False)
class TrainResult:
    losses: np.ndarray
    wall_ms: np.ndarray
    null_draws: int
    total_draws: int


def train(net: VectorFieldNet, opt_state: AdamWState, spec: DatasetSpec,
          path_cfg: PathConfig, cfg: TrainConfig, rng: RngStream,
          codec=None, on_eval=None) -> TrainResult:
    """Run cfg.num_steps training steps.

    `on_eval(step)` fires every `eval_every` steps and after the last one.
    Raises NanLossError naming the step if the loss leaves the reals.
    """
    losses = np.empty(cfg.num_steps)
    wall = np.empty(cfg.num_steps)
    null_draws = 0
    start = time.perf_counter()
    for i in range(cfg.num_steps):
        z_t, t, conds, v_t = _draw_training_batch(spec, path_cfg, cfg, rng, codec, cfg.batch_size)
        null_draws += int(np.sum(conds == NULL_COND))
        loss, grads = vector_field.loss_and_grad_arrays(net, z_t, t, conds, v_t)
        if not np.isfinite(loss):
            raise NanLossError(i + 1)
        adamw_update(net, grads, opt_state, cfg)
        losses[i] = loss
        wall[i] = (time.perf_counter() - start) * 1e3
        step = i + 1
        if on_eval is not None and (step % cfg.eval_every == 0 or step == cfg.num_steps):
            on_eval(step)
    return TrainResult(losses=losses, wall_ms=wall, null_draws=null_draws,
                       total_draws=cfg.num_steps * cfg.batch_size)


def evaluate_loss(net: VectorFieldNet, spec: DatasetSpec, path_cfg: PathConfig,
                  cfg: TrainConfig, rng: RngStream, codec=None, n: int = 10_000) -> float:
    """Held-out loss on fresh draws from the training distribution."""
    z_t, t, conds, v_t = _draw_training_batch(spec, path_cfg, cfg, rng, codec, n)
    return vector_field.batch_loss(net, z_t, t, conds, v_t)


# ---------------------------------------------------------------------------
# Irreducible-loss oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FloorEstimate:
    """Monte-Carlo estimate of E[Var(v | x_t, t, c)] with its standard error."""

    value: float
    mc_std: float
    num_mc: int


def loss_floor_estimate(spec: DatasetSpec, path_cfg: PathConfig, num_mc: int,
                        rng: RngStream, codec=None, cond_dropout_prob: float = 0.10,
                        bf: BruteForceConfig | None = None) -> FloorEstimate:
    """Estimate the irreducible training loss by brute-force conditioning.

    Draws (x1, c, t, x0) exactly like training, asks the brute-force
    oracle for the exact minimizer E[v | x_t, t, c] at every draw, and
    averages the squared residual. NULL-conditioned draws use the full
    mixture as their target.
    """
    if num_mc < 1000:
        raise ValueError("num_mc must be >= 1000")
    if codec is None:
        codec = latent_codec.identity_codec(spec.data_dim)
    if bf is None:
        bf = BruteForceConfig(points_per_dim=121)

    x1, conds = datasets.draw_batch(spec, rng, num_mc)
    z1 = latent_codec.encode_batch(codec, x1)
    if cond_dropout_prob > 0.0:
        dropped = rng.uniform(num_mc) < cond_dropout_prob
        conds = np.where(dropped, NULL_COND, conds)
    t = rng.uniform(num_mc)
    while np.any(t == 0.0):  # brute oracle is undefined at exactly t=0
        zero = t == 0.0
        t[zero] = rng.uniform(int(zero.sum()))
    x0 = rng.standard_normal(z1.shape)
    a = 1.0 - (1.0 - path_cfg.sigma_min) * t
    z_t = a[:, None] * x0 + t[:, None] * z1
    v_t = z1 - (1.0 - path_cfg.sigma_min) * x0

    sq_resid = np.empty(num_mc)
    for k in range(spec.num_classes):
        mask = conds == k
        if not np.any(mask):
            continue
        target = evaluation.latent_class_target(spec, codec, k)
        m = evaluation.oracle_brute_field_batch(target, path_cfg, z_t[mask], t[mask], bf)
        sq_resid[mask] = np.sum((v_t[mask] - m) ** 2, axis=1)
    mask = conds == NULL_COND
    if np.any(mask):
        target = evaluation.latent_mixture_target(spec, codec)
        m = evaluation.oracle_brute_field_batch(target, path_cfg, z_t[mask], t[mask], bf)
        sq_resid[mask] = np.sum((v_t[mask] - m) ** 2, axis=1)

    value = float(np.mean(sq_resid))
    mc_std = float(np.std(sq_resid, ddof=1) / np.sqrt(num_mc))
    return FloorEstimate(value=value, mc_std=mc_std, num_mc=num_mc)


def loss_floor(spec: DatasetSpec, path_cfg: PathConfig, num_mc: int, rng: RngStream,
               codec=None, cond_dropout_prob: float = 0.10) -> float:
    """Point estimate of the irreducible loss; see loss_floor_estimate."""
    return loss_floor_estimate(spec, path_cfg, num_mc, rng, codec=codec,
                               cond_dropout_prob=cond_dropout_prob).value
