"""Conditioned velocity network with exact reverse-mode gradients.

A small tanh MLP maps [x, time_features(t), class_embedding(c)] to a
velocity of the same dimension as x. Conditioning is by input
concatenation; a dedicated learned embedding row (index K) represents the
"no condition" case so unconditional behaviour never aliases a real class.

Gradients are hand-derived backpropagation in float64, checked against
central finite differences by the test suite and the oracle self-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream

NULL_COND = -1  # batched encoding of "no condition"; None in scalar APIs


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    num_classes: int
    hidden_dim: int = 128
    num_hidden_layers: int = 3
    time_embed_freqs: int = 8
    cond_embed_dim: int = 16
    activation: str = "tanh"

    def __post_init__(self):
        for name in ("input_dim", "num_classes", "hidden_dim", "num_hidden_layers",
                     "time_embed_freqs", "cond_embed_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_classes > 64:
            raise ValueError("num_classes must be <= 64")
        if self.activation != "tanh":
            raise ValueError("tanh is the project-wide activation; got "
                             f"{self.activation!r}")

    @property
    def time_dim(self) -> int:
        return 1 + 2 * self.time_embed_freqs

    @property
    def feature_dim(self) -> int:
        return self.input_dim + self.time_dim + self.cond_embed_dim


@dataclass(eq=False)
class VectorFieldNet:
    """MLP parameters: per-layer weights/biases plus the embedding table.

    `weights[i]` has shape (fan_in, fan_out); the final layer is linear.
    `cond_embed` has shape (K+1, cond_embed_dim) with row K reserved for
    the null condition.
    """

    config: NetConfig
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    cond_embed: np.ndarray | None = None

    def param_arrays(self) -> list:
        """Flat (name, array) list in a fixed order shared with gradients."""
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        out.append(("cond_embed", self.cond_embed))
        return out

    def num_params(self) -> int:
        return sum(a.size for _, a in self.param_arrays())


@dataclass(eq=False)
class GradientBundle:
    """Gradient arrays shape-matched to a VectorFieldNet."""

    weights: list
    biases: list
    cond_embed: np.ndarray

    def param_arrays(self) -> list:
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        out.append(("cond_embed", self.cond_embed))
        return out


def zero_gradients(net: VectorFieldNet) -> GradientBundle:
    return GradientBundle(
        weights=[np.zeros_like(w) for w in net.weights],
        biases=[np.zeros_like(b) for b in net.biases],
        cond_embed=np.zeros_like(net.cond_embed),
    )


def init_net(config: NetConfig, rng: RngStream) -> VectorFieldNet:
    """Initialize weights ~ N(0, 1/fan_in), biases 0, embeddings ~ N(0, 0.02^2)."""
    dims = [config.feature_dim] + [config.hidden_dim] * config.num_hidden_layers + [config.input_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    embed = 0.02 * rng.standard_normal((config.num_classes + 1, config.cond_embed_dim))
    return VectorFieldNet(config=config, weights=weights, biases=biases, cond_embed=embed)


def time_features(t: float, num_freqs: int) -> np.ndarray:
    """[t, sin(pi t), cos(pi t), sin(2 pi t), cos(2 pi t), ...], dim 1 + 2F."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return _time_features_batch(np.asarray([t], dtype=np.float64), num_freqs)[0]


def _time_features_batch(t: np.ndarray, num_freqs: int) -> np.ndarray:
    freqs = np.pi * (2.0 ** np.arange(num_freqs))
    angles = t[:, None] * freqs[None, :]
    out = np.empty((t.shape[0], 1 + 2 * num_freqs))
    out[:, 0] = t
    out[:, 1::2] = np.sin(angles)
    out[:, 2::2] = np.cos(angles)
    return out


def _cond_indices(conds, n: int, num_classes: int) -> np.ndarray:
    """Normalize conds (None / int / array with NULL_COND) to embedding rows."""
    if conds is None:
        idx = np.full(n, num_classes, dtype=np.intp)
    else:
        idx = np.asarray(conds)
        if idx.ndim == 0:
            idx = np.full(n, int(idx), dtype=np.intp)
        else:
            idx = idx.astype(np.intp).copy()
        if np.any(idx >= num_classes) or np.any(idx < NULL_COND):
            raise ValueError(f"conditions must lie in [0, {num_classes}) or be null")
        idx[idx == NULL_COND] = num_classes
    return idx


def _features(net: VectorFieldNet, x: np.ndarray, t: np.ndarray, idx: np.ndarray) -> np.ndarray:
    tf = _time_features_batch(t, net.config.time_embed_freqs)
    return np.concatenate([x, tf, net.cond_embed[idx]], axis=1)


def _forward_cached(net: VectorFieldNet, feats: np.ndarray):
    """Forward pass keeping post-activation values for backprop."""
    hs = [feats]
    h = feats
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.tanh(h @ w + b)
        hs.append(h)
    out = h @ net.weights[-1] + net.biases[-1]
    return out, hs


def forward(net: VectorFieldNet, x: np.ndarray, t: float, cond: int | None) -> np.ndarray:
    """Velocity prediction for a single state; cond None selects the null row."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.config.input_dim,):
        raise ValueError(f"x must have shape ({net.config.input_dim},), got {x.shape}")
    cond_arr = None if cond is None else np.asarray([cond])
    return forward_batch(net, x[None, :], np.asarray([t]), cond_arr)[0]


def forward_batch(net: VectorFieldNet, x: np.ndarray, t, conds) -> np.ndarray:
    """Vectorized forward pass.

    x: (n, input_dim); t: scalar or (n,); conds: None (all null), scalar,
    or (n,) ints where NULL_COND marks the null condition.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if x.shape[1] != net.config.input_dim:
        raise ValueError(f"x has dim {x.shape[1]}, net expects {net.config.input_dim}")
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    idx = _cond_indices(conds, n, net.config.num_classes)
    out, _ = _forward_cached(net, _features(net, x, t, idx))
    return out


def batch_loss(net: VectorFieldNet, x_t, t, conds, v_t) -> float:
    """Mean squared velocity-regression error over a batch."""
    pred = forward_batch(net, x_t, t, conds)
    resid = pred - np.asarray(v_t, dtype=np.float64)
    return float(np.mean(np.sum(resid * resid, axis=1)))


def loss_and_grad_arrays(net: VectorFieldNet, x_t, t, conds, v_t):
    """Loss plus exact gradients for array-form batches.

    Loss is mean_i ||u(x_i, t_i, c_i) - v_i||^2; gradients are the exact
    reverse-mode derivatives of that mean.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    v_t = np.asarray(v_t, dtype=np.float64)
    n = x_t.shape[0]
    if n == 0:
        raise ValueError("batch must be non-empty")
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    idx = _cond_indices(conds, n, net.config.num_classes)
    feats = _features(net, x_t, t, idx)
    out, hs = _forward_cached(net, feats)

    resid = out - v_t
    loss = float(np.mean(np.sum(resid * resid, axis=1)))
    grads = zero_gradients(net)

    # output layer is linear
    delta = (2.0 / n) * resid
    grads.weights[-1][:] = hs[-1].T @ delta
    grads.biases[-1][:] = delta.sum(axis=0)
    upstream = delta @ net.weights[-1].T
    # hidden layers: d tanh(z) = 1 - h^2, taken from the cached activations
    for layer in range(len(net.weights) - 2, -1, -1):
        delta = upstream * (1.0 - hs[layer + 1] ** 2)
        grads.weights[layer][:] = hs[layer].T @ delta
        grads.biases[layer][:] = delta.sum(axis=0)
        upstream = delta @ net.weights[layer].T
    # embedding rows receive the tail block of the input-feature gradient
    d_embed = upstream[:, net.config.input_dim + net.config.time_dim:]
    np.add.at(grads.cond_embed, idx, d_embed)
    return loss, grads


def loss_and_grad(net: VectorFieldNet, batch):
    """Loss and exact gradients for a list of PathSample-like entries."""
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be non-empty")
    x_t = np.stack([s.x_t for s in batch])
    v_t = np.stack([s.v_t for s in batch])
    t = np.asarray([s.t for s in batch])
    conds = np.asarray([NULL_COND if s.cond is None else s.cond for s in batch])
    return loss_and_grad_arrays(net, x_t, t, conds, v_t)


def _loss_extended(net: VectorFieldNet, x_t, t, idx, v_t) -> np.longdouble:
    """Scripted batch loss in extended precision.

    A deliberately independent forward pass (own feature assembly, own
    accumulation, x86 80-bit floats) so the finite-difference oracle does
    not share an arithmetic path, or a rounding floor, with backprop.
    """
    ld = np.longdouble
    tl = np.asarray(t, dtype=ld)
    freqs = np.asarray(np.pi * (2.0 ** np.arange(net.config.time_embed_freqs)), dtype=ld)
    angles = tl[:, None] * freqs[None, :]
    tf = np.empty((tl.shape[0], net.config.time_dim), dtype=ld)
    tf[:, 0] = tl
    tf[:, 1::2] = np.sin(angles)
    tf[:, 2::2] = np.cos(angles)
    h = np.concatenate([np.asarray(x_t, dtype=ld), tf,
                        net.cond_embed.astype(ld)[idx]], axis=1)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.tanh(h @ w.astype(ld) + b.astype(ld))
    out = h @ net.weights[-1].astype(ld) + net.biases[-1].astype(ld)
    resid = out - np.asarray(v_t, dtype=ld)
    return np.mean(np.sum(resid * resid, axis=1))


def finite_difference_grads(net: VectorFieldNet, x_t, t, conds, v_t, h: float = 1e-5) -> GradientBundle:
    """Central-difference gradients of the batch loss; the independent oracle
    for the analytic backprop above. O(num_params) loss evaluations."""
    n = np.asarray(x_t).shape[0]
    idx = _cond_indices(conds, n, net.config.num_classes)
    grads = zero_gradients(net)
    for (_, param), (_, out) in zip(net.param_arrays(), grads.param_arrays()):
        flat_p = param.reshape(-1)
        flat_g = out.reshape(-1)
        for j in range(flat_p.size):
            orig = flat_p[j]
            flat_p[j] = orig + h
            up = _loss_extended(net, x_t, t, idx, v_t)
            flat_p[j] = orig - h
            down = _loss_extended(net, x_t, t, idx, v_t)
            flat_p[j] = orig
            flat_g[j] = float((up - down) / np.longdouble(2.0 * h))
    return grads


def gradient_check(net: VectorFieldNet, x_t, t, conds, v_t, h: float = 1e-5) -> float:
    """Max relative disagreement between analytic and finite-difference grads."""
    _, analytic = loss_and_grad_arrays(net, x_t, t, conds, v_t)
    numeric = finite_difference_grads(net, x_t, t, conds, v_t, h=h)
    worst = 0.0
    for (_, a), (_, f) in zip(analytic.param_arrays(), numeric.param_arrays()):
        rel = np.abs(a - f) / (np.abs(a) + np.abs(f) + 1e-8)
        worst = max(worst, float(rel.max()))
    return worst
