"""Metrics, analytic and brute-force field oracles, and ablation sweeps.

The brute-force conditional-expectation oracle is the ground truth of
record for fields: it integrates the posterior over the prior draw
numerically and never consults a closed form. The closed-form Gaussian
marginal field is a derived convenience that must agree with it (the
oracle self-check and the acceptance suite enforce this before any
quantitative run relies on the formula).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import datasets, fm_path, latent_codec, sampler, vector_field
from .datasets import DatasetSpec
from .fm_path import PathConfig
from .numerics import RngStream, worker_count
from .sampler import GuidanceConfig, SolverConfig

_LOG_2PI = np.log(2.0 * np.pi)

# fixed child ids so sweeps are paired across settings and reruns
_SETTING_CHILD = 0xE7A1
_LOSS_CHILD = 0x10E5


class UnsupportedMetricError(ValueError):
    """Metric is undefined for this dataset kind."""


class NumericalUnderflowError(ArithmeticError):
    """All posterior weights underflowed; the query has no mass."""


# ---------------------------------------------------------------------------
# Gaussian fits and the Frechet metric
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GaussianFit:
    """Mean vector and symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class MetricReport:
    """Metrics of one evaluation run at a fixed (w, N) setting."""

    frechet: float
    mode_accuracy: float
    mean_loss: float
    n_samples: int
    w: float
    num_steps: int
    sigma_min: float
    seed: int


def fit_gaussian(samples: np.ndarray) -> GaussianFit:
    """Sample mean and unbiased, symmetrized sample covariance."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("samples must be an (n, d) array")
    n, d = x.shape
    if n < d + 1:
        raise ValueError(f"need at least {d + 1} samples to fit a {d}-D Gaussian, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianFit(mean=mean, cov=cov)


def _check_cov(cov: np.ndarray, side: str) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{side} covariance must be square")
    if np.max(np.abs(cov - cov.T)) > 1e-10:
        raise ValueError(f"{side} covariance is not symmetric to 1e-10")
    if np.linalg.eigvalsh(cov).min() < -1e-10:
        raise ValueError(f"{side} covariance is not PSD (eigenvalue below -1e-10)")
    return cov


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_gaussian(a: GaussianFit, b: GaussianFit) -> float:
    """||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    The cross square root is taken through the symmetrized product
    S_a^{1/2} S_b S_a^{1/2}; eigenvalues are clamped at zero to absorb
    PSD drift of order 1e-10.
    """
    if a.mean.shape != b.mean.shape:
        raise ValueError("fits must have equal dimension")
    cov_a = _check_cov(a.cov, "first")
    cov_b = _check_cov(b.cov, "second")
    root_a = _psd_sqrt(cov_a)
    cross = root_a @ cov_b @ root_a
    cross_vals = np.clip(np.linalg.eigvalsh(cross), 0.0, None)
    diff = np.asarray(a.mean, dtype=np.float64) - np.asarray(b.mean, dtype=np.float64)
    fd = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sum(np.sqrt(cross_vals)))
    return max(fd, 0.0)


def mode_accuracy(samples: np.ndarray, conds: np.ndarray, spec: DatasetSpec) -> float:
    """Fraction of samples whose nearest class mean is their conditioning class."""
    if spec.kind != "gaussian-mixture":
        raise UnsupportedMetricError(f"mode_accuracy requires a gaussian-mixture spec, got {spec.kind!r}")
    x = np.asarray(samples, dtype=np.float64)
    conds = np.asarray(conds)
    if x.shape[0] != conds.shape[0]:
        raise ValueError("samples and conds must have equal length")
    means = np.stack([datasets.class_mean(spec, k) for k in range(spec.num_classes)])
    d2 = np.sum((x[:, None, :] - means[None, :, :]) ** 2, axis=2)
    return float(np.mean(np.argmin(d2, axis=1) == conds))


# ---------------------------------------------------------------------------
# Target distributions for the oracles
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GaussianTarget:
    """Full-covariance Gaussian with batched log-density and sampling."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = _check_cov(self.cov, "target")
        self._chol = np.linalg.cholesky(self.cov + 1e-14 * np.eye(self.cov.shape[0]))
        self._logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        sol = np.linalg.solve(self._chol, (x - self.mean).T)
        return -0.5 * (np.sum(sol * sol, axis=0) + self.dim * _LOG_2PI + self._logdet)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        return self.mean + rng.standard_normal((n, self.dim)) @ self._chol.T


@dataclass(eq=False)
class MixtureTarget:
    """Finite Gaussian mixture."""

    means: np.ndarray  # (K, d)
    covs: np.ndarray  # (K, d, d)
    weights: np.ndarray  # (K,)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covs = np.asarray(self.covs, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.isclose(self.weights.sum(), 1.0):
            raise ValueError("mixture weights must sum to 1")
        self._components = [GaussianTarget(m, c) for m, c in zip(self.means, self.covs)]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        parts = np.stack([np.log(w) + c.log_pdf(x)
                          for w, c in zip(self.weights, self._components)])
        top = np.max(parts, axis=0)
        safe = np.where(np.isfinite(top), top, 0.0)
        return np.log(np.sum(np.exp(parts - safe), axis=0)) + safe

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        u = rng.uniform(n)
        comp = np.searchsorted(np.cumsum(self.weights), u)
        comp = np.clip(comp, 0, len(self.weights) - 1)
        eps = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        for k, c in enumerate(self._components):
            mask = comp == k
            out[mask] = c.mean + eps[mask] @ c._chol.T
        return out


@dataclass(eq=False)
class PointMassTarget:
    """Degenerate target: all mass at one point (zero density elsewhere)."""

    point: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        hit = np.all(x == self.point, axis=1)
        return np.where(hit, 0.0, -np.inf)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        return np.tile(self.point, (n, 1))


def _as_target(target):
    if hasattr(target, "log_pdf"):
        return target
    if isinstance(target, GaussianFit):
        return GaussianTarget(target.mean, target.cov)
    raise ValueError(f"cannot interpret {type(target).__name__} as a target distribution")


def latent_class_fit(spec: DatasetSpec, codec, k: int) -> GaussianFit:
    """Exact class-conditional Gaussian in codec latent space."""
    e = codec.encode_mat
    return GaussianFit(mean=e @ datasets.class_mean(spec, k),
                       cov=e @ datasets.class_cov(spec, k) @ e.T)


def data_class_fit(spec: DatasetSpec, k: int) -> GaussianFit:
    """Exact class-conditional Gaussian in data space."""
    return GaussianFit(mean=datasets.class_mean(spec, k), cov=datasets.class_cov(spec, k))


def latent_class_target(spec: DatasetSpec, codec, k: int) -> GaussianTarget:
    fit = latent_class_fit(spec, codec, k)
    return GaussianTarget(fit.mean, fit.cov)


def latent_mixture_target(spec: DatasetSpec, codec) -> MixtureTarget:
    fits = [latent_class_fit(spec, codec, k) for k in range(spec.num_classes)]
    return MixtureTarget(
        means=np.stack([f.mean for f in fits]),
        covs=np.stack([f.cov for f in fits]),
        weights=np.full(spec.num_classes, 1.0 / spec.num_classes),
    )


# ---------------------------------------------------------------------------
# Field oracles
# ---------------------------------------------------------------------------

def oracle_gaussian_field(target: GaussianFit, path_cfg: PathConfig, x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form marginal field for a diagonal-covariance Gaussian target.

    With a_t = 1 - (1 - sigma_min) t, per-dimension path scale
    s_t = sqrt(a_t^2 + t^2 var) and path mean m_t = t mu, the field is
    (ds_t/dt / s_t) (x - m_t) + mu. Validate against the brute-force
    oracle before relying on it quantitatively.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    mean = np.asarray(target.mean, dtype=np.float64)
    cov = _check_cov(target.cov, "target")
    var = np.diag(cov).copy()
    off = cov - np.diag(var)
    if np.max(np.abs(off)) > 1e-8 * max(1.0, float(var.max())):
        raise ValueError("oracle_gaussian_field requires an isotropic or diagonal covariance")
    x = np.asarray(x, dtype=np.float64)
    beta = 1.0 - path_cfg.sigma_min
    a = 1.0 - beta * t
    s_sq = a * a + t * t * var  # (d,)
    sdot_s = -beta * a + t * var  # s * ds/dt, per dimension
    return (sdot_s / s_sq) * (x - t * mean) + mean


@dataclass(frozen=True)
class BruteForceConfig:
    """Quadrature parameters for the brute-force conditional expectation."""

    mode: str = "grid"  # grid | mc
    radius: float = 6.0
    points_per_dim: int = 161
    mc_samples: int = 100_000
    mc_seed: int = 20_240_001
    switch_t: float = 0.5  # integrate over x1 below, over x0 at or above

    def __post_init__(self):
        if self.mode not in ("grid", "mc"):
            raise ValueError("mode must be 'grid' or 'mc'")
        if self.points_per_dim < 9:
            raise ValueError("points_per_dim must be >= 9")


def _grid_points(dim: int, bf: BruteForceConfig) -> np.ndarray:
    axis = np.linspace(-bf.radius, bf.radius, bf.points_per_dim)
    if dim == 1:
        return axis[:, None]
    if dim == 2:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)
    raise ValueError("grid mode supports dim <= 2")


def _weighted_mean(logw: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Normalized weighted average per row; raises if a row has no mass."""
    top = np.max(logw, axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise NumericalUnderflowError("all posterior weights underflowed for at least one query")
    w = np.exp(logw - top)
    total = w.sum(axis=1)
    return np.einsum("bg,bgd->bd", w, values) / total[:, None]


def oracle_brute_field_batch(target, path_cfg: PathConfig, x: np.ndarray, t: np.ndarray,
                             bf: BruteForceConfig = BruteForceConfig()) -> np.ndarray:
    """Brute-force E[v | x_t = x, t] for a batch of queries.

    Numerically averages v = x1 - (1 - sigma_min) x0 under the posterior
    weight p0(x0) * p1(x1) on the path constraint x = a_t x0 + t x1. The
    integration variable is x0 for t >= switch_t and x1 below it (the same
    integral under the change of variables); both stay resolvable on a
    fixed grid across their t-range.
    """
    target = _as_target(target)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (x.shape[0],))
    if np.any(t <= 0.0) or np.any(t > 1.0):
        raise ValueError("brute-force oracle requires t in (0, 1]; the field is "
                         "undefined at t=0 where x_t pins x0, not x1")
    dim = x.shape[1]
    beta = 1.0 - path_cfg.sigma_min
    out = np.empty_like(x)
    if bf.mode == "mc":
        rng = RngStream(bf.mc_seed, 0)
        x1 = target.sample(rng, bf.mc_samples)  # (m, d)
        for b in range(x.shape[0]):
            a = 1.0 - beta * t[b]
            resid = (x[b][None, :] - t[b] * x1) / a
            logw = -0.5 * np.sum(resid * resid, axis=1) - dim * np.log(a)
            v = x1 - beta * resid
            out[b] = _weighted_mean(logw[None, :], v[None, :, :])[0]
        return out

    grid = _grid_points(dim, bf)  # (g, d)
    log_p0_grid = -0.5 * np.sum(grid * grid, axis=1)  # x0-grid prior weight
    log_p1_grid = target.log_pdf(grid)  # x1-grid target weight
    chunk = max(1, int(4e6 // grid.shape[0]))
    for start in range(0, x.shape[0], chunk):
        sl = slice(start, min(start + chunk, x.shape[0]))
        xb, tb = x[sl], t[sl]
        ab = 1.0 - beta * tb
        lo = tb < bf.switch_t
        if np.any(~lo):
            xq, tq, aq = xb[~lo], tb[~lo], ab[~lo]
            x1 = (xq[:, None, :] - aq[:, None, None] * grid[None, :, :]) / tq[:, None, None]
            logw = log_p0_grid[None, :] + target.log_pdf(x1.reshape(-1, dim)).reshape(x1.shape[:2])
            v = x1 - beta * grid[None, :, :]
            out[sl][~lo] = _weighted_mean(logw, v)
        if np.any(lo):
            xq, tq, aq = xb[lo], tb[lo], ab[lo]
            x0 = (xq[:, None, :] - tq[:, None, None] * grid[None, :, :]) / aq[:, None, None]
            logw = log_p1_grid[None, :] - 0.5 * np.sum(x0 * x0, axis=2)
            v = grid[None, :, :] - beta * x0
            out[sl][lo] = _weighted_mean(logw, v)
    return out


def oracle_brute_field(target, path_cfg: PathConfig, x: np.ndarray, t: float,
                       bf: BruteForceConfig = BruteForceConfig()) -> np.ndarray:
    """Brute-force conditional-expectation field at a single query point."""
    x = np.asarray(x, dtype=np.float64)
    return oracle_brute_field_batch(target, path_cfg, x[None, :], np.asarray([t]), bf)[0]


def oracle_field_agreement(target: GaussianFit, path_cfg: PathConfig,
                           t_values=None, points_per_axis: int = 5,
                           bf: BruteForceConfig = BruteForceConfig()) -> float:
    """Max-abs disagreement between the closed form and brute force.

    Queries cover mean +- 3 sigma of the path marginal per axis, for each
    t in t_values (default 0.1 .. 0.9).
    """
    if t_values is None:
        t_values = np.linspace(0.1, 0.9, 9)
    mean = np.asarray(target.mean, dtype=np.float64)
    var = np.diag(np.asarray(target.cov, dtype=np.float64))
    worst = 0.0
    for t in t_values:
        a = 1.0 - (1.0 - path_cfg.sigma_min) * t
        scale = np.sqrt(a * a + t * t * var)
        axes = [np.linspace(t * mean[i] - 3 * scale[i], t * mean[i] + 3 * scale[i],
                            points_per_axis) for i in range(mean.shape[0])]
        mesh = np.meshgrid(*axes, indexing="ij")
        queries = np.stack([m.ravel() for m in mesh], axis=1)
        closed = np.stack([oracle_gaussian_field(target, path_cfg, q, t) for q in queries])
        brute = oracle_brute_field_batch(target, path_cfg, queries, np.full(len(queries), t), bf)
        worst = max(worst, float(np.max(np.abs(closed - brute))))
    return worst


def euler_order_slope(target: GaussianFit, path_cfg: PathConfig,
                      n_values=(8, 16, 32, 64, 128), ref_steps: int = 4096,
                      n_chains: int = 16, seed: int = 123):
    """Empirical convergence order of the Euler scheme on the oracle field.

    Returns (order, errors): terminal-state error against an N=ref_steps
    reference, and the fitted p in error ~ N^-p.
    """
    dim = np.asarray(target.mean).shape[0]
    x0 = RngStream(seed, 0xE43).standard_normal((n_chains, dim))

    def field(x, t):
        return np.stack([oracle_gaussian_field(target, path_cfg, row, t) for row in x])

    ref = sampler.integrate_batch(field, x0, SolverConfig(num_steps=ref_steps, scheme="euler"))
    errors = []
    for n in n_values:
        term = sampler.integrate_batch(field, x0, SolverConfig(num_steps=n, scheme="euler"))
        errors.append(float(np.mean(np.linalg.norm(term - ref, axis=1))))
    slope = np.polyfit(np.log(np.asarray(n_values, dtype=float)), np.log(errors), 1)[0]
    return float(-slope), errors


# ---------------------------------------------------------------------------
# Ablation sweeps
# ---------------------------------------------------------------------------

def _class_counts(n: int, num_classes: int) -> np.ndarray:
    counts = np.full(num_classes, n // num_classes)
    counts[: n % num_classes] += 1
    return counts


def sample_all_classes(net, codec, g: GuidanceConfig, solver: SolverConfig,
                       n: int, eval_rng: RngStream):
    """n decoded samples split near-uniformly over classes, grouped by class."""
    counts = _class_counts(n, net.config.num_classes)
    chunks, conds = [], []
    for k, count in enumerate(counts):
        if count == 0:
            continue
        chunks.append(sampler.sample(net, k, g, solver, codec, int(count), eval_rng.split(k)))
        conds.append(np.full(int(count), k))
    return np.concatenate(chunks), np.concatenate(conds)


def _mixture_fit(spec: DatasetSpec, counts: np.ndarray) -> GaussianFit:
    weights = counts / counts.sum()
    means = np.stack([datasets.class_mean(spec, k) for k in range(spec.num_classes)])
    mean = weights @ means
    cov = np.zeros((spec.data_dim, spec.data_dim))
    for k in range(spec.num_classes):
        d = means[k] - mean
        cov += weights[k] * (datasets.class_cov(spec, k) + np.outer(d, d))
    return GaussianFit(mean=mean, cov=cov)


def evaluate_setting(net, codec, spec: DatasetSpec, path_cfg: PathConfig,
                     g: GuidanceConfig, solver: SolverConfig, n: int,
                     rng: RngStream) -> MetricReport:
    """One MetricReport: sample all classes, compare against exact moments."""
    eval_rng = rng.split(_SETTING_CHILD)
    samples, conds = sample_all_classes(net, codec, g, solver, n, eval_rng)
    fit = fit_gaussian(samples)
    truth = _mixture_fit(spec, _class_counts(n, net.config.num_classes))
    fd = frechet_gaussian(fit, truth)
    acc = mode_accuracy(samples, conds, spec)

    loss_rng = rng.split(_LOSS_CHILD)
    x1, cs = datasets.draw_batch(spec, loss_rng, 4096)
    z1 = latent_codec.encode_batch(codec, x1)
    _, t, z_t, v_t = fm_path.sample_path_batch(z1, cs, path_cfg, loss_rng)
    loss = vector_field.batch_loss(net, z_t, t, cs, v_t)

    return MetricReport(frechet=fd, mode_accuracy=acc, mean_loss=loss,
                        n_samples=n, w=g.w, num_steps=solver.num_steps,
                        sigma_min=path_cfg.sigma_min, seed=rng.seed)


def run_guidance_sweep(net, codec, spec: DatasetSpec, path_cfg: PathConfig,
                       w_list, num_steps: int, n: int, rng: RngStream):
    """One report per guidance scale at fixed step count, paired seeds."""
    solver = SolverConfig(num_steps=num_steps, scheme="euler")
    settings = [(GuidanceConfig(w=w), solver) for w in w_list]
    return _run_settings(net, codec, spec, path_cfg, settings, n, rng)


def run_step_sweep(net, codec, spec: DatasetSpec, path_cfg: PathConfig,
                   n_list, w: float, n: int, rng: RngStream):
    """One report per step count at fixed guidance scale, paired seeds."""
    g = GuidanceConfig(w=w)
    settings = [(g, SolverConfig(num_steps=int(num), scheme="euler")) for num in n_list]
    return _run_settings(net, codec, spec, path_cfg, settings, n, rng)


def _run_settings(net, codec, spec, path_cfg, settings, n, rng):
    # every setting derives the same child streams from `rng`, so prior
    # draws are paired across settings; threads only change scheduling
    def one(setting):
        g, solver = setting
        return evaluate_setting(net, codec, spec, path_cfg, g, solver, n, rng)

    max_workers = min(worker_count(), len(settings))
    if max_workers <= 1:
        return [one(s) for s in settings]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, settings))


def reports_to_rows(reports) -> list:
    return [asdict(r) for r in reports]


REPORT_FIELDS = ("frechet", "mode_accuracy", "mean_loss", "n_samples",
                 "w", "num_steps", "sigma_min", "seed")


def write_reports_csv(reports, path) -> None:
    lines = [",".join(REPORT_FIELDS)]
    for r in reports:
        row = asdict(r)
        lines.append(",".join(repr(row[f]) if isinstance(row[f], float) else str(row[f])
                              for f in REPORT_FIELDS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_reports_json(reports, path) -> None:
    import json

    with open(path, "w") as fh:
        fh.write(json.dumps(reports_to_rows(reports), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Oracle self-checks (used by the CLI oracle-check command)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    tolerance: str
    detail: str


def self_check(corrupt: str | None = None, quick: bool = False) -> list:
    """Run the oracle cross-validation, Euler-order, and gradient checks.

    `corrupt` deliberately breaks the named check (test hook for the
    failure path); None runs everything honestly. `quick` shrinks grids
    for fast smoke runs; the CLI always runs the full sizes.
    """
    results = []
    path_cfg = PathConfig(sigma_min=1e-4)

    targets = [
        GaussianFit(mean=np.zeros(2), cov=np.eye(2)),
        GaussianFit(mean=np.array([1.0, -0.5]), cov=np.diag([0.25, 0.7])),
    ]
    if quick:
        targets = targets[:1]
    t_values = [0.2, 0.5, 0.8] if quick else None
    bf = BruteForceConfig(points_per_dim=81 if quick else 161)
    worst = max(oracle_field_agreement(tg, path_cfg, t_values=t_values, bf=bf)
                for tg in targets)
    if corrupt == "oracle-agreement":
        worst += 1.0
    results.append(CheckResult(
        name="oracle-agreement", passed=worst < 1e-3, tolerance="max-abs < 1e-3",
        detail=f"closed-form vs brute-force field disagreement {worst:.3e}"))

    order, errors = euler_order_slope(
        GaussianFit(mean=np.array([1.0, -1.0]), cov=0.25 * np.eye(2)), path_cfg,
        ref_steps=1024 if quick else 4096, n_chains=4 if quick else 16)
    if corrupt == "euler-order":
        order += 1.0
    results.append(CheckResult(
        name="euler-order", passed=0.8 <= order <= 1.2, tolerance="order in [0.8, 1.2]",
        detail=f"fitted order {order:.3f}, errors {['%.2e' % e for e in errors]}"))

    rng = RngStream(2024, 77)
    cfg = vector_field.NetConfig(input_dim=2, num_classes=3, hidden_dim=12,
                                 num_hidden_layers=2, time_embed_freqs=2, cond_embed_dim=4)
    worst_grad = 0.0
    for trial in range(1 if quick else 3):
        net = vector_field.init_net(cfg, rng.split(trial))
        batch_rng = rng.split(100 + trial)
        x_t = batch_rng.standard_normal((6, 2))
        v_t = batch_rng.standard_normal((6, 2))
        t = batch_rng.uniform(6)
        conds = batch_rng.integers(4, size=6) - 1  # includes NULL_COND
        worst_grad = max(worst_grad, vector_field.gradient_check(net, x_t, t, conds, v_t))
    if corrupt == "gradient-check":
        worst_grad += 1.0
    results.append(CheckResult(
        name="gradient-check", passed=worst_grad < 1e-5, tolerance="relative error < 1e-5",
        detail=f"max relative gradient disagreement {worst_grad:.3e}"))

    return results
