"""Run configuration: defaults, resolution, validation, and echo.

A run is described by one flat JSON document with named sections. Every
field has a default and the fully-defaulted config runs the lifted
4-class benchmark end to end. Commands echo the resolved document into
their output directory so any run can be reproduced from its artifacts.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .datasets import DatasetSpec
from .fm_path import PathConfig
from .latent_codec import CodecConfig, LatentCodec, fit_linear, fixed_orthogonal_codec, identity_codec
from .numerics import RngStream
from .sampler import GuidanceConfig, SolverConfig
from .trainer import TrainConfig
from .vector_field import NetConfig

# reserved stream ids per command phase, derived from the master seed
STREAM_CODEC = 101
STREAM_NET = 102
STREAM_TRAIN = 103
STREAM_SAMPLE = 104
STREAM_EVAL = 105
STREAM_FLOOR = 106

DEFAULTS: dict = {
    "seed": 42,
    "out_dir": "runs/default",
    "dataset": {
        "kind": "gaussian-mixture",
        "dim": 2,
        "num_classes": 4,
        "means": [[-2.0, -2.0], [-2.0, 2.0], [2.0, -2.0], [2.0, 2.0]],
        "cov_scales": [0.25, 0.25, 0.25, 0.25],
        "noise": 0.05,
        "seed": 42,
        "lift_dim": 8,
    },
    "path": {"sigma_min": 1e-4},
    "net": {
        "hidden_dim": 128,
        "num_hidden_layers": 3,
        "time_embed_freqs": 8,
        "cond_embed_dim": 16,
        "activation": "tanh",
    },
    "codec": {
        "mode": "linear-trained",
        "latent_dim": 2,
        "recon_weight": 1.0,
        "num_fit_samples": 4096,
        "seed": 7,
    },
    "train": {
        "learning_rate": 1e-4,
        "betas": [0.9, 0.999],
        "eps": 1e-8,
        "weight_decay": 0.01,
        "batch_size": 64,
        "num_steps": 20_000,
        "cond_dropout_prob": 0.10,
        "eval_every": 1000,
        "seed": 42,
    },
    "solver": {"num_steps": 200, "scheme": "euler"},
    "guidance": {"w": 3.0},
    "sample": {"n": 1000, "cond": 0, "format": "csv"},
}


class ConfigError(ValueError):
    """The configuration document is malformed or inconsistent."""


def _merge(defaults, override, crumb: str):
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ConfigError(f"{crumb or 'config'} must be an object")
        out = {}
        for key, value in defaults.items():
            if key in override:
                out[key] = _merge(value, override[key], f"{crumb}.{key}" if crumb else key)
            else:
                out[key] = copy.deepcopy(value)
        unknown = set(override) - set(defaults)
        if unknown:
            where = crumb or "top level"
            raise ConfigError(f"unknown config key(s) at {where}: {sorted(unknown)}")
        return out
    return copy.deepcopy(override)


def resolve_config(user: dict | None) -> dict:
    """Apply defaults over a (possibly partial) user document."""
    return _merge(DEFAULTS, user or {}, "")


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


def config_json(resolved: dict) -> str:
    return json.dumps(resolved, indent=2, sort_keys=True) + "\n"


def echo_config(resolved: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.json"
    path.write_text(config_json(resolved))
    return path


@dataclass(eq=False)
class RunSetup:
    """Typed view of a resolved config document."""

    raw: dict
    seed: int
    out_dir: str
    dataset: DatasetSpec
    path: PathConfig
    codec_cfg: CodecConfig
    net_cfg: NetConfig
    train: TrainConfig
    solver: SolverConfig
    guidance: GuidanceConfig
    codec_fit_samples: int


def build_setup(resolved: dict) -> RunSetup:
    """Construct the typed configs, raising ConfigError on any violation."""
    try:
        d = resolved["dataset"]
        dataset = DatasetSpec(kind=d["kind"], dim=d["dim"], num_classes=d["num_classes"],
                              means=tuple(tuple(m) for m in d["means"]),
                              cov_scales=tuple(d["cov_scales"]), noise=d["noise"],
                              seed=d["seed"], lift_dim=d["lift_dim"])
        path_cfg = PathConfig(sigma_min=resolved["path"]["sigma_min"])
        c = resolved["codec"]
        codec_cfg = CodecConfig(data_dim=dataset.data_dim, latent_dim=c["latent_dim"],
                                mode=c["mode"], recon_weight=c["recon_weight"], seed=c["seed"])
        n = resolved["net"]
        net_cfg = NetConfig(input_dim=codec_cfg.latent_dim, num_classes=dataset.num_classes,
                            hidden_dim=n["hidden_dim"], num_hidden_layers=n["num_hidden_layers"],
                            time_embed_freqs=n["time_embed_freqs"],
                            cond_embed_dim=n["cond_embed_dim"], activation=n["activation"])
        t = resolved["train"]
        train_cfg = TrainConfig(learning_rate=t["learning_rate"], betas=tuple(t["betas"]),
                                eps=t["eps"], weight_decay=t["weight_decay"],
                                batch_size=t["batch_size"], num_steps=t["num_steps"],
                                cond_dropout_prob=t["cond_dropout_prob"],
                                eval_every=t["eval_every"], seed=t["seed"])
        solver = SolverConfig(num_steps=resolved["solver"]["num_steps"],
                              scheme=resolved["solver"]["scheme"])
        guidance = GuidanceConfig(w=resolved["guidance"]["w"])
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return RunSetup(raw=resolved, seed=int(resolved["seed"]), out_dir=str(resolved["out_dir"]),
                    dataset=dataset, path=path_cfg, codec_cfg=codec_cfg, net_cfg=net_cfg,
                    train=train_cfg, solver=solver, guidance=guidance,
                    codec_fit_samples=int(resolved["codec"]["num_fit_samples"]))


def build_codec(setup: RunSetup) -> LatentCodec:
    """Construct the codec named by the config (fitting it if trained)."""
    cfg = setup.codec_cfg
    if cfg.mode == "identity":
        return identity_codec(cfg.data_dim)
    if cfg.mode == "fixed-orthogonal":
        return fixed_orthogonal_codec(cfg)
    rng = RngStream(cfg.seed, STREAM_CODEC)
    return fit_linear(setup.dataset, cfg, setup.codec_fit_samples, rng)
