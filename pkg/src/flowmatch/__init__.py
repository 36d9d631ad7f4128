"""Conditional flow matching at desk scale.

Straight-line conditional paths, a hand-differentiated velocity network,
classifier-free guidance, Euler ODE sampling in a linear latent space, and
analytic plus brute-force oracles that make every piece independently
verifiable.
"""

from .datasets import DatasetSpec, default_benchmark_spec, default_spec, draw_batch, draw_pair
from .evaluation import (BruteForceConfig, GaussianFit, MetricReport, fit_gaussian,
                         frechet_gaussian, mode_accuracy, oracle_brute_field,
                         oracle_gaussian_field, run_guidance_sweep, run_step_sweep)
from .fm_path import PathConfig, PathSample, interpolate, sample_path
from .latent_codec import CodecConfig, LatentCodec, decode, encode, fit_linear, identity_codec
from .numerics import RngStream, gaussian_sample, matvec
from .sampler import GuidanceConfig, SolverConfig, Trajectory, guided_field, integrate, sample
from .trainer import AdamWState, TrainConfig, init_adamw, loss_floor, train, train_step
from .vector_field import (GradientBundle, NetConfig, VectorFieldNet, forward, init_net,
                           loss_and_grad, time_features)

__version__ = "0.1.0"

__all__ = [
    "AdamWState", "BruteForceConfig", "CodecConfig", "DatasetSpec", "GaussianFit",
    "GradientBundle", "GuidanceConfig", "LatentCodec", "MetricReport", "NetConfig",
    "PathConfig", "PathSample", "RngStream", "SolverConfig", "TrainConfig", "Trajectory",
    "VectorFieldNet", "decode", "default_benchmark_spec", "default_spec", "draw_batch",
    "draw_pair", "encode", "fit_gaussian", "fit_linear", "forward", "frechet_gaussian",
    "gaussian_sample", "guided_field", "identity_codec", "init_adamw", "init_net",
    "integrate", "interpolate", "loss_and_grad", "loss_floor", "matvec", "mode_accuracy",
    "oracle_brute_field", "oracle_gaussian_field", "run_guidance_sweep", "run_step_sweep",
    "sample", "sample_path", "time_features", "train", "train_step",
]
