"""Versioned checkpoint files: plain-text header + little-endian payload.

Layout:

    line 1   ASCII magic and format version:  "FLOWMATCH-CKPT 1"
    line 2   ASCII byte length of the JSON header
    header   JSON: format version, net/codec config echoes, array manifest
             (name, shape, byte offset; dtype is always little-endian
             float64), training step, rng state, creation metadata
    payload  raw array bytes at the recorded offsets

Round trips are bit-exact; loading any other format version fails loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .latent_codec import CodecConfig, LatentCodec
from .trainer import AdamWState
from .vector_field import NetConfig, VectorFieldNet

MAGIC = "FLOWMATCH-CKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is missing, corrupt, or from another format version."""


@dataclass(eq=False)
class LoadedCheckpoint:
    net: VectorFieldNet
    codec: LatentCodec | None
    opt_state: AdamWState | None
    train_step: int
    rng_state: dict | None
    meta: dict


def _collect_arrays(net, codec, opt_state):
    arrays = list(net.param_arrays())
    if codec is not None:
        arrays.append(("codec_encode", codec.encode_mat))
        arrays.append(("codec_decode", codec.decode_mat))
    if opt_state is not None:
        for i, m in enumerate(opt_state.m):
            arrays.append((f"adamw_m{i}", m))
        for i, v in enumerate(opt_state.v):
            arrays.append((f"adamw_v{i}", v))
    return arrays


def save_checkpoint(path, net: VectorFieldNet, codec: LatentCodec | None = None,
                    opt_state: AdamWState | None = None, train_step: int = 0,
                    rng_state: dict | None = None, meta: dict | None = None) -> None:
    """Write a checkpoint; metadata must already be deterministic."""
    arrays = _collect_arrays(net, codec, opt_state)
    manifest, offset = [], 0
    blobs = []
    for name, arr in arrays:
        blob = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "net_config": {
            "input_dim": net.config.input_dim, "num_classes": net.config.num_classes,
            "hidden_dim": net.config.hidden_dim,
            "num_hidden_layers": net.config.num_hidden_layers,
            "time_embed_freqs": net.config.time_embed_freqs,
            "cond_embed_dim": net.config.cond_embed_dim,
            "activation": net.config.activation,
        },
        "codec_config": None if codec is None else {
            "data_dim": codec.config.data_dim, "latent_dim": codec.config.latent_dim,
            "mode": codec.config.mode, "recon_weight": codec.config.recon_weight,
            "seed": codec.config.seed,
        },
        "arrays": manifest,
        "train_step": int(train_step),
        "optimizer_step": None if opt_state is None else int(opt_state.step),
        "rng_state": rng_state,
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {FORMAT_VERSION}\n".encode())
        fh.write(f"{len(header_bytes)}\n".encode())
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> LoadedCheckpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        nl1 = raw.index(b"\n")
        magic_line = raw[:nl1].decode()
        magic, version = magic_line.rsplit(" ", 1)
        if magic != MAGIC:
            raise CheckpointError(f"{path} is not a {MAGIC} file")
        if int(version) != FORMAT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint format version {version}; this build reads "
                f"version {FORMAT_VERSION} only")
        nl2 = raw.index(b"\n", nl1 + 1)
        header_len = int(raw[nl1 + 1:nl2])
        header = json.loads(raw[nl2 + 1:nl2 + 1 + header_len])
        payload = raw[nl2 + 1 + header_len:]
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            start = entry["offset"]
            arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
            arrays[entry["name"]] = arr.reshape(shape).astype(np.float64, copy=True)
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"checkpoint {path} is corrupt: {exc}") from exc

    net_cfg = NetConfig(**header["net_config"])
    num_layers = net_cfg.num_hidden_layers + 1
    net = VectorFieldNet(
        config=net_cfg,
        weights=[arrays[f"w{i}"] for i in range(num_layers)],
        biases=[arrays[f"b{i}"] for i in range(num_layers)],
        cond_embed=arrays["cond_embed"],
    )
    codec = None
    if header["codec_config"] is not None:
        codec = LatentCodec(encode_mat=arrays["codec_encode"],
                            decode_mat=arrays["codec_decode"],
                            config=CodecConfig(**header["codec_config"]))
    opt_state = None
    if header["optimizer_step"] is not None:
        n_params = 2 * num_layers + 1
        opt_state = AdamWState(
            m=[arrays[f"adamw_m{i}"] for i in range(n_params)],
            v=[arrays[f"adamw_v{i}"] for i in range(n_params)],
            step=int(header["optimizer_step"]),
        )
    return LoadedCheckpoint(net=net, codec=codec, opt_state=opt_state,
                            train_step=int(header["train_step"]),
                            rng_state=header["rng_state"], meta=header["meta"])
