import json

import numpy as np
import pytest

from flowmatch import checkpoint as ck, config as cfgmod, latent_codec as lc, trainer, vector_field as vf
from flowmatch.cli import main
from flowmatch.numerics import RngStream

TINY_CONFIG = {
    "net": {"hidden_dim": 16, "num_hidden_layers": 2, "time_embed_freqs": 2,
            "cond_embed_dim": 4},
    "train": {"num_steps": 40, "batch_size": 16, "eval_every": 20},
    "codec": {"num_fit_samples": 500},
}


def _write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def _loss_without_wall(text: str):
    # wall_ms is measured time and is the one non-reproducible CSV field
    return [",".join(line.split(",")[:2]) for line in text.strip().split("\n")]


# ---------------------------------------------------------------------------
# config resolution
# ---------------------------------------------------------------------------

def test_defaults_resolve_and_build():
    resolved = cfgmod.resolve_config({})
    setup = cfgmod.build_setup(resolved)
    assert setup.dataset.num_classes == 4
    assert setup.dataset.lift_dim == 8
    assert setup.net_cfg.input_dim == setup.codec_cfg.latent_dim == 2
    assert setup.train.num_steps == 20_000
    assert setup.guidance.w == 3.0
    assert setup.solver.num_steps == 200


def test_unknown_keys_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.resolve_config({"trian": {}})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.resolve_config({"train": {"lr": 1e-3}})


def test_invalid_values_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.build_setup(cfgmod.resolve_config({"path": {"sigma_min": 0.5}}))
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.build_setup(cfgmod.resolve_config({"train": {"cond_dropout_prob": 2.0}}))


def test_config_echo_is_stable():
    resolved = cfgmod.resolve_config(TINY_CONFIG)
    assert cfgmod.config_json(resolved) == cfgmod.config_json(cfgmod.resolve_config(TINY_CONFIG))


# ---------------------------------------------------------------------------
# checkpoint format
# ---------------------------------------------------------------------------

def _small_state(seed=3):
    net = vf.init_net(vf.NetConfig(input_dim=2, num_classes=4, hidden_dim=8,
                                   num_hidden_layers=2, time_embed_freqs=2,
                                   cond_embed_dim=4), RngStream(seed))
    codec = lc.identity_codec(2)
    opt = trainer.init_adamw(net)
    opt.m[0][0, 0] = 0.125
    opt.step = 11
    return net, codec, opt


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    net, codec, opt = _small_state()
    rng = RngStream(5, 2)
    rng.standard_normal(7)
    path = tmp_path / "state.ckpt"
    ck.save_checkpoint(path, net, codec=codec, opt_state=opt, train_step=123,
                       rng_state=rng.state, meta={"note": "roundtrip"})
    loaded = ck.load_checkpoint(path)
    for (name_a, a), (name_b, b) in zip(net.param_arrays(), loaded.net.param_arrays()):
        assert name_a == name_b
        assert np.array_equal(a, b) and a.dtype == b.dtype
    assert loaded.net.config == net.config
    assert np.array_equal(loaded.codec.encode_mat, codec.encode_mat)
    assert loaded.opt_state.step == 11
    assert np.array_equal(loaded.opt_state.m[0], opt.m[0])
    assert loaded.train_step == 123
    assert loaded.meta == {"note": "roundtrip"}
    restored = RngStream(0)
    restored.state = loaded.rng_state
    assert np.array_equal(restored.standard_normal(5), rng.standard_normal(5))


def test_checkpoint_version_mismatch_rejected(tmp_path):
    net, codec, opt = _small_state()
    path = tmp_path / "state.ckpt"
    ck.save_checkpoint(path, net)
    raw = path.read_bytes()
    bumped = raw.replace(b"FLOWMATCH-CKPT 1\n", b"FLOWMATCH-CKPT 2\n", 1)
    path.write_bytes(bumped)
    with pytest.raises(ck.CheckpointError, match="version"):
        ck.load_checkpoint(path)


def test_checkpoint_corrupt_and_missing(tmp_path):
    net, _, _ = _small_state()
    path = tmp_path / "state.ckpt"
    ck.save_checkpoint(path, net)
    path.write_bytes(path.read_bytes()[:80])
    with pytest.raises(ck.CheckpointError):
        ck.load_checkpoint(path)
    with pytest.raises(ck.CheckpointError):
        ck.load_checkpoint(tmp_path / "nope.ckpt")


# ---------------------------------------------------------------------------
# train command
# ---------------------------------------------------------------------------

def test_cmd_train_outputs(tmp_path):
    cfg = _write_config(tmp_path, TINY_CONFIG)
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "config.json").exists()
    loss_lines = (out / "loss.csv").read_text().strip().split("\n")
    assert loss_lines[0] == "step,loss,wall_ms"
    assert len(loss_lines) == 41  # header + one row per step
    assert (out / "checkpoint_final.ckpt").exists()
    assert (out / "checkpoint_000020.ckpt").exists()  # eval_every checkpoint
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["train"]["num_steps"] == 40


def test_cmd_train_zero_steps_writes_initial_checkpoint_only(tmp_path):
    doc = dict(TINY_CONFIG, train=dict(TINY_CONFIG["train"], num_steps=0))
    cfg = _write_config(tmp_path, doc)
    out = tmp_path / "run0"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    loaded = ck.load_checkpoint(out / "checkpoint_final.ckpt")
    assert loaded.train_step == 0
    assert (out / "loss.csv").read_text() == "step,loss,wall_ms\n"
    assert not list(out.glob("checkpoint_0*"))


def test_cmd_train_invalid_config_exit_2(tmp_path, capsys):
    bad = _write_config(tmp_path, {"train": {"learning_rate": -1}})
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "error" in capsys.readouterr().err
    missing = tmp_path / "missing.json"
    assert main(["train", "--config", str(missing)]) == 2


def test_cmd_train_nan_exit_3(tmp_path, capsys):
    doc = dict(TINY_CONFIG, train=dict(TINY_CONFIG["train"],
                                       learning_rate=1e200, weight_decay=0.0))
    cfg = _write_config(tmp_path, doc)
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["train", "--config", str(cfg), "--out", str(tmp_path / "nan")])
    assert code == 3
    assert "step" in capsys.readouterr().err


def test_cmd_train_rerun_from_echoed_config_reproduces(tmp_path):
    cfg = _write_config(tmp_path, TINY_CONFIG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["train", "--config", str(out1 / "config.json"), "--out", str(out2)]) == 0
    a = (out1 / "loss.csv").read_text()
    b = (out2 / "loss.csv").read_text()
    assert _loss_without_wall(a) == _loss_without_wall(b)
    # checkpoints are byte-identical, timing aside the runs match exactly
    assert (out1 / "checkpoint_final.ckpt").read_bytes() == \
        (out2 / "checkpoint_final.ckpt").read_bytes()


# ---------------------------------------------------------------------------
# sample / eval / oracle-check commands
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_train")
    cfg = _write_config(tmp, TINY_CONFIG)
    out = tmp / "run"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    return out


def test_cmd_sample_defaults_record_best_settings(trained_dir, tmp_path):
    out = tmp_path / "samples.csv"
    code = main(["sample", "--checkpoint", str(trained_dir / "checkpoint_final.ckpt"),
                 "--n", "5", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "chain_id,dim_0,dim_1,dim_2,dim_3,dim_4,dim_5,dim_6,dim_7,cond,w,N,seed"
    assert len(lines) == 6
    row = lines[1].split(",")
    assert row[-3] == "3.0" and row[-2] == "200"  # omitted flags default to w=3, N=200
    assert row[-1] == "0"


def test_cmd_sample_jsonl_and_trajectories(trained_dir, tmp_path):
    out = tmp_path / "s.jsonl"
    code = main(["sample", "--checkpoint", str(trained_dir / "checkpoint_final.ckpt"),
                 "--n", "3", "--steps", "4", "--w", "1.0", "--format", "jsonl",
                 "--out", str(out), "--dump-trajectories"])
    assert code == 0
    rows = [json.loads(line) for line in out.read_text().strip().split("\n")]
    assert [r["chain_id"] for r in rows] == [0, 1, 2]
    assert rows[0]["w"] == 1.0 and rows[0]["N"] == 4
    trajs = [json.loads(line) for line in
             (tmp_path / "s_trajectories.jsonl").read_text().strip().split("\n")]
    assert len(trajs[0]["times"]) == 5  # N+1 grid points


def test_cmd_sample_error_paths(trained_dir, tmp_path, capsys):
    assert main(["sample", "--checkpoint", str(tmp_path / "ghost.ckpt"), "--n", "1"]) == 2
    code = main(["sample", "--checkpoint", str(trained_dir / "checkpoint_final.ckpt"),
                 "--cond", "9", "--n", "1", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    assert "out of range" in capsys.readouterr().err


def test_cmd_sample_deterministic(trained_dir, tmp_path):
    args = ["sample", "--checkpoint", str(trained_dir / "checkpoint_final.ckpt"),
            "--n", "4", "--steps", "8", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cmd_eval_sweep_row_counts(trained_dir, tmp_path):
    ckpt = str(trained_dir / "checkpoint_final.ckpt")
    for sweep, rows in (("guidance", 4), ("steps", 6), ("none", 1)):
        out = tmp_path / sweep
        assert main(["eval", "--checkpoint", ckpt, "--sweep", sweep, "--n", "24",
                     "--out", str(out)]) == 0
        lines = (out / "metrics.csv").read_text().strip().split("\n")
        assert len(lines) == rows + 1
        assert lines[0].startswith("frechet,mode_accuracy,mean_loss")
        assert (out / "eval_config.json").exists()


def test_cmd_eval_rerun_byte_identical(trained_dir, tmp_path):
    ckpt = str(trained_dir / "checkpoint_final.ckpt")
    outs = []
    for name in ("e1", "e2"):
        out = tmp_path / name
        assert main(["eval", "--checkpoint", ckpt, "--sweep", "guidance", "--n", "16",
                     "--out", str(out), "--seed", "3"]) == 0
        outs.append((out / "metrics.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cmd_eval_missing_checkpoint(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "none.ckpt")]) == 2


def test_cmd_oracle_check_passes(tmp_path, capsys):
    out = tmp_path / "oc"
    assert main(["oracle-check", "--out", str(out)]) == 0
    report = (out / "oracle_report.txt").read_text()
    assert report.count("PASS") == 3 and "FAIL" not in report
    for tol in ("1e-3", "[0.8, 1.2]", "1e-5"):
        assert tol in report  # report lists every tolerance
    assert (out / "oracle_report.json").exists()
