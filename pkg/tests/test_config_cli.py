import json
from pathlib import Path

import numpy as np
import pytest

from voxpose import cli
from voxpose.config import (
    ConfigError, RunConfig, apply_overrides, config_hash, from_dict, profile, to_dict,
)


def test_round_trip_identity():
    cfg = RunConfig()
    assert from_dict(to_dict(cfg)) == cfg


def test_round_trip_after_random_tweaks():
    rng = np.random.default_rng(0)
    for _ in range(20):
        cfg = RunConfig()
        cfg.train.lr = float(rng.uniform(1e-5, 1e-2))
        cfg.train.epochs = int(rng.integers(0, 50))
        cfg.synth.people = (1, int(rng.integers(1, 5)))
        cfg.eval.population = rng.choice(["matched", "all"])
        blob = json.dumps(to_dict(cfg))
        assert from_dict(json.loads(blob)) == cfg


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match="synth.bogus"):
        from_dict({"synth": {"bogus": 1}})
    with pytest.raises(ConfigError, match="train.camera"):
        from_dict({"train": {"camera": {}}})


def test_type_errors_name_path():
    with pytest.raises(ConfigError, match="train.epochs"):
        from_dict({"train": {"epochs": "twenty"}})
    with pytest.raises(ConfigError, match="synth.people"):
        from_dict({"synth": {"people": [1, 2, 3]}})


def test_overrides_dotted_paths():
    cfg = apply_overrides(RunConfig(), {"train.lr": 0.001, "synth.camera.f": [90, 95]})
    assert cfg.train.lr == 0.001
    assert cfg.synth.camera.f == (90.0, 95.0)
    with pytest.raises(ConfigError, match="train.nope"):
        apply_overrides(RunConfig(), {"train.nope": 1})


def test_profiles():
    desk = profile("desk")
    paper = profile("paper")
    assert desk.coarse_grid.dims == (40, 40, 12)
    assert paper.coarse_grid.dims == (80, 80, 24)
    assert paper.fine_grid.dims == 64
    assert paper.synth.heatmap_w == 240 and paper.synth.heatmap_h == 128
    assert desk.train.lr == 1e-4
    with pytest.raises(ConfigError, match="unknown profile"):
        profile("galactic")


def test_config_hash_stable_and_sensitive():
    a = RunConfig()
    b = RunConfig()
    assert config_hash(a) == config_hash(b)
    b.train.lr = 2e-4
    assert config_hash(a) != config_hash(b)


def run_cli(*args):
    return cli.main(list(args))


def test_cli_synth_empty_dataset(tmp_path):
    rc = run_cli("synth", "--out", str(tmp_path / "ds"),
                 "--synth.train_scenes=0", "--synth.test_scenes=0")
    assert rc == 0
    manifest = json.loads((tmp_path / "ds" / "train" / "manifest.json").read_text())
    assert manifest["count"] == 0


def test_cli_synth_determinism(tmp_path):
    args = ["--synth.train_scenes=3", "--synth.test_scenes=2"]
    assert run_cli("synth", "--out", str(tmp_path / "a"), *args) == 0
    assert run_cli("synth", "--out", str(tmp_path / "b"), *args) == 0
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_cli_bad_override_exits_2(tmp_path, capsys):
    rc = run_cli("synth", "--out", str(tmp_path / "x"), "--train.banana=1")
    assert rc == cli.EXIT_CONFIG
    assert "banana" in capsys.readouterr().err


def test_cli_missing_dataset_exits_3(tmp_path):
    rc = run_cli("train", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "run"))
    assert rc == cli.EXIT_DATA


def test_cli_diverged_training_exits_4(tmp_path, monkeypatch, capsys):
    import voxpose.cli as cli_mod
    from voxpose.train import TrainingDiverged

    assert run_cli("synth", "--out", str(tmp_path / "ds"),
                   "--synth.train_scenes=1", "--synth.test_scenes=0") == 0

    def explode(*args, **kwargs):
        raise TrainingDiverged("non-finite loss at epoch 0, step 3 (scene 1)")

    monkeypatch.setattr(cli_mod, "train_model", explode)
    rc = run_cli("train", "--dataset", str(tmp_path / "ds"), "--out", str(tmp_path / "run"))
    assert rc == cli.EXIT_NUMERIC
    assert "epoch 0" in capsys.readouterr().err


def test_cli_gradcheck_passes():
    assert run_cli("gradcheck") == 0


def test_cli_gradcheck_detects_corruption(monkeypatch, capsys):
    import voxpose.nn.layers as L

    orig = L.sigmoid_backward
    monkeypatch.setattr(L, "sigmoid_backward", lambda y, gy: orig(y, gy) * 1.01)
    rc = run_cli("gradcheck")
    assert rc == cli.EXIT_NUMERIC
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_cli_gradcheck_report_lists_layers_and_losses(capsys):
    run_cli("gradcheck")
    out = capsys.readouterr().out
    for word in ("conv2d", "conv3d", "bias_add", "upsample2d", "softmax",
                 "heatmap+box", "root depth", "root volume", "pose decode"):
        assert word in out


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    """A miniature synth+train+eval pipeline shared by the CLI flow tests."""
    root = tmp_path_factory.mktemp("tinyrun")
    args = ["--synth.train_scenes=4", "--synth.test_scenes=2", "--synth.people=[1,2]",
            "--train.epochs=2"]
    assert run_cli("synth", "--out", str(root / "ds"), *args) == 0
    assert run_cli("train", "--dataset", str(root / "ds"), "--out", str(root / "run"), *args) == 0
    return root, args


def test_cli_train_writes_checkpoints_and_losses(tiny_run):
    root, _ = tiny_run
    assert (root / "run" / "losses.csv").exists()
    cps = sorted((root / "run" / "checkpoints").glob("epoch_*"))
    assert len(cps) == 2
    lines = (root / "run" / "losses.csv").read_text().strip().splitlines()
    assert lines[0] == "epoch,total,depth,ren,pen"
    assert len(lines) == 3


def test_cli_train_epochs_zero_equals_init(tmp_path, tiny_run):
    root, args = tiny_run
    zero_args = [a if not a.startswith("--train.epochs") else "--train.epochs=0" for a in args]
    assert run_cli("train", "--dataset", str(root / "ds"), "--out", str(tmp_path / "run0"),
                   *zero_args) == 0
    from voxpose.config import load_config
    from voxpose.pipeline import init_nets, load_checkpoint
    from voxpose.synth.skeleton import SkeletonSpec
    from voxpose.synth.data import read_manifest

    cfg = load_config(tmp_path / "run0" / "config.json")
    nets, meta = load_checkpoint(tmp_path / "run0" / "checkpoints" / "epoch_000", cfg)
    assert meta["epoch"] == 0
    manifest = read_manifest(root / "ds" / "train")
    skel = SkeletonSpec.from_dict(manifest["skeleton"])
    fresh = init_nets(cfg, skel, seed=cfg.seeds.init)
    for (name, _, params), (name2, _, loaded_params) in zip(fresh.named(), nets.named()):
        for key in params.params:
            assert np.array_equal(params.params[key], loaded_params.params[key])


def test_cli_eval_reports(tiny_run, tmp_path):
    root, args = tiny_run
    rc = run_cli("eval", "--checkpoint", str(root / "run"), "--dataset", str(root / "ds"),
                 "--out", str(tmp_path / "ev"), *args)
    assert rc == 0
    doc = json.loads((tmp_path / "ev" / "reports" / "metrics.json").read_text())
    assert "mrpe_z" in doc["metrics"]
    csv_text = (tmp_path / "ev" / "reports" / "metrics.csv").read_text()
    assert csv_text.startswith("metric,value")
    preds = json.loads((tmp_path / "ev" / "reports" / "predictions.json").read_text())
    assert isinstance(preds, list) and len(preds) == 2
    for scene in preds:
        for person in scene:
            assert set(person) == {"confidence", "root_xyz_mm", "joints_mm"}


def test_cli_eval_oracle_flag_perfect_scores(tiny_run, tmp_path):
    root, args = tiny_run
    rc = run_cli("eval", "--checkpoint", str(root / "run"), "--dataset", str(root / "ds"),
                 "--out", str(tmp_path / "evo"), "--oracle", *args)
    assert rc == 0
    doc = json.loads((tmp_path / "evo" / "reports" / "metrics.json").read_text())
    m = doc["metrics"]
    assert m["mrpe"] == 0.0 and m["mrpe_z"] == 0.0
    assert m["mpjpe_abs"] == 0.0 and m["pck_abs"] == 100.0 and m["pck_root"] == 100.0


def test_cli_eval_deterministic(tiny_run, tmp_path):
    root, args = tiny_run
    for tag in ("e1", "e2"):
        assert run_cli("eval", "--checkpoint", str(root / "run"), "--dataset", str(root / "ds"),
                       "--out", str(tmp_path / tag), *args) == 0
    a = (tmp_path / "e1" / "reports" / "metrics.json").read_bytes()
    b = (tmp_path / "e2" / "reports" / "metrics.json").read_bytes()
    assert a == b


def test_cli_eval_skeleton_mismatch_rejected(tiny_run, tmp_path):
    root, args = tiny_run
    other = [a for a in args]
    assert run_cli("synth", "--out", str(tmp_path / "ds2"), "--skeleton.stature=1500", *other) == 0
    rc = run_cli("eval", "--checkpoint", str(root / "run"), "--dataset", str(tmp_path / "ds2"),
                 "--out", str(tmp_path / "ev2"), *other)
    assert rc == cli.EXIT_DATA


def test_resume_reproduces_uninterrupted_run(tmp_path, tiny_run):
    root, args = tiny_run
    from voxpose.config import load_config
    from voxpose.pipeline import load_checkpoint
    from voxpose.synth.data import read_dataset
    from voxpose.synth.skeleton import SkeletonSpec
    from voxpose.train import train_model

    samples, manifest = read_dataset(root / "ds" / "train")
    skel = SkeletonSpec.from_dict(manifest["skeleton"])
    cfg = load_config(root / "run" / "config.json")

    cfg.train.epochs = 4
    full, rows_full = train_model(cfg, samples, skel)

    # interrupted: stop after 2 (the tiny_run checkpoint), resume to 4
    nets2, meta = load_checkpoint(root / "run" / "checkpoints" / "epoch_002", cfg)
    resumed, rows_res = train_model(cfg, samples, skel, nets=nets2, start_epoch=2)
    for (_, _, a), (_, _, b) in zip(full.named(), resumed.named()):
        for key in a.params:
            assert np.array_equal(a.params[key], b.params[key])
    assert [r.total for r in rows_full[2:]] == [r.total for r in rows_res]
