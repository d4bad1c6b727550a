"""Command-line entry point: synth, train, eval, ablate, gradcheck.

Any config field can be overridden on the command line with a dotted flag
mirroring its JSON path, e.g. ``--train.lr=1e-3``. Exit codes: 0 success,
2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gradchecks
from .config import ConfigError, RunConfig, apply_overrides, config_hash, load_config, profile, \
    save_config
from .nn.tensorio import TensorFormatError
from .pipeline import evaluate_dataset, load_checkpoint
from .protocols import PROTOCOLS, run_protocol
from .synth.data import DataError, read_dataset
from .synth.generate import generate_dataset
from .synth.sampling import PlacementError
from .synth.skeleton import SkeletonSpec
from .train import TrainingDiverged, train_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _parse_overrides(tokens: list[str]) -> dict[str, object]:
    """Tokens like --train.lr=1e-3 (or --train.lr 1e-3) to a dotted-key dict."""
    overrides: dict[str, object] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument '{tok}'")
        body = tok[2:]
        if "=" in body:
            key, raw = body.split("=", 1)
        else:
            key = body
            i += 1
            if i >= len(tokens):
                raise ConfigError(f"flag '--{key}' is missing a value")
            raw = tokens[i]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[key] = value
        i += 1
    return overrides


def _resolve_config(args, extra: list[str]) -> RunConfig:
    cfg = profile(args.profile)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    overrides = _parse_overrides(extra)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def cmd_synth(args, extra: list[str]) -> int:
    cfg = _resolve_config(args, extra)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    generate_dataset(cfg, cfg.synth.train_scenes, cfg.seeds.synth, out / "train",
                     threads=args.threads, extra_meta={"split": "train"})
    generate_dataset(cfg, cfg.synth.test_scenes, cfg.seeds.synth + 1, out / "test",
                     threads=args.threads, extra_meta={"split": "test"})
    print(f"dataset written to {out} (train={cfg.synth.train_scenes}, test={cfg.synth.test_scenes})")
    return EXIT_OK


def _load_split(dataset: str, split: str):
    root = Path(dataset)
    path = root / split if (root / split).exists() else root
    return read_dataset(path)


def cmd_train(args, extra: list[str]) -> int:
    cfg = _resolve_config(args, extra)
    samples, manifest = _load_split(args.dataset, "train")
    skel = SkeletonSpec.from_dict(manifest["skeleton"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    mode = args.volume
    nets, rows = train_model(cfg, samples, skel, out_dir=out, mode=mode)
    last = rows[-1] if rows else None
    if last:
        print(f"trained {cfg.train.epochs} epochs; final loss {last.total:.4f} "
              f"(depth {last.depth:.4f}, ren {last.ren:.4f}, pen {last.pen:.4f})")
    else:
        print("epochs=0: checkpoint equals initialization")
    print(f"checkpoints under {out / 'checkpoints'}")
    return EXIT_OK


def _latest_checkpoint(path: Path) -> Path:
    if (path / "index.json").exists():
        return path
    cps = sorted((path / "checkpoints").glob("epoch_*")) if (path / "checkpoints").exists() \
        else sorted(path.glob("epoch_*"))
    if not cps:
        raise DataError(f"{path}: no checkpoint found")
    return cps[-1]


def cmd_eval(args, extra: list[str]) -> int:
    cfg = _resolve_config(args, extra)
    samples, manifest = _load_split(args.dataset, "test")
    nets, meta = load_checkpoint(_latest_checkpoint(Path(args.checkpoint)), cfg)
    ds_skel = SkeletonSpec.from_dict(manifest["skeleton"])
    if meta["skeleton"] != ds_skel.to_dict():
        raise DataError("checkpoint and dataset use different skeletons")
    report, predictions = evaluate_dataset(nets, samples, cfg, mode=args.volume, oracle=args.oracle)
    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    doc = {"metrics": report.to_dict(), "mode": args.volume, "oracle": args.oracle,
           "config_hash": config_hash(cfg)}
    (out / "reports" / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
    (out / "reports" / "predictions.json").write_text(json.dumps(predictions, indent=2))
    with open(out / "reports" / "metrics.csv", "w") as f:
        f.write("metric,value\n")
        for key, value in sorted(report.to_dict().items()):
            f.write(f"{key},{'' if value is None else value}\n")
    print(json.dumps(doc["metrics"], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_ablate(args, extra: list[str]) -> int:
    cfg = _resolve_config(args, extra)
    out = Path(args.out)
    path = run_protocol(args.protocol, cfg, out)
    print(f"protocol '{args.protocol}' rows written to {path}")
    return EXIT_OK


def cmd_gradcheck(args, extra: list[str]) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments: {extra}")
    report = gradchecks.run_all(tolerance=args.tolerance)
    for line in report.lines:
        print(line)
    if report.failed:
        print(f"FAILED: {report.failed} check(s) above tolerance {args.tolerance:g}")
        return EXIT_NUMERIC
    print(f"all {len(report.lines)} gradient checks passed (tolerance {args.tolerance:g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxpose", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--profile", default="desk", help="base profile: desk, paper or ablation")
        p.add_argument("--threads", type=int, default=1, help="worker cap for data generation")
        p.add_argument("--deterministic", action="store_true", default=True,
                       help="sequential reductions (always on; flag kept for compatibility)")

    p = sub.add_parser("synth", help="generate train/test datasets")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train depth/root/pose networks")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--volume", default="gated", choices=["gated", "naive"])
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="run inference and report metrics")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--volume", default="gated", choices=["gated", "naive", "constant_depth"])
    p.add_argument("--oracle", action="store_true", help="score ground truth against itself")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="run a generalization protocol")
    common(p)
    p.add_argument("--protocol", required=True, choices=list(PROTOCOLS))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference checks for every layer and loss")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.fn(args, extra)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TensorFormatError, FileNotFoundError, PlacementError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDiverged, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
