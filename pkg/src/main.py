"""
Hemotrack - online bleeding region and point detection

Command-line entry point: synth, train, eval, infer and viz. Logs go to
stderr; the last stdout line is the path of the main artifact.

Exit codes: 0 success, 1 usage error, 2 runtime abort.
"""

import argparse
import json
import logging
import platform
import shutil
import sys
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np
import structlog
import torch

from src import __version__
from src.config import ModelConfig, config_hash, dump_config, load_config
from src.core.errors import HemoError, InputError, NonFiniteLossError
from src.core.rng import seeded_rng
from src.data.clips import BleedDataset, load_clip, read_camera_path, write_camera_path, write_clip, write_splits
from src.data.synth import MOTION_PROFILES, make_synth_spec, synth_clip
from src.detector.model import OnlineDetector, build_detector
from src.eval.evaluator import Evaluator, evaluate
from src.outputs.base import BaseWriter, WriterGroup
from src.outputs.debug import DebugWriter
from src.outputs.overlay import OverlayWriter, render_overlay, write_rgb
from src.outputs.plots import plot_metrics
from src.outputs.predictions import PredictionWriter, read_predictions
from src.pointbranch.flow import build_flow_backend
from src.train.checkpoint import load_checkpoint
from src.train.trainer import METRICS_FILE, Trainer

log = structlog.get_logger()

MANIFEST_FILE = "manifest.json"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def configure_logging(debug: bool = False) -> None:
    """Structured console logging to stderr."""
    structlog.configure(
        processors=[
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(logging.DEBUG if debug else logging.INFO),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


class UsageError(Exception):
    """Bad command line."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def write_manifest(out_dir: Path, command: str, args: dict, config: Optional[ModelConfig], seed: int) -> Path:
    """Record what is needed to re-run a command: arguments, seed, config and versions."""
    manifest = {
        "command": command,
        "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(args.items()) if k != "out"},
        "seed": seed,
        "config_hash": config_hash(config) if config is not None else None,
        "config": config.to_flat() if config is not None else None,
        "versions": {
            "hemotrack": __version__,
            "python": platform.python_version(),
            "torch": torch.__version__,
            "numpy": np.__version__,
            "opencv": cv2.__version__,
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_synth(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise InputError(f"{out} is not empty (use --force to overwrite)")
        for name in ("clips", "splits.json", MANIFEST_FILE):
            target = out / name
            if target.is_dir():
                shutil.rmtree(target)
            elif target.exists():
                target.unlink()

    root_rng = seeded_rng(args.seed).split("synth")
    ids = [f"synth_{i:03d}" for i in range(args.clips)]
    for clip_id in ids:
        rng = root_rng.split(clip_id)
        spec = make_synth_spec(rng.split("spec"), args.frames, (args.size, args.size), args.motion, clip_id=clip_id)
        clip, _ = synth_clip(spec, rng.split("render"))
        write_clip(out, clip)
        write_camera_path(out, clip_id, spec.image_size, spec.camera_path)
        log.info("Clip written", clip=clip_id, frames=len(clip), motion=args.motion)

    n_test = max(1, args.clips // 4) if args.clips >= 2 else 0
    write_splits(out, train=ids[: len(ids) - n_test], test=ids[len(ids) - n_test:])
    write_manifest(out, "synth", vars_of(args), None, args.seed)
    log.info("Dataset written", clips=args.clips, test=n_test, out=str(out))
    return out


def cmd_train(args: argparse.Namespace) -> Path:
    config = load_config(args.config)
    dataset = BleedDataset(args.data)
    out = Path(args.out)
    log.info(
        "Configuration loaded",
        config=str(args.config),
        hash=config_hash(config)[:12],
        window=config.window_size,
        resolution=config.model.input_resolution,
        flow=config.flow.backend,
    )

    backend = build_flow_backend(config.flow, dataset.camera_paths() if config.flow.backend == "injected" else None)
    rng = seeded_rng(config.seed)
    detector = build_detector(config, rng, backend)
    trainer = Trainer(detector, config, dataset, out, rng, eval_split=args.eval_split)
    if args.resume:
        trainer.resume(Path(args.resume))

    write_manifest(out, "train", vars_of(args), config, config.seed)
    (out / "config.yaml").write_text(dump_config(config))
    result = trainer.train()
    log.info("Training finished", steps=result.steps, epochs=result.epochs, best=result.best_score)
    return result.best_path


def cmd_eval(args: argparse.Namespace) -> Path:
    dataset = BleedDataset(args.data)
    out = Path(args.out)
    writers: list[BaseWriter] = [PredictionWriter(out)]
    if args.overlays:
        writers.append(OverlayWriter(out / "overlays"))
    if args.debug_dumps:
        writers.append(DebugWriter(out / "debug"))
    group = _writer_group(writers)

    if args.oracle:
        config = load_config(args.config) if args.config else ModelConfig()
        detector = None
    else:
        config, detector = _load_detector(args.checkpoint, args.config, dataset)

    jobs = args.jobs or config.eval.jobs
    report = evaluate(detector, dataset, args.split, config, writers=group, oracle=args.oracle, jobs=jobs)
    if group is not None:
        group.close()
    report.checkpoint = None if args.oracle else str(args.checkpoint)
    path = report.write(out / "report.json")
    write_manifest(out, "eval", vars_of(args), config, config.seed)
    return path


def cmd_infer(args: argparse.Namespace) -> Path:
    clip_dir = Path(args.clip)
    root = clip_dir.parent.parent
    clip = load_clip(root, clip_dir.name)
    out = Path(args.out)

    camera = read_camera_path(root, clip.clip_id)
    config, detector = _load_detector(
        args.checkpoint, args.config, camera_paths={clip.clip_id: camera} if camera else None
    )
    writers: list[BaseWriter] = [PredictionWriter(out)]
    if args.debug_dumps:
        writers.append(DebugWriter(out / "debug"))
    group = WriterGroup(writers)
    records = Evaluator(detector, config, writers=group).predict_clip(clip)
    group.close()
    write_manifest(out, "infer", vars_of(args), config, config.seed)
    log.info("Inference finished", clip=clip.clip_id, frames=len(records))
    return out / clip.clip_id


def cmd_viz(args: argparse.Namespace) -> Path:
    pred_dir = Path(args.pred)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = BleedDataset(args.data)
    known = {cid for ids in dataset.splits.values() for cid in ids}

    clip_ids = sorted(p.name for p in pred_dir.iterdir() if p.is_dir() and (p / "points.jsonl").exists()) \
        if pred_dir.exists() else []
    if not clip_ids:
        log.warning("No predictions found", pred=str(pred_dir))

    warnings: list[str] = []
    written = 0
    for clip_id in clip_ids:
        if clip_id not in known:
            warnings.append(f"{clip_id}: not in the dataset")
            continue
        clip = dataset.clip(clip_id)
        predictions = read_predictions(pred_dir, clip_id)
        for frame, gt in clip.frames:
            record = predictions.get(frame.frame_index)
            if record is None or record["mask"] is None or record["mask"].shape != frame.size:
                warnings.append(f"{clip_id}#{frame.frame_index}: no aligned prediction")
                continue
            canvas = render_overlay(frame.pixels, record["mask"], record["point"], gt.full_mask(frame.size), gt.point)
            written += write_rgb(out / clip_id / f"{frame.frame_index:06d}_pred.png", canvas)

    metrics = Path(args.metrics) if args.metrics else pred_dir / METRICS_FILE
    plots = plot_metrics(metrics, out / "plots") if metrics.exists() else []

    for warning in warnings:
        log.warning("Misaligned prediction", detail=warning)
    write_manifest(out, "viz", vars_of(args), None, 0)
    log.info("Visualization finished", overlays=written, plots=len(plots), warnings=len(warnings))
    return out


def _load_detector(
    checkpoint_path: str,
    config_path: Optional[str],
    dataset: Optional[BleedDataset] = None,
    camera_paths: Optional[dict] = None,
) -> tuple[ModelConfig, OnlineDetector]:
    """Detector restored from a checkpoint; a given config must agree on architecture."""
    config = load_config(config_path) if config_path else None
    checkpoint = load_checkpoint(checkpoint_path, config)
    config = config or checkpoint.config
    if config.flow.backend == "injected" and camera_paths is None and dataset is not None:
        camera_paths = dataset.camera_paths()
    backend = build_flow_backend(config.flow, camera_paths)
    detector = build_detector(config, seeded_rng(config.seed), backend)
    checkpoint.restore(detector)
    log.info("Checkpoint loaded", path=str(checkpoint_path), step=checkpoint.step, epoch=checkpoint.epoch)
    return config, detector


def _writer_group(writers: list[BaseWriter]) -> Optional[WriterGroup]:
    if not writers:
        return None
    for writer in writers:
        if not writer.health_check():
            raise InputError(f"Output directory {writer.out_dir} is not writable")
    return WriterGroup(writers)


def vars_of(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("handler", "debug")}


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="hemotrack", description="Online bleeding region and point detection")
    parser.add_argument("--debug", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=4)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--size", type=int, default=128, help="frame height and width")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--motion", choices=MOTION_PROFILES, default="jitter")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("train", help="train a detector")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--eval-split", default="test")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="override the checkpoint's non-architecture settings")
    p.add_argument("--overlays", action="store_true")
    p.add_argument("--debug-dumps", action="store_true", help="edge, attention and flow dumps")
    p.add_argument("--oracle", action="store_true", help="score the ground truth itself")
    p.add_argument("--jobs", type=int, default=0, help="clips evaluated concurrently (default: eval.jobs)")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("infer", help="run online inference on one clip directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--clip", required=True, help="<root>/clips/<clip_id>")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--debug-dumps", action="store_true")
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("viz", help="overlays and metric plots")
    p.add_argument("--pred", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="metrics.jsonl (default: <pred>/metrics.jsonl)")
    p.set_defaults(handler=cmd_viz)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eval" and not args.oracle and not args.checkpoint:
            parser.error("eval needs --checkpoint unless --oracle is set")
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.debug)
    try:
        path = args.handler(args)
    except NonFiniteLossError as e:
        log.error("Training aborted", error=str(e), dump=e.dump_path)
        if e.dump_path:
            print(e.dump_path)
        return EXIT_RUNTIME
    except HemoError as e:
        log.error("Command failed", command=args.command, error=str(e), error_type=type(e).__name__)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        log.info("Interrupted by user")
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
