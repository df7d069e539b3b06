import argparse
import json
import logging
import os
import sys
import traceback

import numpy as np

from core import hsi_io
from core.errors import MobGcnError, StageError
from core.metrics import compute_metrics
from core.pipeline import LOG_FORMAT, PipelineRunner
from core.segmentation import boundary_mask
from core.synthetic import generate_synthetic
from models.config import PipelineConfig, SyntheticSceneSpec
from utils.config import AppConfig
from utils.helpers import create_run_dir, read_json, write_json
from utils.image_utils import class_palette, overlay_boundaries, render_map, save_image

# main.py
#
# Command-line entry point. Subcommands:
#   run      full pipeline into a fresh run directory
#   segment  superpixels only (segmentation.npy, boundaries.ppm)
#   scales   automatic resolution selection (scale_profile.csv, optimal_scales.json, nn_nroc.ppm)
#   synth    synthetic labelled scene (cube.npy, gt.npy, scene.json)
#   metrics  accuracy report from a prediction raster, ground truth and test mask
#   render   class-map NPY to PPM/PNG plus legend
# Exit codes: 0 success, 2 failure inside a pipeline stage, 1 any other error.

logger = logging.getLogger("main")


def exception_hook(exc_type, exc_value, exc_traceback):
    """Log unhandled exceptions with their traceback before the interpreter exits."""
    logger.critical("Unhandled exception: %s: %s\n%s", exc_type.__name__, exc_value,
                    "".join(traceback.format_exception(exc_type, exc_value, exc_traceback)))


def _add_config_arguments(parser):
    parser.add_argument("--config", help="JSON pipeline configuration (omitted fields take defaults)")
    parser.add_argument("--preset", choices=sorted(AppConfig.DATASET_PRESETS), help="dataset preset")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY.PATH=VALUE",
                        help="override one configuration value, e.g. --set model.kind=gcn")
    parser.add_argument("--repeats", type=int, help="number of independent training repeats")
    parser.add_argument("--seed", type=int, help="base seed (repeat r uses seed + r)")
    parser.add_argument("--output", help="output root directory")
    parser.add_argument("--cube", help="cube path (overrides dataset.cube_path)")
    parser.add_argument("--gt", help="ground-truth path (overrides dataset.gt_path)")


def build_config(args):
    """Defaults < environment < JSON config < command-line flags."""
    config = PipelineConfig.from_dict(read_json(args.config)) if args.config else PipelineConfig()
    assignments = []
    flags = {"dataset.preset": args.preset, "training.repeats": args.repeats, "training.seed": args.seed,
             "output_dir": args.output, "dataset.cube_path": args.cube, "dataset.gt_path": args.gt}
    for path, value in flags.items():
        if value is not None:
            assignments.append(f"{path}={json.dumps(value)}")
    assignments.extend(args.overrides)
    return config.with_overrides(assignments)


def build_parser():
    parser = argparse.ArgumentParser(prog="mobgcn", description="Superpixel graph classification of hyperspectral images")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_config_arguments(sub.add_parser("run", help="run the full pipeline"))
    _add_config_arguments(sub.add_parser("segment", help="segment a cube into superpixels"))
    _add_config_arguments(sub.add_parser("scales", help="select multiresolution cluster counts"))

    synth = sub.add_parser("synth", help="generate a synthetic labelled scene")
    synth.add_argument("--spec", help="JSON scene description")
    synth.add_argument("--height", type=int, default=64)
    synth.add_argument("--width", type=int, default=64)
    synth.add_argument("--bands", type=int, default=8)
    synth.add_argument("--classes", type=int, default=4)
    synth.add_argument("--geometry", choices=["blocks", "voronoi"], default="blocks")
    synth.add_argument("--regions", type=int, default=16)
    synth.add_argument("--separation", type=float, default=1.0)
    synth.add_argument("--noise", type=float, default=0.1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", required=True, help="output directory")

    metrics = sub.add_parser("metrics", help="score a prediction raster")
    metrics.add_argument("--pred", required=True, help="prediction NPY (classes 1..c)")
    metrics.add_argument("--gt", required=True, help="ground truth file")
    metrics.add_argument("--gt-format", default="npy2d", choices=["npy2d", "csv", "npz"])
    metrics.add_argument("--test-mask", help="boolean NPY; defaults to every labelled pixel")
    metrics.add_argument("--output", help="metrics JSON path (printed when omitted)")

    render = sub.add_parser("render", help="render a class-map NPY")
    render.add_argument("--map", required=True, help="class-map NPY (0 = unlabelled)")
    render.add_argument("--output", required=True, help=".ppm or .png path")
    render.add_argument("--classes", type=int, help="palette size (defaults to the maximum class)")
    return parser


def command_run(args):
    run_dir = PipelineRunner(build_config(args)).run()
    print(run_dir)


def _prepare_runner(args, name):
    runner = PipelineRunner(build_config(args))
    runner.run_dir = create_run_dir(os.path.join(runner.output_root, name), runner.config_hash)
    cube, _ = runner.load()
    reduced = runner.pca(runner.normalize(cube))
    return runner, reduced, runner.segment(reduced)


def command_segment(args):
    runner, reduced, seg = _prepare_runner(args, "segment")
    first = reduced.values[:, :, 0]
    span = np.ptp(first)
    gray = np.zeros(first.shape, dtype=np.uint8) if span == 0 else np.rint(255 * (first - first.min()) / span).astype(np.uint8)
    rgb = overlay_boundaries(np.repeat(gray[:, :, None], 3, axis=2), boundary_mask(seg), color=(255, 0, 0))
    save_image(rgb, os.path.join(runner.run_dir, "boundaries.ppm"))
    print(f"{seg.n} superpixels -> {runner.run_dir}")


def command_scales(args):
    runner, reduced, seg = _prepare_runner(args, "scales")
    table, _ = runner.features(seg, reduced)
    print(json.dumps(runner.scales(table)))
    print(runner.run_dir)


def command_synth(args):
    if args.spec:
        spec = SyntheticSceneSpec.from_dict(read_json(args.spec))
    else:
        spec = SyntheticSceneSpec(height=args.height, width=args.width, bands=args.bands, classes=args.classes,
                                  geometry=args.geometry, regions=args.regions, separation=args.separation,
                                  noise_std=args.noise)
    cube, gt = generate_synthetic(spec, seed=args.seed)
    os.makedirs(args.output, exist_ok=True)
    hsi_io.save_cube(cube, os.path.join(args.output, "cube.npy"))
    hsi_io.save_ground_truth(gt, os.path.join(args.output, "gt.npy"))
    write_json(os.path.join(args.output, "scene.json"), {"spec": spec.to_dict(), "seed": args.seed})
    print(args.output)


def command_metrics(args):
    gt = hsi_io.load_ground_truth(args.gt, args.gt_format)
    pred = np.load(args.pred, allow_pickle=False)
    test_mask = np.load(args.test_mask, allow_pickle=False) if args.test_mask else gt.labeled_mask()
    report = compute_metrics(pred, gt, test_mask)
    if args.output:
        write_json(args.output, report.to_dict())
    else:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


def command_render(args):
    class_map = np.load(args.map, allow_pickle=False)
    classes = args.classes if args.classes is not None else int(class_map.max())
    render_map(class_map, args.output, palette=class_palette(classes))
    print(args.output)


COMMANDS = {
    "run": command_run,
    "segment": command_segment,
    "scales": command_scales,
    "synth": command_synth,
    "metrics": command_metrics,
    "render": command_render,
}


def main(argv=None):
    AppConfig.load_environment()
    logging.basicConfig(level=getattr(logging, AppConfig.LOG_LEVEL, logging.INFO), format=LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except StageError as e:
        logger.error("%s", e)
        print(f"stage={e.stage}: {type(e.cause).__name__}: {e.cause}", file=sys.stderr)
        return 2
    except (MobGcnError, FileNotFoundError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.excepthook = exception_hook
    sys.exit(main())
