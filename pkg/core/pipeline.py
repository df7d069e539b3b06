# pipeline.py
#
# This module provides the PipelineRunner class, which executes a complete classification
# run: load -> normalize -> pca -> segment -> features -> graph -> (scales) -> for every
# repeat: seeds -> train -> predict -> metrics, then writes the run directory.
# Each step is a @pipeline_stage method, so failures surface as StageError naming the step
# and every start/finish is recorded in activity.jsonl.
#
# Run directory contents:
#   config_echo.json   full configuration with defaults filled in
#   metrics.json       per-repeat reports and mean/std summary (no timings; replayable bytes)
#   timings.json       wall-clock seconds per stage, training and inference
#   map_<kind>.ppm/png classification map of the first repeat, plus map_<kind>_legend.json
#   loss_trace.csv     per-epoch loss of every repeat
#   segmentation.npy, graph_edges.csv, pred_map.npy, test_mask.npy, checkpoints/repeat_<r>/
#   scale_profile.csv, optimal_scales.json, nn_nroc.ppm when resolutions are "auto"
#   run.log, activity.jsonl
#
# Usage: run_dir = PipelineRunner(config).run()
#
# Helper modules: Uses the core stage modules, utils.helpers for artifacts, utils.image_utils for maps.

import logging
import os
import time

from core import features as feature_ops
from core import hsi_io
from core import training as training_ops
from core.activity_logger import ActivityLogger
from core.errors import ConfigError
from core.graph_builder import build_knn_graph, write_edge_list_csv
from core.label_propagation import LgcPropagation
from core.metrics import aggregate_reports, compute_metrics
from core.networks import GraphInputs, build_model, parameter_count, save_checkpoint
from core.scale_select import build_scale_profile, select_optimal_scales, write_scale_profile_csv
from core.segmentation import felzenszwalb_segment, save_segmentation
from models.graph import GraphParams
from models.segmentation import SegmentationParams
from utils.decorators import pipeline_stage
from utils.helpers import create_run_dir, save_array, write_json, write_loss_traces
from utils.image_utils import class_palette, render_curve, render_map

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class PipelineRunner:
    """
    Executes one configured run and owns its run directory.
    """

    def __init__(self, config, output_root=None):
        config.apply_preset()
        self.config = config.validate()
        self.output_root = output_root or config.output_dir
        self.config_hash = config.config_hash()
        self.run_dir = None
        self.resolutions = None
        self.train_seconds = []
        self.inference_seconds = []

    def _path(self, name):
        return os.path.join(self.run_dir, name)

    # --- stages ---

    @pipeline_stage("load")
    def load(self):
        dataset = self.config.dataset
        if not dataset.cube_path:
            raise ConfigError("dataset.cube_path is required")
        gt_path, gt_format = dataset.gt_path, dataset.gt_format
        if gt_path is None and dataset.cube_format == "npz":
            gt_path, gt_format = dataset.cube_path, "npz"
        if gt_path is None:
            raise ConfigError("dataset.gt_path is required")
        cube = hsi_io.load_cube(dataset.cube_path, dataset.cube_format)
        gt = hsi_io.load_ground_truth(gt_path, gt_format)
        gt.check_matches(cube)
        return cube, gt

    @pipeline_stage("normalize")
    def normalize(self, cube):
        return hsi_io.normalize_bands(cube)

    @pipeline_stage("pca")
    def pca(self, cube):
        return hsi_io.pca_reduce(cube, self.config.segmentation.variance_target)

    @pipeline_stage("segment")
    def segment(self, reduced):
        cfg = self.config.segmentation
        params = SegmentationParams(min_size=cfg.min_size, scale_k=cfg.scale_k, smoothing_sigma=cfg.smoothing_sigma)
        seg = felzenszwalb_segment(reduced, params, cfg.scale_multiplier)
        save_segmentation(seg, self._path("segmentation.npy"))
        return seg

    @pipeline_stage("features")
    def features(self, seg, reduced):
        cfg = self.config.features
        table = feature_ops.extract_features(seg, reduced, cfg.h)
        return table, feature_ops.node_feature_matrix(table, cfg.node_features)

    @pipeline_stage("graph")
    def graph(self, table):
        cfg = self.config.graph
        graph = build_knn_graph(table, GraphParams(beta=cfg.beta, sigma_s=cfg.sigma_s, sigma_l=cfg.sigma_l,
                                                   knn=cfg.knn))
        write_edge_list_csv(graph, self._path("graph_edges.csv"))
        return graph

    @pipeline_stage("scales")
    def scales(self, table):
        cfg = self.config.scale_select
        profile = build_scale_profile(table.mean, seed=self.config.training.seed, config=cfg)
        chosen = select_optimal_scales(profile, cfg.m)
        write_scale_profile_csv(profile, self._path("scale_profile.csv"))
        write_json(self._path("optimal_scales.json"), chosen.to_dict())
        render_curve(profile.scales, profile.nn_nroc, self._path("nn_nroc.ppm"), marks=chosen.selected)
        if not chosen.selected:
            raise ConfigError("scale selection found no NN-nRoC peaks")
        logger.info("Selected resolutions %s", chosen.selected)
        return list(chosen.selected)

    @pipeline_stage("seeds")
    def seeds(self, seg, gt, repeat):
        train_mask = training_ops.sample_training_pixels(gt, self.config.training.split_spec(repeat))
        return train_mask, feature_ops.seed_labels(seg, gt, train_mask)

    @pipeline_stage("train")
    def train(self, model, inputs, X, seeds, repeat):
        result = training_ops.train(model, inputs, X, seeds, self.config.training.train_config(repeat))
        self.train_seconds.append(result.train_seconds)
        return result

    @pipeline_stage("predict")
    def predict(self, result, inputs, X, seg):
        started = time.perf_counter()
        pred_map = training_ops.predict_pixels(result.model, inputs, X, seg)
        result.inference_seconds = time.perf_counter() - started
        self.inference_seconds.append(result.inference_seconds)
        return pred_map

    @pipeline_stage("metrics")
    def metrics(self, pred_map, gt, test_mask, seed):
        return compute_metrics(pred_map, gt, test_mask, seed=seed)

    # --- orchestration ---

    def build_model(self, in_dim, classes, seed):
        cfg = self.config.model
        if cfg.kind == "lgc":
            return LgcPropagation(mu=self.config.training.mu)
        return build_model(cfg.kind, in_dim, classes, hidden=cfg.hidden, resolutions=self.resolutions,
                           temperature=cfg.temperature, use_norm=cfg.use_norm, seed=seed,
                           coarsen_norm=cfg.coarsen_norm)

    def run_repeats(self, seg, gt, X, graph):
        """
        Train and evaluate `training.repeats` independent runs; repeat r uses seed + r for its
        split, initialisation and Gumbel noise.
        """
        inputs = GraphInputs.from_graph(graph)
        reports, traces, first = [], [], None
        for repeat in range(self.config.training.repeats):
            seed = self.config.training.seed + repeat
            train_mask, seeds = self.seeds(seg, gt, repeat)
            model = self.build_model(X.shape[1], gt.class_count, seed)
            result = self.train(model, inputs, X, seeds, repeat)
            pred_map = self.predict(result, inputs, X, seg)
            test_mask = training_ops.held_out_pixels(gt, train_mask)
            reports.append(self.metrics(pred_map, gt, test_mask, seed))
            traces.append(result.loss_trace)
            if result.model.params:
                save_checkpoint(result.model, self._path(os.path.join("checkpoints", f"repeat_{repeat}")))
            if first is None:
                first = (result.model, pred_map, test_mask)
        return aggregate_reports(reports), traces, first

    def run(self):
        """Execute every stage and return the run directory."""
        self.run_dir = create_run_dir(self.output_root, self.config_hash)
        activity = ActivityLogger()
        activity.attach(self.run_dir)
        handler = logging.FileHandler(self._path("run.log"), encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root = logging.getLogger()
        root.addHandler(handler)
        try:
            logger.info("Run %s (config %s) in %s", self.config.model.kind, self.config_hash[:12], self.run_dir)
            write_json(self._path("config_echo.json"), self.config.to_dict())
            cube, gt = self.load()
            reduced = self.pca(self.normalize(cube))
            seg = self.segment(reduced)
            table, X = self.features(seg, reduced)
            graph = self.graph(table)
            resolutions = self.config.model.resolutions
            self.resolutions = self.scales(table) if resolutions == "auto" else resolutions
            summary, traces, (model, pred_map, test_mask) = self.run_repeats(seg, gt, X, graph)
            self._write_outputs(summary, traces, model, pred_map, test_mask, gt, seg, graph)
            logger.info("OA %.2f +/- %.2f  AA %.2f +/- %.2f  Kappa %.2f +/- %.2f", summary.oa_mean, summary.oa_std,
                        summary.aa_mean, summary.aa_std, summary.kappa_mean, summary.kappa_std)
            return self.run_dir
        finally:
            root.removeHandler(handler)
            handler.close()
            activity.detach()

    def _write_outputs(self, summary, traces, model, pred_map, test_mask, gt, seg, graph):
        kind = self.config.model.kind
        write_json(self._path("metrics.json"), {
            "model": kind,
            "config_hash": self.config_hash,
            "seeds": [self.config.training.seed + r for r in range(self.config.training.repeats)],
            "resolutions": getattr(model, "resolutions", None),
            "superpixels": seg.n,
            "edges": int(len(graph.edges())),
            "parameter_count": parameter_count(model),
            "summary": summary.to_dict(),
        })
        write_loss_traces(self._path("loss_trace.csv"), traces)
        save_array(self._path("pred_map.npy"), pred_map)
        save_array(self._path("test_mask.npy"), test_mask)
        palette = class_palette(gt.class_count)
        render_map(pred_map, self._path(f"map_{kind}.ppm"), palette=palette)
        render_map(pred_map, self._path(f"map_{kind}.png"), palette=palette, write_legend_file=False)
        stages = {}
        for record in ActivityLogger().records:
            if record["action"] == "finish" and "seconds" in record["details"]:
                stages[record["stage"]] = stages.get(record["stage"], 0.0) + record["details"]["seconds"]
        write_json(self._path("timings.json"), {"stages": stages, "train_seconds": self.train_seconds,
                                                "inference_seconds": self.inference_seconds})


def run_pipeline(config, output_root=None):
    return PipelineRunner(config, output_root).run()
