# models/config.py
#
# This module defines the configuration data classes of a pipeline run: the nested
# PipelineConfig (one section per stage), the split and training settings, and the
# synthetic scene description.
#
# Usage: PipelineConfig.from_dict(json_dict) fills every omitted field from AppConfig, so a
# run is fully described by its echoed to_dict() output; config_hash() identifies the run.
#
# Helper modules: Uses dataclasses, hashlib and json; defaults come from utils.config.AppConfig.

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Union

from core.errors import ConfigError
from utils.config import AppConfig


def _default(name):
    """Late-bound AppConfig default, so environment overrides loaded at startup apply."""
    return field(default_factory=lambda: copy.deepcopy(getattr(AppConfig, name)))


@dataclass
class DatasetConfig:
    cube_path: Optional[str] = None
    gt_path: Optional[str] = None
    cube_format: str = "npy3d"
    gt_format: str = "npy2d"
    preset: Optional[str] = None

    def validate(self):
        if self.cube_format not in ("npy3d", "raw_bsq", "npz"):
            raise ConfigError(f"dataset.cube_format '{self.cube_format}' is not supported")
        if self.gt_format not in ("npy2d", "csv", "npz"):
            raise ConfigError(f"dataset.gt_format '{self.gt_format}' is not supported")
        if self.preset is not None and self.preset not in AppConfig.DATASET_PRESETS:
            raise ConfigError(f"dataset.preset '{self.preset}' is unknown")


@dataclass
class SegmentationConfig:
    min_size: int = _default("SEGMENT_MIN_SIZE")
    scale_k: Optional[float] = None
    smoothing_sigma: float = _default("SEGMENT_SMOOTHING_SIGMA")
    scale_multiplier: float = _default("SEGMENT_SCALE_MULTIPLIER")
    variance_target: float = _default("PCA_VARIANCE_TARGET")

    def validate(self):
        if self.min_size < 1:
            raise ConfigError("segmentation.min_size must be >= 1")
        if self.scale_k is not None and self.scale_k <= 0:
            raise ConfigError("segmentation.scale_k must be > 0")
        if self.smoothing_sigma < 0:
            raise ConfigError("segmentation.smoothing_sigma must be >= 0")
        if not 0.0 < self.variance_target <= 1.0:
            raise ConfigError("segmentation.variance_target must lie in (0, 1]")


@dataclass
class FeatureConfig:
    h: float = _default("WEIGHTED_KERNEL_H")
    node_features: str = _default("NODE_FEATURES")

    def validate(self):
        if self.h <= 0:
            raise ConfigError("features.h must be > 0")
        if self.node_features not in ("mean", "weighted", "concat"):
            raise ConfigError(f"features.node_features '{self.node_features}' is not supported")


@dataclass
class GraphConfig:
    beta: float = _default("GRAPH_BETA")
    sigma_s: float = _default("GRAPH_SIGMA_S")
    sigma_l: float = _default("GRAPH_SIGMA_L")
    knn: int = _default("GRAPH_KNN")

    def validate(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("graph.beta must lie in [0, 1]")
        if self.sigma_s <= 0 or self.sigma_l <= 0:
            raise ConfigError("graph sigmas must be > 0")
        if self.knn < 1:
            raise ConfigError("graph.knn must be >= 1")


@dataclass
class ModelConfig:
    """
    kind: "gcn" (two-layer baseline), "mobgcn" (multiresolution) or "lgc" (label propagation).
    resolutions: list of cluster counts, "auto" (scale selection) or None (one level of c clusters).
    use_norm / coarsen_norm: latent normalisation and coarse-graph normalisation, each switchable for ablation.
    """
    kind: str = _default("MODEL_KIND")
    hidden: int = _default("MODEL_HIDDEN")
    resolutions: Union[List[int], str, None] = None
    temperature: float = _default("MODEL_TEMPERATURE")
    use_norm: bool = _default("MODEL_USE_NORM")
    coarsen_norm: bool = _default("MODEL_COARSEN_NORM")

    def validate(self):
        if self.kind not in ("gcn", "mobgcn", "lgc"):
            raise ConfigError(f"model.kind '{self.kind}' is not supported")
        if self.hidden < 1:
            raise ConfigError("model.hidden must be >= 1")
        if self.temperature <= 0:
            raise ConfigError("model.temperature must be > 0")
        if isinstance(self.resolutions, str) and self.resolutions != "auto":
            raise ConfigError("model.resolutions must be a list of ints or 'auto'")
        if isinstance(self.resolutions, list) and any(int(r) < 2 for r in self.resolutions):
            raise ConfigError("model.resolutions entries must be >= 2")


@dataclass
class SplitSpec:
    fraction: float = _default("TRAIN_FRACTION")
    seed: int = _default("TRAIN_SEED")
    stratified: bool = True

    def validate(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError("training.fraction must lie in (0, 1]")


@dataclass
class TrainConfig:
    mu: float = _default("LGC_MU")
    epochs: int = _default("TRAIN_EPOCHS")
    learning_rate: float = _default("TRAIN_LEARNING_RATE")
    seed: int = _default("TRAIN_SEED")

    def validate(self):
        if self.mu < 0:
            raise ConfigError("training.mu must be >= 0")
        if self.epochs < 0:
            raise ConfigError("training.epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("training.learning_rate must be > 0")


@dataclass
class TrainingConfig:
    fraction: float = _default("TRAIN_FRACTION")
    mu: float = _default("LGC_MU")
    learning_rate: float = _default("TRAIN_LEARNING_RATE")
    epochs: int = _default("TRAIN_EPOCHS")
    repeats: int = _default("TRAIN_REPEATS")
    seed: int = _default("TRAIN_SEED")
    stratified: bool = True

    def validate(self):
        self.split_spec(0).validate()
        self.train_config(0).validate()
        if self.repeats < 1:
            raise ConfigError("training.repeats must be >= 1")

    def split_spec(self, repeat):
        return SplitSpec(fraction=self.fraction, seed=self.seed + repeat, stratified=self.stratified)

    def train_config(self, repeat):
        return TrainConfig(mu=self.mu, epochs=self.epochs, learning_rate=self.learning_rate,
                           seed=self.seed + repeat)


@dataclass
class ScaleSelectConfig:
    m: int = _default("SCALES_TOP_M")
    min_scale: int = _default("SCALES_MIN")
    max_scale: int = _default("SCALES_MAX")
    trees: int = _default("IFOREST_TREES")
    subsample: int = _default("IFOREST_SUBSAMPLE")
    contamination: float = _default("IFOREST_CONTAMINATION")
    cv_mode: str = "printed"

    def validate(self):
        if self.m < 1:
            raise ConfigError("scale_select.m must be >= 1")
        if self.min_scale < 2 or self.max_scale <= self.min_scale:
            raise ConfigError("scale_select range must satisfy 2 <= min_scale < max_scale")
        if not 0.0 <= self.contamination < 0.5:
            raise ConfigError("scale_select.contamination must lie in [0, 0.5)")
        if self.cv_mode not in ("printed", "relative"):
            raise ConfigError("scale_select.cv_mode must be 'printed' or 'relative'")


_SECTIONS = {
    "dataset": DatasetConfig,
    "segmentation": SegmentationConfig,
    "features": FeatureConfig,
    "graph": GraphConfig,
    "model": ModelConfig,
    "training": TrainingConfig,
    "scale_select": ScaleSelectConfig,
}


@dataclass
class PipelineConfig:
    """
    Full description of a pipeline run. Omitted fields take AppConfig defaults.
    """
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    scale_select: ScaleSelectConfig = field(default_factory=ScaleSelectConfig)
    output_dir: str = _default("OUTPUT_DIR")

    def validate(self):
        for name in _SECTIONS:
            getattr(self, name).validate()
        return self

    def apply_preset(self):
        """Copy min segment size and class-count resolutions from the dataset preset, if any."""
        if self.dataset.preset is None:
            return self
        preset = AppConfig.DATASET_PRESETS[self.dataset.preset]
        self.segmentation.min_size = preset["min_size"]
        if self.model.resolutions is None:
            self.model.resolutions = list(preset["resolutions"])
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        """
        Build a config from a (possibly partial) nested dict.
        Unknown sections or keys raise ConfigError naming the key.
        """
        data = dict(data or {})
        kwargs = {}
        for key, value in data.items():
            if key == "output_dir":
                kwargs[key] = str(value)
                continue
            if key not in _SECTIONS:
                raise ConfigError(f"unknown config section '{key}'")
            section_cls = _SECTIONS[key]
            known = {f.name for f in fields(section_cls)}
            unknown = set(value) - known
            if unknown:
                raise ConfigError(f"unknown key(s) in '{key}': {', '.join(sorted(unknown))}")
            kwargs[key] = section_cls(**value)
        config = cls(**kwargs)
        return config.validate()

    def with_overrides(self, assignments):
        """
        Return a copy with dotted-path overrides applied, e.g. ["training.epochs=50", "model.kind=gcn"].
        Values are parsed as JSON when possible, otherwise kept as strings.
        """
        data = self.to_dict()
        for assignment in assignments or []:
            if "=" not in assignment:
                raise ConfigError(f"override '{assignment}' must look like section.key=value")
            path, raw = assignment.split("=", 1)
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            parts = path.strip().split(".")
            target = data
            for part in parts[:-1]:
                if part not in target or not isinstance(target[part], dict):
                    raise ConfigError(f"unknown config path '{path}'")
                target = target[part]
            if parts[-1] not in target:
                raise ConfigError(f"unknown config path '{path}'")
            target[parts[-1]] = value
        return PipelineConfig.from_dict(data)

    def config_hash(self):
        """SHA-256 of the canonical JSON echo; identifies a run for exact replay."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class SyntheticSceneSpec:
    """
    Description of a synthetic labelled scene.

    Attributes:
        height, width (int): Raster size in pixels.
        bands (int): Spectral band count B.
        classes (int): Planted class count g (>= 2).
        geometry (str): "blocks" (regular grid of rectangles) or "voronoi" (random seeds).
        regions (int): Number of regions; classes are assigned round-robin so each appears.
        separation (float): Minimum pairwise distance between class signatures.
        noise_std (float): Standard deviation of i.i.d. Gaussian pixel noise.
        signatures (Optional[list]): Explicit g x B signatures; generated when None.
    """
    height: int = 64
    width: int = 64
    bands: int = 8
    classes: int = 4
    geometry: str = "blocks"
    regions: int = 16
    separation: float = 1.0
    noise_std: float = 0.1
    signatures: Optional[list] = None

    def __post_init__(self):
        if self.classes < 2:
            raise ConfigError("synthetic scene needs at least 2 classes")
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise ConfigError("synthetic scene dimensions must be positive")
        if self.geometry not in ("blocks", "voronoi"):
            raise ConfigError("synthetic geometry must be 'blocks' or 'voronoi'")
        if self.regions < self.classes:
            raise ConfigError("synthetic scene needs at least as many regions as classes")
        if self.noise_std < 0:
            raise ConfigError("synthetic noise_std must be >= 0")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synthetic scene key(s): {', '.join(sorted(unknown))}")
        return cls(**data)
