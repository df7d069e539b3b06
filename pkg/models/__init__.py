# models/__init__.py
#
# This __init__.py file marks the 'models' directory as a Python package and exposes
# the data classes of the pipeline at package level, so callers can write:
#   from models import HsiCube, Segmentation, PipelineConfig
#
# Usage: This file is automatically processed when the 'models' package or its modules are imported.

from .config import (DatasetConfig, FeatureConfig, GraphConfig, ModelConfig, PipelineConfig,
                     ScaleSelectConfig, SegmentationConfig, SplitSpec, SyntheticSceneSpec, TrainConfig,
                     TrainingConfig)
from .cube import GroundTruth, HsiCube, ReducedCube
from .features import SeedLabels, SuperpixelFeatures
from .graph import GraphParams, SpatialGraph
from .reports import ClusterResult, MetricsReport, MetricsSummary, OptimalScales, ScaleProfile, TrainResult
from .segmentation import Segmentation, SegmentationParams

__all__ = [
    "ClusterResult",
    "DatasetConfig",
    "FeatureConfig",
    "GraphConfig",
    "GraphParams",
    "GroundTruth",
    "HsiCube",
    "MetricsReport",
    "MetricsSummary",
    "ModelConfig",
    "OptimalScales",
    "PipelineConfig",
    "ReducedCube",
    "ScaleProfile",
    "ScaleSelectConfig",
    "SeedLabels",
    "Segmentation",
    "SegmentationConfig",
    "SegmentationParams",
    "SpatialGraph",
    "SplitSpec",
    "SuperpixelFeatures",
    "SyntheticSceneSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingConfig",
]
