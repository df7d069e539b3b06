# models/segmentation.py
#
# This module defines the Segmentation and SegmentationParams data classes.
# A Segmentation is the superpixel partition of an image: every pixel carries exactly one
# contiguous segment id 0..n-1.
#
# Usage: Produced by core.segmentation.felzenszwalb_segment and consumed by feature
# extraction, seed labelling and pixel-level prediction.
#
# Helper modules: Uses dataclasses and numpy.

from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import ConfigError, DataError


@dataclass(frozen=True)
class SegmentationParams:
    """
    Parameters of the graph-based superpixel segmentation.

    Attributes:
        min_size (int): Minimum superpixel size s in pixels.
        scale_k (Optional[float]): Merge threshold constant. None derives it from the image
                                   as a multiple of the median edge weight.
        smoothing_sigma (float): Gaussian pre-smoothing width in pixels; 0 disables smoothing.
    """
    min_size: int = 20
    scale_k: Optional[float] = None
    smoothing_sigma: float = 0.8

    def __post_init__(self):
        if int(self.min_size) < 1:
            raise ConfigError("segmentation.min_size must be >= 1")
        if self.scale_k is not None and not self.scale_k > 0:
            raise ConfigError("segmentation.scale_k must be > 0")
        if self.smoothing_sigma < 0:
            raise ConfigError("segmentation.smoothing_sigma must be >= 0")

    def to_dict(self):
        return {"min_size": int(self.min_size), "scale_k": self.scale_k,
                "smoothing_sigma": float(self.smoothing_sigma)}


@dataclass(frozen=True, eq=False)
class Segmentation:
    """
    Data class representing a superpixel partition.

    Attributes:
        segment_id (np.ndarray): height x width int32 raster of ids 0..n-1.
        scale_k (float): Threshold constant the partition was produced with (0 if unknown).
        min_size (int): Minimum size enforced by the merge pass (1 if unknown).
    """
    segment_id: np.ndarray
    scale_k: float = 0.0
    min_size: int = 1

    def __post_init__(self):
        ids = np.array(self.segment_id, dtype=np.int32, order="C")
        if ids.ndim != 2 or min(ids.shape) <= 0:
            raise DataError(f"segmentation must be a non-empty 2-D raster, got shape {ids.shape}")
        n = int(ids.max()) + 1
        if ids.min() != 0 or np.unique(ids).size != n:
            raise DataError("segment ids must be contiguous 0..n-1")
        ids.setflags(write=False)
        object.__setattr__(self, "segment_id", ids)

    @property
    def height(self):
        return self.segment_id.shape[0]

    @property
    def width(self):
        return self.segment_id.shape[1]

    @property
    def n(self):
        return int(self.segment_id.max()) + 1

    @property
    def sizes(self):
        """Per-segment pixel counts n_i."""
        return np.bincount(self.segment_id.ravel(), minlength=self.n)

    def __str__(self):
        return f"Segmentation({self.height}x{self.width}, n={self.n}, min_size={self.min_size})"
