# models/cube.py
#
# This module defines the raster data classes of the pipeline: the raw hyperspectral cube,
# its ground-truth label raster, and the PCA-reduced cube.
#
# Usage: Returned by core.hsi_io loaders and consumed by segmentation, feature extraction
# and evaluation. Instances are treated as immutable once constructed.
#
# Helper modules: Uses dataclasses for concise class definition and numpy for storage.

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.errors import DataError


@dataclass(frozen=True, eq=False)
class HsiCube:
    """
    Data class representing a hyperspectral image cube.

    Attributes:
        values (np.ndarray): height x width x bands reflectance array, float32, all finite.
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 3 or min(values.shape) <= 0:
            raise DataError(f"cube must be a non-empty 3-D array, got shape {values.shape}")
        values = np.array(values, dtype=np.float32, order="C")
        if not np.all(np.isfinite(values)):
            raise DataError("cube contains NaN or Inf values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def bands(self):
        return self.values.shape[2]

    def pixels(self):
        """Return the (height*width) x bands pixel matrix in row-major order."""
        return self.values.reshape(-1, self.bands)

    def __str__(self):
        return f"HsiCube({self.height}x{self.width}x{self.bands})"


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """
    Data class representing a ground-truth label raster.

    Attributes:
        labels (np.ndarray): height x width integer array, 0 = unlabeled, 1..c = classes.
        class_count (int): Number of classes c (the maximum label).
    """
    labels: np.ndarray
    class_count: int = field(default=-1)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or min(labels.shape) <= 0:
            raise DataError(f"ground truth must be a non-empty 2-D array, got shape {labels.shape}")
        if labels.dtype.kind == "f":
            if not np.all(np.isfinite(labels)) or np.any(labels != np.round(labels)):
                raise DataError("ground truth labels must be integers")
        labels = np.array(labels, dtype=np.int32, order="C")
        if np.any(labels < 0):
            raise DataError("ground truth contains negative labels")
        inferred = int(labels.max())
        class_count = inferred if self.class_count < 0 else int(self.class_count)
        if inferred > class_count:
            raise DataError(f"label {inferred} exceeds class count {class_count}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_count", class_count)

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def labeled_mask(self):
        return self.labels > 0

    def class_counts(self):
        """Pixel count per class id 1..c (index 0 of the result is class 1)."""
        return np.bincount(self.labels.ravel(), minlength=self.class_count + 1)[1:]

    def check_matches(self, cube):
        if (self.height, self.width) != (cube.height, cube.width):
            raise DataError(
                f"ground truth {self.height}x{self.width} does not match cube {cube.height}x{cube.width}")


@dataclass(frozen=True, eq=False)
class ReducedCube:
    """
    Data class representing a PCA-reduced cube.

    Attributes:
        values (np.ndarray): height x width x d principal-component scores (float64).
        explained_variance_ratio (float): Cumulative variance fraction kept by the d components.
        components (np.ndarray): bands x d loading vectors (columns).
        mean (np.ndarray): Per-band mean removed before projection.
        eigenvalues (np.ndarray): All covariance eigenvalues, descending.
    """
    values: np.ndarray
    explained_variance_ratio: float = 1.0
    components: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    eigenvalues: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.ndim != 3 or min(values.shape) <= 0:
            raise DataError(f"reduced cube must be a non-empty 3-D array, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def dims(self):
        return self.values.shape[2]

    def pixels(self):
        return self.values.reshape(-1, self.dims)
