# synthetic.py
#
# This module generates labelled synthetic hyperspectral scenes: a region layout (regular
# blocks or Voronoi cells around random seed pixels), one spectral signature per class, and
# pixels equal to their class signature plus i.i.d. Gaussian noise.
#
# Usage: cube, gt = generate_synthetic(SyntheticSceneSpec(classes=4), seed=0)
#
# Helper modules: Uses numpy and scipy.spatial.distance.pdist.

import logging

import numpy as np
from scipy.spatial.distance import pdist

from core.errors import ConfigError
from models.cube import GroundTruth, HsiCube

logger = logging.getLogger(__name__)


def _grid_shape(regions):
    rows = int(np.floor(np.sqrt(regions)))
    while regions % rows:
        rows -= 1
    return rows, regions // rows


def block_regions(height, width, regions):
    """Region id per pixel for a rows x cols grid of near-equal rectangles."""
    rows, cols = _grid_shape(regions)
    if rows > height or cols > width:
        raise ConfigError(f"{regions} blocks do not fit a {height}x{width} raster")
    r = (np.arange(height) * rows) // height
    c = (np.arange(width) * cols) // width
    return r[:, None] * cols + c[None, :]


def voronoi_regions(height, width, regions, rng):
    """Region id per pixel: the nearest of `regions` distinct random seed pixels (ties to the lower id)."""
    if regions > height * width:
        raise ConfigError(f"{regions} Voronoi seeds do not fit a {height}x{width} raster")
    seeds = rng.choice(height * width, size=regions, replace=False)
    seed_rc = np.stack([seeds // width, seeds % width], axis=1).astype(np.float64)
    rows, cols = np.indices((height, width), dtype=np.float64)
    pixels = np.stack([rows.ravel(), cols.ravel()], axis=1)
    d = np.sum((pixels[:, None, :] - seed_rc[None, :, :]) ** 2, axis=2)
    return np.argmin(d, axis=1).reshape(height, width)


def class_signatures(spec, rng):
    """
    g x B signatures. Generated ones are uniform draws rescaled so that the closest pair is
    exactly `separation` apart.
    """
    if spec.signatures is not None:
        signatures = np.asarray(spec.signatures, dtype=np.float64)
        if signatures.shape != (spec.classes, spec.bands):
            raise ConfigError(f"signatures must be {spec.classes}x{spec.bands}, got {signatures.shape}")
        if np.min(pdist(signatures)) <= 0:
            raise ConfigError("class signatures must be pairwise distinct")
        return signatures
    while True:
        signatures = rng.uniform(0.0, 1.0, size=(spec.classes, spec.bands))
        closest = np.min(pdist(signatures))
        if closest > 0:
            return signatures * (spec.separation / closest)


def generate_synthetic(spec, seed=0):
    """
    Build a synthetic scene.

    Returns:
        (HsiCube, GroundTruth): every pixel labelled 1..g; each class owns at least one region.
    """
    rng = np.random.default_rng(seed)
    if spec.geometry == "blocks":
        region = block_regions(spec.height, spec.width, spec.regions)
    else:
        region = voronoi_regions(spec.height, spec.width, spec.regions, rng)
    region_class = rng.permutation(np.arange(spec.regions) % spec.classes) + 1
    labels = region_class[region]
    signatures = class_signatures(spec, rng)
    values = signatures[labels - 1]
    if spec.noise_std > 0:
        values = values + rng.normal(0.0, spec.noise_std, size=values.shape)
    cube = HsiCube(values)
    gt = GroundTruth(labels, class_count=spec.classes)
    logger.info("Generated %dx%dx%d synthetic scene: %d classes over %d %s regions", spec.height, spec.width,
                spec.bands, spec.classes, spec.regions, spec.geometry)
    return cube, gt
