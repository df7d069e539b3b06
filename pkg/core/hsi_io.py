# hsi_io.py
#
# This module loads and saves hyperspectral cubes and ground-truth rasters, rescales bands
# to [0, 1], and performs variance-targeted PCA reduction.
#
# Supported formats:
#   cubes         npy3d (H, W, B float32/float64), raw_bsq (band-sequential little-endian
#                 float32 with a JSON sidecar {height, width, bands}), npz (array "cube")
#   ground truth  npy2d, csv (comma separated integers), npz (array "gt")
#
# Usage: Called by the pipeline runner's load/preprocess stages and by the CLI subcommands.
#
# Helper modules: Uses numpy for I/O and linear algebra, json for BSQ sidecars.

import json
import logging
import os

import numpy as np

from core.errors import DataError, FormatError
from models.cube import GroundTruth, HsiCube, ReducedCube

logger = logging.getLogger(__name__)

_BSQ_DTYPE = np.dtype("<f4")


def _sidecar_path(path):
    """The JSON header of a raw BSQ file: <path>.json, falling back to <stem>.json."""
    candidate = f"{path}.json"
    if os.path.exists(candidate):
        return candidate
    return os.path.splitext(path)[0] + ".json"


def _read_bsq_header(path):
    sidecar = _sidecar_path(path)
    try:
        with open(sidecar, "r", encoding="utf-8") as handle:
            header = json.load(handle)
        dims = tuple(int(header[key]) for key in ("height", "width", "bands"))
    except FileNotFoundError as e:
        raise FormatError(f"missing BSQ sidecar header {sidecar}") from e
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(f"malformed BSQ sidecar header {sidecar}: {e}") from e
    if min(dims) <= 0:
        raise FormatError(f"BSQ header dimensions must be positive, got {dims}")
    return dims


def _load_npy(path, ndim):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        array = np.load(path, allow_pickle=False)
    except (ValueError, OSError) as e:
        raise FormatError(f"cannot parse NPY file {path}: {e}") from e
    if array.ndim != ndim:
        raise FormatError(f"{path}: expected a {ndim}-D array, got {array.ndim}-D")
    return array


def _load_npz_member(path, member):
    try:
        with np.load(path, allow_pickle=False) as archive:
            if member not in archive:
                raise FormatError(f"{path}: archive has no '{member}' array")
            return archive[member]
    except (ValueError, OSError) as e:
        raise FormatError(f"cannot parse NPZ file {path}: {e}") from e


def load_cube(path, format="npy3d"):
    """
    Load a hyperspectral cube and cast it to float32.

    Raises:
        FormatError: unreadable header or wrong dimensionality.
        DataError: NaN/Inf values or a payload size that disagrees with the header.
    """
    if format == "npy3d":
        values = _load_npy(path, 3)
        if values.dtype not in (np.float32, np.float64):
            raise FormatError(f"{path}: cube dtype must be float32 or float64, got {values.dtype}")
    elif format == "raw_bsq":
        height, width, bands = _read_bsq_header(path)
        payload = np.fromfile(path, dtype=_BSQ_DTYPE)
        if payload.size != height * width * bands:
            raise DataError(
                f"{path}: expected {height * width * bands} floats for {height}x{width}x{bands}, got {payload.size}")
        values = payload.reshape(bands, height, width).transpose(1, 2, 0)
    elif format == "npz":
        values = _load_npz_member(path, "cube")
        if values.ndim != 3:
            raise FormatError(f"{path}: 'cube' must be 3-D")
    else:
        raise FormatError(f"unknown cube format '{format}'")
    cube = HsiCube(values)
    logger.info("Loaded %s from %s", cube, path)
    return cube


def save_cube(cube, path, format="npy3d"):
    """Write a cube so that load_cube(path, format) returns identical values."""
    if format == "npy3d":
        np.save(path, np.ascontiguousarray(cube.values, dtype=np.float32))
    elif format == "raw_bsq":
        cube.values.transpose(2, 0, 1).astype(_BSQ_DTYPE).tofile(path)
        with open(f"{path}.json", "w", encoding="utf-8") as handle:
            json.dump({"height": cube.height, "width": cube.width, "bands": cube.bands}, handle)
    else:
        raise FormatError(f"unknown cube format '{format}'")
    return path


def load_ground_truth(path, format="npy2d", class_count=None):
    """
    Load a ground-truth raster; 0 marks unlabeled pixels and c is inferred as the maximum label.

    Raises:
        FormatError: unreadable file.
        DataError: negative or non-integer labels.
    """
    if format == "npy2d":
        labels = _load_npy(path, 2)
    elif format == "csv":
        try:
            labels = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise FormatError(f"cannot parse CSV ground truth {path}: {e}") from e
    elif format == "npz":
        labels = _load_npz_member(path, "gt")
    else:
        raise FormatError(f"unknown ground-truth format '{format}'")
    gt = GroundTruth(labels, -1 if class_count is None else class_count)
    logger.info("Loaded ground truth %dx%d with %d classes from %s", gt.height, gt.width, gt.class_count, path)
    return gt


def save_ground_truth(gt, path, format="npy2d"):
    if format == "npy2d":
        np.save(path, gt.labels)
    elif format == "csv":
        np.savetxt(path, gt.labels, fmt="%d", delimiter=",")
    else:
        raise FormatError(f"unknown ground-truth format '{format}'")
    return path


def normalize_bands(cube):
    """
    Affinely map each band to [0, 1]; a constant band maps to all zeros.
    """
    pixels = cube.values.astype(np.float64)
    lo = pixels.min(axis=(0, 1))
    hi = pixels.max(axis=(0, 1))
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (pixels - lo) / safe, 0.0)
    return HsiCube(scaled)


def _orient(vectors):
    """Flip each eigenvector so its largest-magnitude entry is non-negative."""
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def pca_reduce(cube, variance_target=0.999):
    """
    Project the cube onto the fewest principal components whose cumulative eigenvalue
    ratio reaches variance_target. PCA is fit on every pixel (transductive setting).

    Rank-0 data keeps a single all-zero component.
    """
    if not 0.0 < variance_target <= 1.0:
        raise DataError(f"variance_target must lie in (0, 1], got {variance_target}")
    pixels = cube.pixels().astype(np.float64)
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    covariance = centered.T @ centered / pixels.shape[0]
    covariance = 0.5 * (covariance + covariance.T)

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = _orient(eigenvectors[:, order])

    total = eigenvalues.sum()
    if total <= 0.0:
        logger.warning("PCA input has rank 0; keeping one all-zero component")
        scores = np.zeros((pixels.shape[0], 1))
        return ReducedCube(scores.reshape(cube.height, cube.width, 1), 1.0,
                           eigenvectors[:, :1], mean, eigenvalues)

    cumulative = np.cumsum(eigenvalues) / total
    d = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    d = min(d, cube.bands)
    components = eigenvectors[:, :d]
    scores = centered @ components
    ratio = float(min(cumulative[d - 1], 1.0))
    logger.info("PCA kept %d of %d bands (explained variance %.6f)", d, cube.bands, ratio)
    return ReducedCube(scores.reshape(cube.height, cube.width, d), ratio, components, mean, eigenvalues)


def explained_variance_curve(reduced):
    """Cumulative explained-variance ratio for every component count 1..bands."""
    eigenvalues = reduced.eigenvalues
    total = eigenvalues.sum()
    if total <= 0:
        return np.ones(len(eigenvalues))
    return np.cumsum(eigenvalues) / total
