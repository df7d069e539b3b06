import json
import logging
import os

import numpy as np
from PyQt6.QtCore import QPoint
from PyQt6.QtGui import QColor, QImage, QPainter, QPen, QPolygon

from core.errors import ConfigError, DataError, FormatError

# image_utils.py
#
# This module provides the image outputs of the pipeline: a deterministic class palette,
# classification-map rendering with a legend JSON, superpixel boundary overlays, and small
# line-plot rasters for the scale-selection curves.
# Images are handled as height x width x 3 uint8 arrays and converted to QImage for encoding
# (binary PPM or PNG) and for drawing; both encoders are deterministic, so the same array
# always gives the same bytes.
#
# Usage: render_map(pred_map, "map_mobgcn.png"), overlay_boundaries(rgb, boundary_mask(seg)),
# render_curve(scales, values, "nn_nroc.ppm").
#
# Helper modules: Uses numpy for rasters, json for legends and PyQt6.QtGui (QImage, QPainter,
# QColor) for encoding, decoding and drawing.

logger = logging.getLogger(__name__)

# Class colors 1..20; further classes get evenly spaced hues.
BASE_COLORS = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212),
    (0, 128, 128), (220, 190, 255), (170, 110, 40), (255, 250, 200), (128, 0, 0),
    (170, 255, 195), (128, 128, 0), (255, 215, 180), (0, 0, 128), (128, 128, 128),
]

IMAGE_FORMATS = {".ppm": "PPM", ".png": "PNG"}


def _hue_color(index, count):
    color = QColor.fromHsv(int(360 * index / count) % 360, 255, 255)
    return color.red(), color.green(), color.blue()


def class_palette(classes):
    """(classes + 1) x 3 uint8 palette; row 0 (unlabelled) is black."""
    if classes < 0:
        raise ConfigError("class count must be >= 0")
    rows = [(0, 0, 0)]
    extra = max(classes - len(BASE_COLORS), 0)
    for k in range(1, classes + 1):
        rows.append(BASE_COLORS[k - 1] if k <= len(BASE_COLORS) else _hue_color(k - len(BASE_COLORS) - 1, extra))
    return np.array(rows, dtype=np.uint8)


def colorize(class_map, palette):
    class_map = np.asarray(class_map)
    if class_map.min() < 0 or class_map.max() >= len(palette):
        raise ConfigError(f"class ids 0..{int(class_map.max())} exceed the {len(palette) - 1}-class palette")
    return palette[class_map]


def palette_inverse(rgb, palette):
    """Map every color back to its class id."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    codes = (palette[:, 0].astype(np.int64) << 16) | (palette[:, 1].astype(np.int64) << 8) | palette[:, 2]
    pixel_codes = (rgb[..., 0].astype(np.int64) << 16) | (rgb[..., 1].astype(np.int64) << 8) | rgb[..., 2]
    order = np.argsort(codes, kind="stable")
    position = np.searchsorted(codes[order], pixel_codes)
    position = np.minimum(position, len(codes) - 1)
    labels = order[position]
    if np.any(codes[labels] != pixel_codes):
        raise DataError("image contains colors outside the palette")
    return labels.astype(np.int32)


def to_qimage(rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    height, width = rgb.shape[:2]
    # copy() detaches the image from the numpy buffer
    return QImage(rgb.tobytes(), width, height, 3 * width, QImage.Format.Format_RGB888).copy()


def from_qimage(image):
    """QImage -> height x width x 3 uint8 array."""
    image = image.convertToFormat(QImage.Format.Format_RGB888)
    height, width = image.height(), image.width()
    bits = image.constBits()
    bits.setsize(image.sizeInBytes())
    rows = np.frombuffer(bits, dtype=np.uint8).reshape(height, image.bytesPerLine())
    return rows[:, :3 * width].reshape(height, width, 3).copy()


def read_image(path):
    image = QImage(path)
    if image.isNull():
        raise FormatError(f"{path}: not a readable image")
    return from_qimage(image)


def save_image(rgb, path):
    """Write PPM or PNG depending on the file extension."""
    extension = os.path.splitext(path)[1].lower()
    if extension not in IMAGE_FORMATS:
        raise FormatError(f"unsupported image extension '{extension}'")
    image = rgb if isinstance(rgb, QImage) else to_qimage(rgb)
    if not image.save(path, IMAGE_FORMATS[extension]):
        raise FormatError(f"could not write {IMAGE_FORMATS[extension]} {path}")
    return path


def legend_path(image_path):
    return os.path.splitext(image_path)[0] + "_legend.json"


def write_legend(palette, path, class_names=None):
    legend = {}
    for k, color in enumerate(palette.tolist()):
        name = "unlabeled" if k == 0 else (class_names[k - 1] if class_names else f"class {k}")
        legend[str(k)] = {"name": name, "rgb": color}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(legend, handle, indent=2, sort_keys=True)
    return path


def render_map(class_map, path, classes=None, palette=None, write_legend_file=True):
    """
    Render a pixel class map (0 = unlabelled, drawn black) and write its legend JSON next to it.
    """
    class_map = np.asarray(class_map)
    if palette is None:
        palette = class_palette(int(class_map.max()) if classes is None else int(classes))
    save_image(colorize(class_map, palette), path)
    if write_legend_file:
        write_legend(palette, legend_path(path))
    logger.info("Rendered %dx%d class map to %s", class_map.shape[0], class_map.shape[1], path)
    return path


def overlay_boundaries(rgb, mask, color=(255, 255, 255)):
    out = np.array(rgb, dtype=np.uint8, copy=True)
    out[np.asarray(mask, dtype=bool)] = color
    return out


def render_curve(x, y, path, width=400, height=240, marks=(), margin=12):
    """
    Plot y over x as a polyline on a white canvas; NaN points break the line and each x in
    `marks` gets a vertical tick.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    image = QImage(width, height, QImage.Format.Format_RGB32)
    image.fill(QColor(255, 255, 255))
    painter = QPainter(image)
    painter.setPen(QPen(QColor(0, 0, 0), 1))
    painter.drawLine(margin, height - margin, width - margin - 1, height - margin)
    painter.drawLine(margin, margin, margin, height - margin)
    finite = np.isfinite(y)
    if finite.any() and len(x) > 1:
        x_lo, x_hi = x.min(), x.max()
        y_lo, y_hi = y[finite].min(), y[finite].max()
        y_span = y_hi - y_lo if y_hi > y_lo else 1.0
        cols = np.rint(margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin - 1)).astype(int)
        rows = np.rint((height - margin) - (y - y_lo) / y_span * (height - 2 * margin - 1))
        painter.setPen(QPen(QColor(200, 200, 200), 1))
        for mark in marks:
            col = int(round(margin + (mark - x_lo) / (x_hi - x_lo) * (width - 2 * margin - 1)))
            painter.drawLine(col, margin, col, height - margin - 1)
        painter.setPen(QPen(QColor(0, 90, 200), 1))
        run = []
        for i in range(len(x) + 1):
            if i < len(x) and finite[i]:
                run.append(QPoint(int(cols[i]), int(rows[i])))
                continue
            if len(run) > 1:
                painter.drawPolyline(QPolygon(run))
            run = []
    painter.end()
    save_image(image, path)
    return path
