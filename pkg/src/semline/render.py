"""Overlay detected lines on an image and write it as binary PPM."""
from __future__ import annotations

import logging

import numpy as np

from .geometry import ImageFrame, intersects
from .io import write_pnm

log = logging.getLogger(__name__)

STROKE_COLOR = (255, 0, 0)


def overlay(image, lines, color=STROKE_COLOR) -> tuple[np.ndarray, list[str]]:
    """Paint a 2 px stroke per line: pixels whose signed distance lies in (-1, 1]."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise ValueError("overlay expects uint8 pixels")
    rgb = np.repeat(img[..., None], 3, axis=2) if img.ndim == 2 else img[..., :3].copy()
    frame = ImageFrame(rgb.shape[1], rgb.shape[0])
    gx, gy = frame.pixel_grid()
    warnings = []
    for line in lines:
        if not intersects(line, frame):
            msg = f"line (rho={line.rho:.4g}, phi={line.phi:.4g}) misses the frame; skipped"
            log.warning(msg)
            warnings.append(msg)
            continue
        nx, ny = line.normal
        s = gx * nx + gy * ny - line.rho
        rgb[(s > -1.0) & (s <= 1.0)] = color
    return rgb, warnings


def render_overlay(image, lines, path, color=STROKE_COLOR) -> list[str]:
    rgb, warnings = overlay(image, lines, color)
    write_pnm(path, rgb)
    return warnings
