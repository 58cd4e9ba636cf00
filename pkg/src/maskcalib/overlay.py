"""Diagnostic rendering: masks tinted by id, points colored by intensity.

Output is a binary (P6) portable pixmap so the bit-exactness contract
does not depend on any image codec.
"""

from __future__ import annotations

import colorsys

import numpy as np

from .geometry import Extrinsic, Intrinsics, PointCloud
from .masks import MaskSet
from .scoring import project


def mask_tint(mask_id: int) -> tuple:
    """Stable, well-separated tint per mask id (golden-angle hue walk)."""
    hue = (mask_id * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.55, 0.5)
    return (int(r * 255), int(g * 255), int(b * 255))


def intensity_colors(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] reflectivity to a blue-green-red ramp, (n, 3) uint8."""
    t = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    r = np.clip(1.5 - np.abs(4.0 * t - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * t - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * t - 1.0), 0.0, 1.0)
    return (np.stack([r, g, b], axis=1) * 255.0 + 0.5).astype(np.uint8)


def render_overlay(cloud: PointCloud, masks: MaskSet, extrinsic: Extrinsic,
                   intrinsics: Intrinsics, min_depth: float = 0.1) -> np.ndarray:
    """(H, W, 3) uint8 image: tinted mask regions under projected points."""
    img = np.zeros((masks.height, masks.width, 3), dtype=np.uint8)
    for mask in masks:
        img[mask.bitmap] = mask_tint(mask.id)
    proj = project(cloud, extrinsic, intrinsics, min_depth)
    if len(proj):
        # Far-to-near draw order: the nearest point owns a contested pixel.
        order = np.argsort(-proj.depth, kind="stable")
        ui = proj.u[order].astype(np.int64)
        vi = proj.v[order].astype(np.int64)
        img[vi, ui] = intensity_colors(cloud.reflectivity[proj.indices[order]])
    return img


def write_ppm(image: np.ndarray, path) -> None:
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("image must be (H, W, 3)")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    if parts[2] != b"255":
        raise ValueError(f"{path}: unsupported max value")
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=w * h * 3)
    return pixels.reshape(h, w, 3).copy()
