"""Segmentation masks: bitmaps, RLE codec, manifest and image loading.

RLE convention: the bitmap is flattened row-major and stored as run
lengths that alternate zeros/ones, always starting with a zero run (a
leading ``0`` count when the first pixel is set).  Counts sum to
``width * height``.

The manifest is a JSON object ``{"width": W, "height": H, "masks":
[{"id": k, "counts": [...]}, ...]}`` with masks in ascending id order.
Canonical text has no whitespace separators and ends with a newline,
so independently produced manifests of the same masks compare equal as
bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyMaskSetError
from .geometry import PixelCoord


@dataclass(frozen=True)
class Mask:
    id: int
    bitmap: np.ndarray  # (height, width) bool
    area: int
    bbox: tuple  # (u_min, v_min, u_max, v_max) inclusive; (0, 0, -1, -1) if empty

    def __post_init__(self) -> None:
        bm = np.array(self.bitmap, dtype=bool)
        if bm.ndim != 2:
            raise ValueError("bitmap must be 2-D")
        bm.setflags(write=False)
        object.__setattr__(self, "bitmap", bm)

    @classmethod
    def from_bitmap(cls, mask_id: int, bitmap: np.ndarray) -> "Mask":
        bm = np.asarray(bitmap, dtype=bool)
        area = int(np.count_nonzero(bm))
        if area == 0:
            bbox = (0, 0, -1, -1)
        else:
            rows = np.flatnonzero(bm.any(axis=1))
            cols = np.flatnonzero(bm.any(axis=0))
            bbox = (int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))
        return cls(int(mask_id), bm, area, bbox)


@dataclass(frozen=True)
class MaskSet:
    """Masks for one image, id-ascending, with overlap bookkeeping.

    ``overlap_ratio`` is the fraction of all image pixels covered by two
    or more masks.  ``dropped`` lists ids removed for falling below the
    loader's area threshold.
    """

    masks: tuple
    width: int
    height: int
    overlap_ratio: float
    dropped: tuple = ()

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)

    def by_id(self, mask_id: int) -> Mask:
        for m in self.masks:
            if m.id == mask_id:
                return m
        raise KeyError(mask_id)


def rle_encode(bitmap: np.ndarray) -> list:
    """Row-major run lengths, zeros first."""
    flat = np.asarray(bitmap, dtype=bool).ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def rle_decode(counts, height: int, width: int) -> np.ndarray:
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("run lengths must be non-negative")
    total = sum(counts)
    if total != width * height:
        raise ValueError(f"run lengths sum to {total}, expected {width * height}")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape(height, width)


def build_maskset(bitmaps, ids, width: int, height: int,
                  min_mask_area: int = 100) -> MaskSet:
    """Assemble a MaskSet from bitmaps, dropping those under the area floor."""
    kept = []
    dropped = []
    cover = np.zeros(height * width, dtype=np.int32)
    for mask_id, bm in zip(ids, bitmaps):
        if bm.shape != (height, width):
            raise DimensionMismatchError(
                f"mask {mask_id} has shape {bm.shape}, expected {(height, width)}")
        mask = Mask.from_bitmap(mask_id, bm)
        if mask.area < min_mask_area:
            dropped.append(mask.id)
            continue
        kept.append(mask)
        cover[bm.ravel()] += 1
    if not kept:
        raise EmptyMaskSetError("no masks survive the area threshold")
    overlap = float(np.count_nonzero(cover >= 2)) / float(width * height)
    return MaskSet(tuple(kept), width, height, overlap, tuple(dropped))


def manifest_text(maskset: MaskSet) -> str:
    """Canonical manifest JSON for a mask set."""
    doc = {
        "width": maskset.width,
        "height": maskset.height,
        "masks": [{"id": m.id, "counts": rle_encode(m.bitmap)} for m in maskset.masks],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def save_manifest(maskset: MaskSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(manifest_text(maskset).encode("ascii"))


def _load_manifest(path, min_mask_area: int) -> MaskSet:
    with open(path, "rb") as fh:
        doc = json.loads(fh.read().decode("ascii"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: manifest must be a JSON object")
    extra = set(doc) - {"width", "height", "masks"}
    if extra:
        raise ValueError(f"{path}: unknown manifest keys {sorted(extra)}")
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        entries = doc["masks"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed manifest: {exc}") from exc
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: image size must be positive")
    bitmaps = []
    ids = []
    for entry in entries:
        extra = set(entry) - {"id", "counts"}
        if extra:
            raise ValueError(f"{path}: unknown mask keys {sorted(extra)}")
        mask_id = int(entry["id"])
        if ids and mask_id <= ids[-1]:
            raise ValueError(f"{path}: mask ids must be strictly ascending")
        ids.append(mask_id)
        bitmaps.append(rle_decode(entry["counts"], height, width))
    return build_maskset(bitmaps, ids, width, height, min_mask_area)


def _load_mask_dir(path, min_mask_area: int) -> MaskSet:
    from PIL import Image

    names = sorted(n for n in os.listdir(path)
                   if n.startswith("mask_") and not n.startswith("."))
    if not names:
        raise ValueError(f"{path}: no mask_* files found")
    bitmaps = []
    size = None
    for name in names:
        with Image.open(os.path.join(path, name)) as img:
            arr = np.asarray(img.convert("L"))
        if size is None:
            size = arr.shape
        elif arr.shape != size:
            raise DimensionMismatchError(
                f"{path}/{name}: size {arr.shape} differs from {size}")
        bitmaps.append(arr > 0)
    height, width = size
    return build_maskset(bitmaps, range(len(bitmaps)), width, height, min_mask_area)


def load_masks(path, min_mask_area: int = 100) -> MaskSet:
    """Load a mask set from a manifest file or a directory of mask_* images.

    Directory masks get ids 0..n-1 in lexicographic filename order.
    Masks with fewer than ``min_mask_area`` set pixels are dropped and
    recorded in ``MaskSet.dropped``.
    """
    if os.path.isdir(path):
        return _load_mask_dir(path, min_mask_area)
    return _load_manifest(path, min_mask_area)


def rasterize_membership(mask: Mask, coord: PixelCoord) -> bool:
    """True when the pixel containing ``coord`` is set in the mask."""
    u, v = coord.pixel()
    h, w = mask.bitmap.shape
    if u < 0 or v < 0 or u >= w or v >= h:
        return False
    return bool(mask.bitmap[v, u])
