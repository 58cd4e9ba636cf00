"""Projection of attributed clouds into masks and the consistency score.

The score of one candidate extrinsic is a weighted mean over masks of

    s_i = (w_r * reflectivity + w_n * normal + w_s * class) * adjust(n_i)

where each consistency term lies in [0, 1]:

* reflectivity: 1 minus the population variance of member reflectivity.
* normal: mean absolute pairwise dot product of member unit normals
  (sign-invariant; capped by a deterministic stride subsample).
* class: sorted member class counts c_0 >= c_1 >= ... combined as
  sum(decay^i * c_i) / n.
* adjust(n) = max(0, 1 - size_coeff * n^size_power) discounts sparsely
  populated masks.

Mask weights are w_i = n_i / sum(n_j), so the total stays in [0, 1].

``score`` is the one-shot entry point.  ``ConsistencyEvaluator``
prepares per-frame lookup structures once so that search loops can
score thousands of candidate extrinsics without re-deriving anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Extrinsic, Intrinsics, PixelCoord, PointCloud
from .masks import MaskSet


@dataclass(frozen=True)
class ScoreConfig:
    weight_reflectivity: float = 1.0 / 3.0
    weight_normal: float = 1.0 / 3.0
    weight_class: float = 1.0 / 3.0
    class_decay: float = 0.4
    size_coeff: float = 1.5
    size_power: float = -0.4
    min_points: int = 5
    normal_cap: int = 512
    min_depth: float = 0.1

    def __post_init__(self) -> None:
        w = (self.weight_reflectivity, self.weight_normal, self.weight_class)
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if not 0.0 < self.class_decay < 1.0:
            raise ValueError("class_decay must lie in (0, 1)")
        if self.size_coeff <= 0 or self.size_power >= 0:
            raise ValueError("size_coeff must be positive, size_power negative")
        if self.min_points < 1 or self.normal_cap < 2:
            raise ValueError("min_points must be >= 1 and normal_cap >= 2")
        if self.min_depth <= 0:
            raise ValueError("min_depth must be positive")


@dataclass(frozen=True)
class Projection:
    """Points that land inside the image, in cloud order."""

    indices: np.ndarray  # (m,) int64, indices into the cloud
    u: np.ndarray        # (m,) float64
    v: np.ndarray        # (m,) float64
    depth: np.ndarray    # (m,) float64
    width: int
    height: int

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield int(self.indices[i]), PixelCoord(float(self.u[i]), float(self.v[i]))


@dataclass(frozen=True)
class MaskPointSet:
    """Cloud indices whose projections fall inside one mask."""

    mask_id: int
    indices: np.ndarray  # (n,) int64, ascending
    count: int


@dataclass(frozen=True)
class MaskScore:
    mask_id: int
    score: float
    count: int
    reflectivity: float
    normal: float
    classes: float
    adjustment: float


@dataclass(frozen=True)
class ScoreReport:
    total: float
    per_mask: tuple  # MaskScore for every surviving mask
    points_projected: int
    no_overlap: bool


def project(cloud: PointCloud, extrinsic: Extrinsic, intrinsics: Intrinsics,
            min_depth: float = 0.1) -> Projection:
    """Pinhole-project the cloud; keep points in front and inside the image.

    A point survives when its camera depth is at least ``min_depth`` and
    (u, v) lies in [0, W) x [0, H).
    """
    cam = cloud.positions @ extrinsic.rotation.T + extrinsic.translation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = cam @ intrinsics.k.T
        u = proj[:, 0] / z
        v = proj[:, 1] / z
    keep = ((z >= min_depth)
            & (u >= 0.0) & (u < intrinsics.width)
            & (v >= 0.0) & (v < intrinsics.height))
    idx = np.flatnonzero(keep)
    return Projection(idx.astype(np.int64), u[idx], v[idx], z[idx],
                      intrinsics.width, intrinsics.height)


def gather(projection: Projection, masks: MaskSet, min_points: int = 5) -> list:
    """Group projected points by mask membership; small sets are dropped.

    Overlapping masks each receive the shared points.  Member index
    lists stay in ascending cloud order.
    """
    ui = projection.u.astype(np.int64)
    vi = projection.v.astype(np.int64)
    out = []
    for mask in masks:
        member = mask.bitmap[vi, ui]
        idx = projection.indices[member]
        if idx.shape[0] >= min_points:
            out.append(MaskPointSet(mask.id, idx, int(idx.shape[0])))
    return out


def _mean_abs_gram(normals: np.ndarray) -> float:
    """Mean of |dot| over all ordered pairs of rows (the m^2 Gram entries).

    Two exact routes: when many rows repeat (planar scenes), group
    duplicates and weight the small Gram matrix by multiplicity;
    otherwise walk the full Gram in row blocks to bound memory.
    """
    m = normals.shape[0]
    a = np.ascontiguousarray(normals)
    packed = a.view([("", a.dtype)] * 3).ravel()
    uniq, counts = np.unique(packed, return_counts=True)
    if uniq.size * 4 <= m:
        b = uniq.view(a.dtype).reshape(-1, 3)
        w = counts.astype(np.float64)
        return float(w @ np.abs(b @ b.T) @ w) / (m * m)
    total = 0.0
    for start in range(0, m, 128):
        block = a[start:start + 128] @ a.T
        np.abs(block, out=block)
        total += float(block.sum())
    return total / (m * m)


def _stride_subsample(count: int, cap: int) -> np.ndarray:
    """Indices of an even deterministic subsample of size ``cap``."""
    return (np.arange(cap, dtype=np.int64) * count) // cap


def reflectivity_consistency(pointset: MaskPointSet, cloud: PointCloud) -> float:
    """1 minus the population variance of member reflectivity."""
    r = cloud.reflectivity[pointset.indices]
    mean = r.mean()
    return float(1.0 - ((r - mean) ** 2).mean())


def normal_consistency(pointset: MaskPointSet, cloud: PointCloud,
                       cfg: ScoreConfig) -> float:
    """Mean absolute pairwise dot product of member normals.

    Points carrying the invalid sentinel are excluded; with fewer than
    two usable normals the term is neutral (1.0).  Above ``normal_cap``
    members an even stride over the index-sorted members bounds the
    quadratic pair sum.
    """
    normals = cloud.normals[pointset.indices]
    valid = np.any(normals != 0.0, axis=1)
    a = normals[valid]
    if a.shape[0] < 2:
        return 1.0
    if a.shape[0] > cfg.normal_cap:
        a = a[_stride_subsample(a.shape[0], cfg.normal_cap)]
    return _mean_abs_gram(a)


def class_consistency(pointset: MaskPointSet, cloud: PointCloud,
                      cfg: ScoreConfig) -> float:
    """Decay-weighted share of members in the dominant classes.

    Counts per label (noise label -1 counts as one ordinary class) are
    sorted descending, ties broken by ascending label, and combined as
    sum(decay^i * c_i) / n.
    """
    labels = cloud.labels[pointset.indices]
    values, counts = np.unique(labels, return_counts=True)
    order = np.lexsort((values, -counts))
    c = counts[order].astype(np.float64)
    decay = cfg.class_decay ** np.arange(c.shape[0])
    return float((decay * c).sum() / c.sum())


def size_adjustment(count: int, cfg: ScoreConfig) -> float:
    """Population-size discount, clamped to [0, 1)."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return max(0.0, 1.0 - cfg.size_coeff * float(count) ** cfg.size_power)


class ConsistencyEvaluator:
    """Scores many candidate extrinsics against fixed frames.

    ``frames`` is a sequence of (cloud, maskset) pairs sharing one
    camera.  Construction rasterizes mask ownership into flat per-pixel
    lookup tables; scoring one candidate is then a single projection
    pass plus per-mask statistics.  Instances are read-only after
    construction and safe to share across worker processes.
    """

    def __init__(self, frames, intrinsics: Intrinsics, cfg: ScoreConfig | None = None):
        self.cfg = cfg or ScoreConfig()
        self.intrinsics = intrinsics
        self._frames = [self._prepare(cloud, masks) for cloud, masks in frames]
        if not self._frames:
            raise ValueError("at least one frame is required")
        self._decay = self.cfg.class_decay ** np.arange(64, dtype=np.float64)

    def _prepare(self, cloud: PointCloud, masks: MaskSet) -> dict:
        n = len(cloud)
        pos_h = np.ones((n, 4))
        pos_h[:, :3] = cloud.positions
        w, h = masks.width, masks.height
        owner = np.full(h * w, -1, dtype=np.int32)
        cover = np.zeros(h * w, dtype=np.int16)
        flats = []
        for slot, mask in enumerate(masks):
            flat = mask.bitmap.ravel()
            flats.append(flat)
            cover[flat] += 1
            owner[flat & (cover.reshape(-1) == 1)] = slot
        overlap = cover >= 2
        owner[overlap] = -2
        return {
            "pos_h": pos_h,
            "reflectivity": cloud.reflectivity,
            "labels": cloud.labels.astype(np.int64) + 1,
            "normals": cloud.normals,
            "normal_valid": np.any(cloud.normals != 0.0, axis=1),
            "owner": owner,
            "flats": flats if overlap.any() else None,
            "ids": [mask.id for mask in masks],
            "width": w,
            "height": h,
        }

    @property
    def n_frames(self) -> int:
        return len(self._frames)

    def _score_frame(self, frame: dict, extrinsic: Extrinsic, collect: bool):
        cfg = self.cfg
        w, h = frame["width"], frame["height"]
        m34 = self.intrinsics.k @ np.hstack(
            [extrinsic.rotation, extrinsic.translation[:, None]])
        ph = frame["pos_h"] @ m34.T
        z = ph[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = ph[:, 0] / z
            v = ph[:, 1] / z
        keep = (z >= cfg.min_depth) & (u >= 0.0) & (u < w) & (v >= 0.0) & (v < h)
        idx = np.flatnonzero(keep)
        points_projected = idx.shape[0]
        if points_projected == 0:
            return 0.0, 0, () if collect else None
        pix = v[idx].astype(np.int64) * w + u[idx].astype(np.int64)
        own = frame["owner"][pix]
        refl = frame["reflectivity"][idx]
        labels = frame["labels"][idx]
        normals = frame["normals"][idx]
        nvalid = frame["normal_valid"][idx]
        in_overlap = np.flatnonzero(own == -2) if frame["flats"] is not None else None

        counts = []
        member_lists = []
        slots = []
        for slot in range(len(frame["ids"])):
            members = np.flatnonzero(own == slot)
            if in_overlap is not None and in_overlap.size:
                extra = in_overlap[frame["flats"][slot][pix[in_overlap]]]
                if extra.size:
                    members = np.sort(np.concatenate([members, extra]))
            if members.shape[0] < cfg.min_points:
                continue
            slots.append(slot)
            member_lists.append(members)
            counts.append(members.shape[0])
        if not slots:
            return 0.0, points_projected, () if collect else None

        total_members = float(sum(counts))
        total = 0.0
        rows = [] if collect else None
        for slot, members, n_i in zip(slots, member_lists, counts):
            r = refl[members]
            mean = r.mean()
            term_r = 1.0 - float(((r - mean) ** 2).mean())

            vmask = nvalid[members]
            a = normals[members[vmask]]
            if a.shape[0] < 2:
                term_n = 1.0
            else:
                if a.shape[0] > cfg.normal_cap:
                    a = a[_stride_subsample(a.shape[0], cfg.normal_cap)]
                term_n = _mean_abs_gram(a)

            cls_counts = np.bincount(labels[members])
            nz = np.sort(cls_counts[cls_counts > 0])[::-1].astype(np.float64)
            if nz.shape[0] > self._decay.shape[0]:
                self._decay = cfg.class_decay ** np.arange(
                    nz.shape[0] + 64, dtype=np.float64)
            term_s = float((self._decay[:nz.shape[0]] * nz).sum() / n_i)

            adj = size_adjustment(n_i, cfg)
            s_i = (cfg.weight_reflectivity * term_r
                   + cfg.weight_normal * term_n
                   + cfg.weight_class * term_s) * adj
            total += (n_i / total_members) * s_i
            if collect:
                rows.append(MaskScore(frame["ids"][slot], s_i, n_i,
                                      term_r, term_n, term_s, adj))
        return total, points_projected, tuple(rows) if collect else None

    def evaluate(self, extrinsic: Extrinsic) -> tuple:
        """(mean score across frames, total points projected)."""
        total = 0.0
        points = 0
        for frame in self._frames:
            s, p, _ = self._score_frame(frame, extrinsic, collect=False)
            total += s
            points += p
        return total / len(self._frames), points

    def report(self, extrinsic: Extrinsic) -> tuple:
        """Full per-frame ScoreReports for one candidate."""
        out = []
        for frame in self._frames:
            s, p, rows = self._score_frame(frame, extrinsic, collect=True)
            out.append(ScoreReport(s, rows, p, no_overlap=not rows))
        return tuple(out)


def score(cloud: PointCloud, masks: MaskSet, extrinsic: Extrinsic,
          intrinsics: Intrinsics, cfg: ScoreConfig | None = None) -> ScoreReport:
    """Score one cloud/mask frame under one candidate extrinsic."""
    evaluator = ConsistencyEvaluator([(cloud, masks)], intrinsics, cfg)
    return evaluator.report(extrinsic)[0]
