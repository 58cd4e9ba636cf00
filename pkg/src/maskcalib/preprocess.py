"""Derives per-point attributes from a bare x/y/z/intensity cloud.

Three steps, each pure (returns a new cloud):

* ``estimate_normals``: PCA over the k nearest neighbors of every point.
* ``normalize_intensity``: linear rescale of raw intensity into [0, 1].
* ``segment_cloud``: RANSAC plane extraction followed by single-linkage
  Euclidean clustering of the remainder; labels partition the cloud
  with -1 for noise.

``preprocess`` chains the three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import CloudTooSmallError
from .geometry import PointCloud

# Neighborhoods whose two smallest covariance eigenvalues are this close
# are rank-deficient for normal estimation and get the zero sentinel.
_DEGENERATE_EIG_GAP = 1e-12


@dataclass(frozen=True)
class PreprocessConfig:
    """Attribute-derivation parameters.

    ``intensity_scale`` of ``None`` means auto: the 99th-percentile raw
    intensity, which tolerates hot outliers better than the maximum.
    Plane acceptance is measured against the original cloud size, not
    the shrinking remainder, so "large plane" keeps an absolute meaning.
    """

    knn_k: int = 20
    intensity_scale: float | None = None
    ransac_dist: float = 0.10
    ransac_iters: int = 500
    min_plane_inlier_frac: float = 0.02
    max_planes: int = 5
    cluster_tolerance: float = 0.5
    min_cluster_size: int = 20
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.knn_k < 3:
            raise ValueError("knn_k must be at least 3")
        if self.intensity_scale is not None and self.intensity_scale <= 0:
            raise ValueError("intensity_scale must be positive")
        for name in ("ransac_dist", "ransac_iters", "min_plane_inlier_frac",
                     "cluster_tolerance", "min_cluster_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_planes < 0:
            raise ValueError("max_planes must be non-negative")


class KdIndex:
    """Read-only spatial index over point positions."""

    def __init__(self, positions: np.ndarray):
        self._positions = np.asarray(positions, dtype=np.float64)
        self._tree = cKDTree(self._positions)

    def __len__(self) -> int:
        return self._positions.shape[0]

    def query(self, p, k: int):
        """Indices of the min(k, n) nearest points, ascending by distance."""
        k = min(k, len(self))
        _, idx = self._tree.query(np.asarray(p, dtype=np.float64), k=k)
        return np.atleast_1d(idx)

    def query_block(self, points, k: int):
        """Neighbor indices for many query points at once, (m, k) array."""
        k = min(k, len(self))
        _, idx = self._tree.query(np.asarray(points, dtype=np.float64), k=k)
        return idx.reshape(-1, k)

    def pairs_within(self, radius: float) -> np.ndarray:
        """All index pairs (i < j) closer than ``radius``, as an (m, 2) array."""
        return self._tree.query_pairs(radius, output_type="ndarray")


def estimate_normals(cloud: PointCloud, cfg: PreprocessConfig) -> PointCloud:
    """PCA normals from each point's k-neighborhood (the point included).

    The normal is the unit eigenvector for the smallest covariance
    eigenvalue, flipped so it faces the sensor origin.  Degenerate
    neighborhoods get the invalid sentinel (0, 0, 0).
    """
    n = len(cloud)
    if n < cfg.knn_k:
        raise CloudTooSmallError(f"{n} points < knn_k = {cfg.knn_k}")
    pos = cloud.positions
    index = KdIndex(pos)
    normals = np.zeros((n, 3))
    for start in range(0, n, 8192):
        chunk = slice(start, min(start + 8192, n))
        nbr = pos[index.query_block(pos[chunk], cfg.knn_k)]
        centered = nbr - nbr.mean(axis=1, keepdims=True)
        cov = np.einsum("mki,mkj->mij", centered, centered) / cfg.knn_k
        vals, vecs = np.linalg.eigh(cov)
        nrm = vecs[:, :, 0]
        degenerate = (vals[:, 1] - vals[:, 0]) <= _DEGENERATE_EIG_GAP
        nrm[degenerate] = 0.0
        # Orient toward the sensor: dot(normal, -position) must be >= 0.
        flip = np.einsum("mi,mi->m", nrm, pos[chunk]) > 0
        nrm[flip] *= -1.0
        normals[chunk] = nrm
    return cloud.with_attributes(normals=normals)


def normalize_intensity(cloud: PointCloud, cfg: PreprocessConfig) -> PointCloud:
    """Rescale raw intensities into [0, 1] by a fixed or auto scale."""
    raw = cloud.reflectivity
    if np.any(raw < 0):
        raise ValueError("raw intensities must be non-negative")
    scale = cfg.intensity_scale
    if scale is None:
        scale = float(np.percentile(raw, 99.0))
    if scale <= 0:
        return cloud.with_attributes(reflectivity=np.zeros(len(cloud)))
    return cloud.with_attributes(reflectivity=np.clip(raw / scale, 0.0, 1.0))


def _fit_planes(pos: np.ndarray, labels: np.ndarray, cfg: PreprocessConfig,
                rng: np.random.Generator) -> int:
    """RANSAC plane extraction; labels accepted planes 0,1,... in place."""
    n_total = pos.shape[0]
    min_inliers = cfg.min_plane_inlier_frac * n_total
    remaining = np.arange(n_total)
    n_planes = 0
    while n_planes < cfg.max_planes and remaining.size >= 3:
        pts = pos[remaining]
        triples = rng.integers(0, remaining.size, size=(cfg.ransac_iters, 3))
        p0 = pts[triples[:, 0]]
        edge1 = pts[triples[:, 1]] - p0
        edge2 = pts[triples[:, 2]] - p0
        cand_n = np.cross(edge1, edge2)
        norms = np.linalg.norm(cand_n, axis=1)
        ok = norms > 1e-12
        if not np.any(ok):
            break
        cand_n[ok] /= norms[ok, None]
        counts = np.full(cfg.ransac_iters, -1, dtype=np.int64)
        for start in range(0, cfg.ransac_iters, 32):
            sl = slice(start, min(start + 32, cfg.ransac_iters))
            dev = pts[None, :, :] - p0[sl, None, :]
            dist = np.abs(np.einsum("cnk,ck->cn", dev, cand_n[sl]))
            counts[sl] = np.count_nonzero(dist <= cfg.ransac_dist, axis=1)
        counts[~ok] = -1
        best = int(np.argmax(counts))
        if counts[best] < min_inliers:
            break
        dist = np.abs((pts - p0[best]) @ cand_n[best])
        inlier = dist <= cfg.ransac_dist
        labels[remaining[inlier]] = n_planes
        remaining = remaining[~inlier]
        n_planes += 1
    return n_planes


def _cluster(pos: np.ndarray, labels: np.ndarray, first_label: int,
             cfg: PreprocessConfig) -> None:
    """Single-linkage clusters of still-unlabeled points, labeled in place."""
    remaining = np.flatnonzero(labels == -1)
    if remaining.size == 0:
        return
    index = KdIndex(pos[remaining])
    pairs = index.pairs_within(cfg.cluster_tolerance)
    m = remaining.size
    graph = coo_matrix((np.ones(pairs.shape[0], dtype=np.int8),
                        (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, comp = connected_components(graph, directed=False)
    sizes = np.bincount(comp)
    # Stable ordering: new labels follow each component's first point.
    next_label = first_label
    seen = {}
    for local, c in enumerate(comp):
        if sizes[c] < cfg.min_cluster_size:
            continue
        if c not in seen:
            seen[c] = next_label
            next_label += 1
        labels[remaining[local]] = seen[c]


def segment_cloud(cloud: PointCloud, cfg: PreprocessConfig) -> PointCloud:
    """Label planes then clusters; every leftover point gets -1."""
    n = len(cloud)
    if n < 3:
        raise CloudTooSmallError(f"{n} points < 3")
    labels = np.full(n, -1, dtype=np.int32)
    rng = np.random.default_rng(cfg.rng_seed)
    n_planes = _fit_planes(cloud.positions, labels, cfg, rng)
    _cluster(cloud.positions, labels, n_planes, cfg)
    return cloud.with_attributes(labels=labels)


def preprocess(cloud: PointCloud, cfg: PreprocessConfig | None = None) -> PointCloud:
    """Full attribute pipeline: normals, intensity, segmentation."""
    cfg = cfg or PreprocessConfig()
    out = estimate_normals(cloud, cfg)
    out = normalize_intensity(out, cfg)
    return segment_cloud(out, cfg)
