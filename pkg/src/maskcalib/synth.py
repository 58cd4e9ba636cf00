"""Synthetic attributed scenes with known ground-truth extrinsics.

Elements are planar patches laid out on a grid of image cells, each at
its own depth (log-spaced over the depth range, shuffled per seed) and
with a random tilt.  Every element contributes one segment class, one
analytic normal direction, and a tight intensity profile, so attribute
consistency inside its mask is near-perfect at the true extrinsic and
degrades once the projection slides off.  A small fraction of noise
points with random attributes is sprinkled across the frustum.

Masks are the rasterized convex hulls of each element's projected
points under the ground-truth extrinsic, dilated by a couple of pixels
the way real segmentation boundaries run slightly loose.

The generator is pure and fully seeded; identical specs give identical
scenes down to the last bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.spatial import ConvexHull

from . import formats
from .errors import InvalidSpecError
from .geometry import Extrinsic, Intrinsics, PointCloud, rotation_from_axis_angle
from .masks import MaskSet, build_maskset, load_masks, save_manifest

# Scene placement limits; elements must sit well inside the frustum.
_DEPTH_MIN = 3.0
_DEPTH_MAX = 40.0
_MAX_SPREAD = 0.05
_EDGE_MARGIN_PX = 1.0


def default_intrinsics() -> Intrinsics:
    return Intrinsics.from_params(fx=525.0, fy=525.0, cx=320.0, cy=240.0,
                                  width=640, height=480)


def default_extrinsic() -> Extrinsic:
    """LiDAR x-forward/z-up to camera z-forward/y-down, small lever arm."""
    rotation = np.array([
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
    ])
    return Extrinsic(rotation, np.array([0.05, -0.12, -0.07]))


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic scene.

    ``intensity_profile`` is an optional per-element tuple of
    (mean, spread); when omitted, means are spread evenly over [0.2, 0.8]
    with a common small spread.  ``fill`` controls how much of its
    layout cell each patch spans.
    """

    n_planes: int = 3
    n_clusters: int = 8
    points_per_element: int = 4500
    intensity_profile: tuple | None = None
    noise_frac: float = 0.02
    rng_seed: int = 0
    intrinsics: Intrinsics | None = None
    extrinsic: Extrinsic | None = None
    depth_range: tuple = (3.5, 30.0)
    max_tilt_deg: float = 30.0
    fill: float = 0.74
    mask_dilation_px: int = 2

    def __post_init__(self) -> None:
        if self.n_planes < 0 or self.n_clusters < 0:
            raise InvalidSpecError("element counts must be non-negative")
        if self.n_planes + self.n_clusters < 1:
            raise InvalidSpecError("at least one element is required")
        if self.points_per_element < 3:
            raise InvalidSpecError("points_per_element must be at least 3")
        lo, hi = self.depth_range
        if not (_DEPTH_MIN <= lo < hi <= _DEPTH_MAX):
            raise InvalidSpecError(
                f"depth_range must lie inside [{_DEPTH_MIN}, {_DEPTH_MAX}]")
        if not 0.0 <= self.noise_frac < 0.5:
            raise InvalidSpecError("noise_frac must lie in [0, 0.5)")
        if not 0.1 <= self.fill <= 0.95:
            raise InvalidSpecError("fill must lie in [0.1, 0.95]")
        if not 0.0 <= self.max_tilt_deg <= 45.0:
            raise InvalidSpecError("max_tilt_deg must lie in [0, 45]")
        if self.mask_dilation_px < 0:
            raise InvalidSpecError("mask_dilation_px must be non-negative")
        n_el = self.n_planes + self.n_clusters
        if self.intensity_profile is not None:
            if len(self.intensity_profile) != n_el:
                raise InvalidSpecError("intensity_profile must cover every element")
            for mean, spread in self.intensity_profile:
                if not 0.0 <= mean <= 1.0 or not 0.0 <= spread <= _MAX_SPREAD:
                    raise InvalidSpecError(
                        f"profile means must be in [0,1], spreads in [0,{_MAX_SPREAD}]")

    @property
    def n_elements(self) -> int:
        return self.n_planes + self.n_clusters

    def resolved_intrinsics(self) -> Intrinsics:
        return self.intrinsics or default_intrinsics()

    def resolved_extrinsic(self) -> Extrinsic:
        return self.extrinsic or default_extrinsic()

    def resolved_profile(self) -> tuple:
        if self.intensity_profile is not None:
            return tuple(self.intensity_profile)
        n = self.n_elements
        if n == 1:
            return ((0.5, 0.03),)
        return tuple((0.2 + 0.6 * e / (n - 1), 0.03) for e in range(n))


@dataclass(frozen=True)
class Scene:
    cloud: PointCloud
    masks: MaskSet
    extrinsic: Extrinsic
    intrinsics: Intrinsics


def _layout_cells(n_el: int, width: int, height: int) -> list:
    """Cell rectangles (x0, y0, x1, y1) covering the image, one per element."""
    ncols = max(1, math.ceil(math.sqrt(n_el * width / height)))
    nrows = math.ceil(n_el / ncols)
    cw = width / ncols
    ch = height / nrows
    cells = []
    for e in range(n_el):
        row, col = divmod(e, ncols)
        cells.append((col * cw, row * ch, (col + 1) * cw, (row + 1) * ch))
    return cells


def _rasterize_hull(uv: np.ndarray, width: int, height: int,
                    dilation: int) -> np.ndarray:
    """Bitmap of pixels whose centers fall inside the convex hull of uv."""
    hull = ConvexHull(uv)
    verts = uv[hull.vertices]  # counter-clockwise
    x0 = max(0, int(np.floor(verts[:, 0].min())) - 1)
    y0 = max(0, int(np.floor(verts[:, 1].min())) - 1)
    x1 = min(width, int(np.ceil(verts[:, 0].max())) + 2)
    y1 = min(height, int(np.ceil(verts[:, 1].max())) + 2)
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    px, py = np.meshgrid(xs, ys)
    inside = np.ones(px.shape, dtype=bool)
    for i in range(len(verts)):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % len(verts)]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside &= cross >= 0.0
    bitmap = np.zeros((height, width), dtype=bool)
    bitmap[y0:y1, x0:x1] = inside
    if dilation > 0:
        bitmap = binary_dilation(bitmap, structure=np.ones((3, 3), dtype=bool),
                                 iterations=dilation)
    return bitmap


def _project_cam(points: np.ndarray, k: np.ndarray) -> np.ndarray:
    uvw = points @ k.T
    return uvw[:, :2] / uvw[:, 2:3]


def generate(spec: SceneSpec) -> Scene:
    """Build the scene; see the module docstring for the construction."""
    rng = np.random.default_rng(spec.rng_seed)
    intr = spec.resolved_intrinsics()
    t_gt = spec.resolved_extrinsic()
    k = intr.k
    width, height = intr.width, intr.height
    n_el = spec.n_elements
    profile = spec.resolved_profile()
    cells = _layout_cells(n_el, width, height)
    depths = np.geomspace(spec.depth_range[0], spec.depth_range[1], n_el)
    depths = depths[rng.permutation(n_el)]

    pts_cam = []
    normals_cam = []
    refl = []
    labels = []
    uv_elements = []
    for e in range(n_el):
        x0, y0, x1, y1 = cells[e]
        cw, ch = x1 - x0, y1 - y0
        free_w = cw * (1.0 - spec.fill) / 2.0
        free_h = ch * (1.0 - spec.fill) / 2.0
        jitter = rng.uniform(-0.5, 0.5, size=2)
        ucx = (x0 + x1) / 2.0 + jitter[0] * free_w
        vcy = (y0 + y1) / 2.0 + jitter[1] * free_h
        d = depths[e]
        center = np.array([(ucx - intr.cx) / intr.fx * d,
                           (vcy - intr.cy) / intr.fy * d, d])

        phi = rng.uniform(0.0, 2.0 * math.pi)
        tilt = rng.uniform(0.0, spec.max_tilt_deg)
        axis = np.array([math.cos(phi), math.sin(phi), 0.0])
        normal = rotation_from_axis_angle(axis, tilt) @ np.array([0.0, 0.0, -1.0])
        a1 = np.cross([0.0, 1.0, 0.0], normal)
        a1 /= np.linalg.norm(a1)
        a2 = np.cross(normal, a1)

        hx = (cw * spec.fill / 2.0) * d / intr.fx
        hy = (ch * spec.fill / 2.0) * d / intr.fy
        # A tilted patch leans toward the camera; shrink extents so the
        # magnified near edge still projects inside the cell.
        lean = math.sin(math.radians(tilt)) * max(hx, hy)
        shrink = (d - lean) / d
        hx *= shrink
        hy *= shrink

        ab = rng.uniform(-1.0, 1.0, size=(spec.points_per_element, 2))
        pts = center + np.outer(ab[:, 0] * hx, a1) + np.outer(ab[:, 1] * hy, a2)
        uv = _project_cam(pts, k)
        if (uv[:, 0].min() < _EDGE_MARGIN_PX or uv[:, 1].min() < _EDGE_MARGIN_PX
                or uv[:, 0].max() >= width - _EDGE_MARGIN_PX
                or uv[:, 1].max() >= height - _EDGE_MARGIN_PX):
            raise InvalidSpecError(f"element {e} projects outside the image")
        mean, spread = profile[e]
        pts_cam.append(pts)
        normals_cam.append(np.tile(normal, (spec.points_per_element, 1)))
        refl.append(np.clip(rng.normal(mean, spread, spec.points_per_element), 0.0, 1.0))
        labels.append(np.full(spec.points_per_element, e, dtype=np.int32))
        uv_elements.append(uv)

    bitmaps = [_rasterize_hull(uv, width, height, spec.mask_dilation_px)
               for uv in uv_elements]

    n_noise = int(round(spec.noise_frac * n_el * spec.points_per_element))
    if n_noise > 0:
        # Noise lives between the masks at the true extrinsic; it only
        # contaminates a mask once the projection slides off target.
        union = np.zeros((height, width), dtype=bool)
        for bm in bitmaps:
            union |= bm
        nu = np.empty(0)
        nv = np.empty(0)
        for _ in range(64):
            need = n_noise - nu.shape[0]
            if need <= 0:
                break
            cu = rng.uniform(2.0, width - 2.0, 2 * need)
            cv = rng.uniform(2.0, height - 2.0, 2 * need)
            free = ~union[cv.astype(np.int64), cu.astype(np.int64)]
            nu = np.concatenate([nu, cu[free][:need]])
            nv = np.concatenate([nv, cv[free][:need]])
        if nu.shape[0] < n_noise:
            raise InvalidSpecError("masks cover too much of the image for noise")
        nd = rng.uniform(spec.depth_range[0], spec.depth_range[1], n_noise)
        noise_pts = np.column_stack([(nu - intr.cx) / intr.fx * nd,
                                     (nv - intr.cy) / intr.fy * nd, nd])
        raw = rng.normal(size=(n_noise, 3))
        noise_normals = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        pts_cam.append(noise_pts)
        normals_cam.append(noise_normals)
        refl.append(rng.uniform(0.0, 1.0, n_noise))
        labels.append(np.full(n_noise, -1, dtype=np.int32))

    cam_positions = np.vstack(pts_cam)
    cam_normals = np.vstack(normals_cam)
    inv = t_gt.inverse()
    lidar_positions = inv.apply(cam_positions)
    lidar_normals = cam_normals @ t_gt.rotation
    flip = np.einsum("ni,ni->n", lidar_normals, lidar_positions) > 0
    lidar_normals[flip] *= -1.0

    cloud = PointCloud(lidar_positions, np.concatenate(refl),
                       lidar_normals, np.concatenate(labels))
    maskset = build_maskset(bitmaps, range(n_el), width, height)
    return Scene(cloud, maskset, t_gt, intr)


def save_scene(scene: Scene, out_dir, cloud_format: str = "pcd") -> None:
    """Persist a scene as cloud.<fmt>, masks.json and transform.json."""
    os.makedirs(out_dir, exist_ok=True)
    formats.save_cloud(scene.cloud, os.path.join(out_dir, f"cloud.{cloud_format}"))
    save_manifest(scene.masks, os.path.join(out_dir, "masks.json"))
    formats.save_transform(scene.extrinsic, scene.intrinsics,
                           os.path.join(out_dir, "transform.json"))


def rederive_attributes(scene: Scene, cfg=None) -> Scene:
    """Replace ground-truth attributes with pipeline-derived ones.

    Strips normals and labels, then runs the full preprocessing chain on
    positions and raw reflectivity.  Exercises the end-to-end path on
    scenes small enough for the clustering stage.
    """
    from .preprocess import preprocess

    bare = PointCloud.from_arrays(scene.cloud.positions, scene.cloud.reflectivity)
    return Scene(preprocess(bare, cfg), scene.masks, scene.extrinsic, scene.intrinsics)


def load_scene(in_dir) -> Scene:
    pcd = os.path.join(in_dir, "cloud.pcd")
    binf = os.path.join(in_dir, "cloud.bin")
    cloud_path = pcd if os.path.exists(pcd) else binf
    cloud = formats.load_cloud(cloud_path)
    masks = load_masks(os.path.join(in_dir, "masks.json"))
    extrinsic, intrinsics = formats.load_transform(os.path.join(in_dir, "transform.json"))
    return Scene(cloud, masks, extrinsic, intrinsics)
