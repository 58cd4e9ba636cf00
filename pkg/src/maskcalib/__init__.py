"""LiDAR-camera extrinsic calibration from segmentation-mask consistency.

The library projects an attributed point cloud (reflectivity, normals,
segment classes) into precomputed image segmentation masks and searches
for the extrinsic that makes the attributes inside each mask maximally
uniform: a coarse brute-force rotation grid followed by rounds of
random 6-DoF refinement.
"""

from .errors import (
    CalibError,
    CloudTooSmallError,
    DimensionMismatchError,
    EmptyMaskSetError,
    InvalidSpecError,
    NoOverlapError,
)
from .geometry import (
    EulerDelta,
    Extrinsic,
    Intrinsics,
    PixelCoord,
    Point,
    PointCloud,
    compose_delta,
    rotation_angle_between,
    rotation_from_axis_angle,
    rotation_from_euler_deg,
    translation_distance,
)
from .formats import (
    load_cloud,
    load_transform,
    read_bin,
    read_pcd,
    save_cloud,
    save_transform,
    transform_document,
    write_bin,
    write_pcd,
)
from .masks import (
    Mask,
    MaskSet,
    build_maskset,
    load_masks,
    manifest_text,
    rasterize_membership,
    rle_decode,
    rle_encode,
    save_manifest,
)
from .metrics import ErrorReport, aggregate, extrinsic_error, format_error_table, huber_scaled
from .overlay import intensity_colors, mask_tint, read_ppm, render_overlay, write_ppm
from .preprocess import (
    KdIndex,
    PreprocessConfig,
    estimate_normals,
    normalize_intensity,
    preprocess,
    segment_cloud,
)
from .scoring import (
    ConsistencyEvaluator,
    MaskPointSet,
    MaskScore,
    Projection,
    ScoreConfig,
    ScoreReport,
    class_consistency,
    gather,
    normal_consistency,
    project,
    reflectivity_consistency,
    score,
    size_adjustment,
)
from .search import (
    CalibrationResult,
    SearchConfig,
    SearchTrace,
    TraceEntry,
    brute_force_rotation,
    calibrate,
    random_refine,
    resolve_workers,
)
from .synth import (
    Scene,
    SceneSpec,
    default_extrinsic,
    default_intrinsics,
    generate,
    load_scene,
    rederive_attributes,
    save_scene,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
