"""Command-line interface.

Subcommands: ``calibrate`` (full search), ``score`` (single evaluation),
``overlay`` (diagnostic rendering), ``synth`` (scene generation).
Exit codes: 0 success, 1 runtime/I-O/validation failure, 2 no overlap
between projected points and masks, 64 usage error.

The optional JSON config document carries ``preprocess``, ``score`` and
``search`` sections mirroring the corresponding dataclasses, plus
``mask_min_area`` and ``preprocess_mode`` ("auto" derives only missing
attributes, "force" always reruns the pipeline, "off" never does).
Unknown keys anywhere are rejected: a typo in a calibration run must
fail loudly, not fall back to defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import formats
from .errors import CalibError, InvalidSpecError, NoOverlapError
from .geometry import Extrinsic, Intrinsics, PointCloud
from .masks import load_masks
from .overlay import render_overlay, write_ppm
from .preprocess import PreprocessConfig, estimate_normals, normalize_intensity, \
    preprocess, segment_cloud
from .scoring import ConsistencyEvaluator, ScoreConfig
from .search import SearchConfig, calibrate
from .synth import Scene, SceneSpec, generate, save_scene

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_OVERLAP = 2
EXIT_USAGE = 64

_MODES = ("auto", "force", "off")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    preprocess: PreprocessConfig = dataclasses.field(default_factory=PreprocessConfig)
    score: ScoreConfig = dataclasses.field(default_factory=ScoreConfig)
    search: SearchConfig = dataclasses.field(default_factory=SearchConfig)
    mask_min_area: int = 100
    preprocess_mode: str = "auto"

    def __post_init__(self) -> None:
        if self.preprocess_mode not in _MODES:
            raise ValueError(f"preprocess_mode must be one of {_MODES}")
        if self.mask_min_area < 0:
            raise ValueError("mask_min_area must be non-negative")


def _build_section(cls, data, where: str):
    if not isinstance(data, dict):
        raise ValueError(f"{where} must be a JSON object")
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - fields
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)}")
    return cls(**data)


def load_run_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        doc = json.loads(fh.read().decode("utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = set(doc) - {"preprocess", "score", "search",
                          "mask_min_area", "preprocess_mode"}
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
    return RunConfig(
        preprocess=_build_section(PreprocessConfig, doc.get("preprocess", {}), "preprocess"),
        score=_build_section(ScoreConfig, doc.get("score", {}), "score"),
        search=_build_section(SearchConfig, doc.get("search", {}), "search"),
        mask_min_area=int(doc.get("mask_min_area", 100)),
        preprocess_mode=str(doc.get("preprocess_mode", "auto")),
    )


def serialize_run_config(cfg: RunConfig) -> str:
    doc = {
        "preprocess": dataclasses.asdict(cfg.preprocess),
        "score": dataclasses.asdict(cfg.score),
        "search": dataclasses.asdict(cfg.search),
        "mask_min_area": cfg.mask_min_area,
        "preprocess_mode": cfg.preprocess_mode,
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def _prepare_cloud(cloud: PointCloud, cfg: RunConfig) -> PointCloud:
    mode = cfg.preprocess_mode
    if mode == "off":
        return cloud
    if mode == "force":
        return preprocess(cloud, cfg.preprocess)
    out = cloud
    if not np.any(out.normals):
        out = estimate_normals(out, cfg.preprocess)
    if cfg.preprocess.intensity_scale is not None or float(out.reflectivity.max()) > 1.0:
        out = normalize_intensity(out, cfg.preprocess)
    if np.all(out.labels == -1):
        out = segment_cloud(out, cfg.preprocess)
    return out


def _load_intrinsics(path) -> Intrinsics:
    """Accept a full transform document or a bare K/width/height one."""
    with open(path, "rb") as fh:
        doc = json.loads(fh.read().decode("ascii"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: intrinsics must be a JSON object")
    try:
        k = np.array(doc["K"], dtype=np.float64)
        width = int(doc["width"])
        height = int(doc["height"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed intrinsics document: {exc}") from exc
    return Intrinsics(k, width, height)


def _load_frames(cloud_paths, mask_paths, cfg: RunConfig):
    frames = []
    for cloud_path, mask_path in zip(cloud_paths, mask_paths):
        cloud = _prepare_cloud(formats.load_cloud(cloud_path), cfg)
        masks = load_masks(mask_path, cfg.mask_min_area)
        frames.append((cloud, masks))
    return frames


def _report_doc(score: float, reports) -> str:
    doc = {
        "score": score,
        "frames": [
            {
                "total": rep.total,
                "points_projected": rep.points_projected,
                "no_overlap": rep.no_overlap,
                "masks": [
                    {
                        "mask_id": row.mask_id,
                        "score": row.score,
                        "count": row.count,
                        "reflectivity": row.reflectivity,
                        "normal": row.normal,
                        "classes": row.classes,
                        "adjustment": row.adjustment,
                    }
                    for row in rep.per_mask
                ],
            }
            for rep in reports
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def cmd_calibrate(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    init, _ = formats.load_transform(args.init)
    intr = _load_intrinsics(args.intrinsics)
    frames = _load_frames(args.cloud, args.masks, cfg)
    result = calibrate(init, frames, intr, cfg.search, cfg.score)
    os.makedirs(args.out, exist_ok=True)
    formats.save_transform(result.extrinsic, intr,
                           os.path.join(args.out, "extrinsic.json"))
    with open(os.path.join(args.out, "report.json"), "wb") as fh:
        fh.write(_report_doc(result.score, result.reports).encode("ascii"))
    with open(os.path.join(args.out, "trace.csv"), "wb") as fh:
        fh.write(result.trace.to_csv().encode("ascii"))
    print(f"score {result.score:.9f} after {result.evaluations} evaluations")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    extrinsic, _ = formats.load_transform(args.transform)
    intr = _load_intrinsics(args.intrinsics)
    frames = _load_frames(args.cloud, args.masks, cfg)
    evaluator = ConsistencyEvaluator(frames, intr, cfg.score)
    reports = evaluator.report(extrinsic)
    total = sum(rep.total for rep in reports) / len(reports)
    for fi, rep in enumerate(reports):
        print(f"frame {fi}: total {rep.total:.9f}, "
              f"{rep.points_projected} points projected")
        for row in rep.per_mask:
            print(f"  mask {row.mask_id}: score {row.score:.9f} n {row.count} "
                  f"reflectivity {row.reflectivity:.9f} normal {row.normal:.9f} "
                  f"classes {row.classes:.9f} adjustment {row.adjustment:.9f}")
    print(f"total {total:.9f}")
    if all(rep.no_overlap for rep in reports):
        print("no overlap: no mask received enough points", file=sys.stderr)
        return EXIT_NO_OVERLAP
    return EXIT_OK


def cmd_overlay(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    extrinsic, _ = formats.load_transform(args.transform)
    intr = _load_intrinsics(args.intrinsics)
    cloud = _prepare_cloud(formats.load_cloud(args.cloud), cfg)
    masks = load_masks(args.masks, cfg.mask_min_area)
    image = render_overlay(cloud, masks, extrinsic, intr, cfg.score.min_depth)
    write_ppm(image, args.out)
    return EXIT_OK


_SPEC_KEYS = {"n_planes", "n_clusters", "points_per_element", "intensity_profile",
              "noise_frac", "rng_seed", "depth_range", "max_tilt_deg", "fill",
              "mask_dilation_px"}


def _load_scene_spec(path, seed: int | None) -> SceneSpec:
    kwargs = {}
    if path:
        with open(path, "rb") as fh:
            doc = json.loads(fh.read().decode("utf-8"))
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: spec must be a JSON object")
        unknown = set(doc) - _SPEC_KEYS
        if unknown:
            raise ValueError(f"{path}: unknown spec keys: {sorted(unknown)}")
        kwargs = dict(doc)
        if "intensity_profile" in kwargs and kwargs["intensity_profile"] is not None:
            kwargs["intensity_profile"] = tuple(
                (float(m), float(s)) for m, s in kwargs["intensity_profile"])
        if "depth_range" in kwargs:
            kwargs["depth_range"] = tuple(float(x) for x in kwargs["depth_range"])
    if seed is not None:
        kwargs["rng_seed"] = seed
    return SceneSpec(**kwargs)


def cmd_synth(args) -> int:
    spec = _load_scene_spec(args.spec, args.seed)
    scene = generate(spec)
    save_scene(scene, args.out_dir, args.cloud_format)
    print(f"wrote scene with {len(scene.cloud)} points and "
          f"{len(scene.masks)} masks to {args.out_dir}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maskcalib",
                     description="LiDAR-camera extrinsic calibration from "
                                 "segmentation-mask consistency")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    cal = sub.add_parser("calibrate", help="run the two-phase search")
    cal.add_argument("--cloud", action="append", required=True,
                     help="point cloud (.pcd or .bin); repeat for more frames")
    cal.add_argument("--masks", action="append", required=True,
                     help="mask manifest or directory, paired with --cloud by order")
    cal.add_argument("--intrinsics", required=True,
                     help="JSON document carrying K, width, height")
    cal.add_argument("--init", required=True,
                     help="transform document with the initial extrinsic")
    cal.add_argument("--config", help="run configuration JSON")
    cal.add_argument("--out", required=True, help="output directory")
    cal.set_defaults(func=cmd_calibrate)

    sco = sub.add_parser("score", help="score one extrinsic, no search")
    sco.add_argument("--cloud", action="append", required=True)
    sco.add_argument("--masks", action="append", required=True)
    sco.add_argument("--intrinsics", required=True)
    sco.add_argument("--transform", required=True,
                     help="transform document with the extrinsic to score")
    sco.add_argument("--config")
    sco.set_defaults(func=cmd_score)

    ovl = sub.add_parser("overlay", help="render masks plus projected points")
    ovl.add_argument("--cloud", required=True)
    ovl.add_argument("--masks", required=True)
    ovl.add_argument("--intrinsics", required=True)
    ovl.add_argument("--transform", required=True)
    ovl.add_argument("--config")
    ovl.add_argument("--out", required=True, help="output PPM path")
    ovl.set_defaults(func=cmd_overlay)

    syn = sub.add_parser("synth", help="generate a synthetic scene")
    syn.add_argument("--out-dir", required=True)
    syn.add_argument("--seed", type=int, default=None,
                     help="overrides rng_seed from --spec")
    syn.add_argument("--spec", help="scene spec JSON")
    syn.add_argument("--cloud-format", choices=("pcd", "bin"), default="pcd")
    syn.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if len(getattr(args, "cloud", []) or []) and hasattr(args, "masks") \
            and isinstance(args.masks, list) \
            and len(args.cloud) != len(args.masks):
        print("maskcalib: error: --cloud and --masks counts differ",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except NoOverlapError as exc:
        print(f"maskcalib: no overlap: {exc}", file=sys.stderr)
        return EXIT_NO_OVERLAP
    except (CalibError, InvalidSpecError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"maskcalib: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
