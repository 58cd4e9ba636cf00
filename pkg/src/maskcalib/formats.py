"""File formats: point clouds (.bin, .pcd) and transform documents (.json).

``.bin`` is the bare binary layout common for automotive LiDAR dumps:
consecutive little-endian float32 quadruples ``x y z intensity``.  It
carries no normals or labels.

``.pcd`` here is the ASCII variant with an optional ``normal_*`` and
``label`` column set.  Floats are written with ``%.17g`` so a
save/load cycle reproduces every attribute bit for bit.

A transform document is a JSON object with keys ``T`` (4x4 row-major
homogeneous extrinsic), ``K`` (3x3 camera matrix), ``width`` and
``height`` in pixels.
"""

from __future__ import annotations

import io
import json
import os

import numpy as np

from .geometry import Extrinsic, Intrinsics, PointCloud

_PCD_FIELDS_FULL = ["x", "y", "z", "intensity",
                    "normal_x", "normal_y", "normal_z", "label"]


def read_bin(path) -> PointCloud:
    raw = np.fromfile(path, dtype="<f4")
    if raw.size == 0:
        raise ValueError(f"{path}: empty point cloud")
    if raw.size % 4 != 0:
        raise ValueError(f"{path}: byte length is not a multiple of 16")
    rows = raw.reshape(-1, 4).astype(np.float64)
    return PointCloud.from_arrays(rows[:, :3], rows[:, 3])


def write_bin(cloud: PointCloud, path) -> None:
    rows = np.empty((len(cloud), 4), dtype="<f4")
    rows[:, :3] = cloud.positions
    rows[:, 3] = cloud.reflectivity
    rows.tofile(path)


def read_pcd(path) -> PointCloud:
    with open(path, "rb") as fh:
        data = fh.read()
    text = data.decode("ascii")
    lines = text.splitlines()
    fields = None
    n_points = None
    data_start = None
    for i, line in enumerate(lines):
        if line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key == "FIELDS":
            fields = rest.split()
        elif key == "POINTS":
            n_points = int(rest)
        elif key == "DATA":
            if rest.strip() != "ascii":
                raise ValueError(f"{path}: only ascii PCD data is supported")
            data_start = i + 1
            break
    if fields is None or n_points is None or data_start is None:
        raise ValueError(f"{path}: missing FIELDS, POINTS or DATA header")
    for required in ("x", "y", "z", "intensity"):
        if required not in fields:
            raise ValueError(f"{path}: field '{required}' missing")
    body = "\n".join(lines[data_start:])
    table = np.loadtxt(io.StringIO(body), dtype=np.float64, ndmin=2)
    if table.shape[0] != n_points:
        raise ValueError(f"{path}: POINTS says {n_points}, file has {table.shape[0]} rows")
    if table.shape[1] != len(fields):
        raise ValueError(f"{path}: row width {table.shape[1]} does not match FIELDS")
    col = {name: table[:, j] for j, name in enumerate(fields)}
    positions = np.column_stack([col["x"], col["y"], col["z"]])
    normals = None
    if all(f"normal_{ax}" in col for ax in "xyz"):
        normals = np.column_stack([col["normal_x"], col["normal_y"], col["normal_z"]])
    labels = None
    if "label" in col:
        labels = col["label"].astype(np.int32)
    return PointCloud.from_arrays(positions, col["intensity"], normals, labels)


def write_pcd(cloud: PointCloud, path) -> None:
    n = len(cloud)
    header = "\n".join([
        "VERSION 0.7",
        "FIELDS " + " ".join(_PCD_FIELDS_FULL),
        "SIZE 8 8 8 8 8 8 8 4",
        "TYPE F F F F F F F I",
        "COUNT 1 1 1 1 1 1 1 1",
        f"WIDTH {n}",
        "HEIGHT 1",
        "VIEWPOINT 0 0 0 1 0 0 0",
        f"POINTS {n}",
        "DATA ascii",
    ])
    fmt = " ".join(["%.17g"] * 7 + ["%d"])
    out = io.StringIO()
    out.write(header + "\n")
    cols = (cloud.positions[:, 0], cloud.positions[:, 1], cloud.positions[:, 2],
            cloud.reflectivity,
            cloud.normals[:, 0], cloud.normals[:, 1], cloud.normals[:, 2])
    labels = cloud.labels
    for i in range(n):
        out.write(fmt % (cols[0][i], cols[1][i], cols[2][i], cols[3][i],
                         cols[4][i], cols[5][i], cols[6][i], labels[i]))
        out.write("\n")
    with open(path, "wb") as fh:
        fh.write(out.getvalue().encode("ascii"))


def load_cloud(path, fmt: str | None = None) -> PointCloud:
    """Read a point cloud, inferring the format from the extension unless given."""
    fmt = fmt or os.path.splitext(str(path))[1].lstrip(".").lower()
    if fmt == "bin":
        return read_bin(path)
    if fmt == "pcd":
        return read_pcd(path)
    raise ValueError(f"unknown point cloud format '{fmt}'")


def save_cloud(cloud: PointCloud, path, fmt: str | None = None) -> None:
    fmt = fmt or os.path.splitext(str(path))[1].lstrip(".").lower()
    if fmt == "bin":
        write_bin(cloud, path)
    elif fmt == "pcd":
        write_pcd(cloud, path)
    else:
        raise ValueError(f"unknown point cloud format '{fmt}'")


def transform_document(extrinsic: Extrinsic, intrinsics: Intrinsics) -> str:
    """Canonical JSON text for an extrinsic/intrinsics pair."""
    doc = {
        "T": [[float(v) for v in row] for row in extrinsic.matrix()],
        "K": [[float(v) for v in row] for row in intrinsics.k],
        "width": intrinsics.width,
        "height": intrinsics.height,
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def save_transform(extrinsic: Extrinsic, intrinsics: Intrinsics, path) -> None:
    with open(path, "wb") as fh:
        fh.write(transform_document(extrinsic, intrinsics).encode("ascii"))


def load_transform(path) -> tuple:
    """Read a transform document; returns ``(Extrinsic, Intrinsics)``."""
    with open(path, "rb") as fh:
        doc = json.loads(fh.read().decode("ascii"))
    try:
        t = np.array(doc["T"], dtype=np.float64)
        k = np.array(doc["K"], dtype=np.float64)
        width = int(doc["width"])
        height = int(doc["height"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed transform document: {exc}") from exc
    if t.shape != (4, 4):
        raise ValueError(f"{path}: T must be 4x4")
    if not np.array_equal(t[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError(f"{path}: bottom row of T must be (0, 0, 0, 1)")
    extrinsic = Extrinsic(t[:3, :3], t[:3, 3])
    intrinsics = Intrinsics(k, width, height)
    return extrinsic, intrinsics
