"""Calibration error metrics between an estimated and a reference extrinsic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Extrinsic, rotation_angle_between, translation_distance

# Huber knee points, chosen at the scale of typical residual errors.
# Below delta the robust variant equals the plain error.
HUBER_DELTA_TRANS_M = 0.10
HUBER_DELTA_ROT_DEG = 0.5


@dataclass(frozen=True)
class ErrorReport:
    trans_l2: float   # meters
    rot_l2: float     # degrees
    trans_huber: float
    rot_huber: float
    trials: tuple = field(default_factory=tuple)


def huber_scaled(x: float, delta: float) -> float:
    """Huber-transformed error, mapped back to the input's units.

    Applies h(x) = x^2/2 for x <= delta, else delta*(x - delta/2), then
    returns sqrt(2*h) so the result is comparable to x itself: equal to
    x below the knee, compressed above it.
    """
    if x < 0:
        raise ValueError("error magnitude must be non-negative")
    h = 0.5 * x * x if x <= delta else delta * (x - 0.5 * delta)
    return math.sqrt(2.0 * h)


def extrinsic_error(est: Extrinsic, ref: Extrinsic,
                    trans_delta: float = HUBER_DELTA_TRANS_M,
                    rot_delta_deg: float = HUBER_DELTA_ROT_DEG) -> ErrorReport:
    """Translation distance and geodesic rotation angle, plain and Huber."""
    dt = translation_distance(est, ref)
    da = rotation_angle_between(est, ref)
    return ErrorReport(dt, da,
                       huber_scaled(dt, trans_delta),
                       huber_scaled(da, rot_delta_deg))


def aggregate(reports) -> ErrorReport:
    """Arithmetic mean over reports; inputs retained as trials."""
    reports = tuple(reports)
    if not reports:
        raise ValueError("at least one report is required")
    n = len(reports)
    return ErrorReport(
        sum(r.trans_l2 for r in reports) / n,
        sum(r.rot_l2 for r in reports) / n,
        sum(r.trans_huber for r in reports) / n,
        sum(r.rot_huber for r in reports) / n,
        trials=reports,
    )


def format_error_table(report: ErrorReport) -> str:
    """Aligned text table with L2 and Huber columns."""
    rows = [
        ("", "L2", "Huber"),
        ("translation [m]", f"{report.trans_l2:.4f}", f"{report.trans_huber:.4f}"),
        ("rotation [deg]", f"{report.rot_l2:.4f}", f"{report.rot_huber:.4f}"),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    return "\n".join(lines) + "\n"
