"""Two-phase extrinsic search: rotation grid, then random 6-DoF refinement.

Phase one scores every rotation-only delta on the regular grid
{-A, -A+s, ..., A}^3 around the initial guess.  Phase two runs a
configurable number of rounds of uniform random 6-DoF deltas around the
incumbent, halving (by default) the sampling range each round.

Updates require a strict score improvement, so ties keep the incumbent
and the final score can never drop below the initial one.  Candidate
order is fixed (grid enumeration order, then draw order), which makes
the whole search deterministic for a given seed and independent of how
many worker processes evaluate candidates.
"""

from __future__ import annotations

import itertools
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from .errors import NoOverlapError
from .geometry import EulerDelta, Extrinsic, compose_delta
from .scoring import ConsistencyEvaluator, ScoreConfig


@dataclass(frozen=True)
class SearchConfig:
    rot_range_deg: float = 5.0
    rot_stride_deg: float = 1.0
    refine_rot_range_deg: float = 1.0
    refine_trans_range_m: float = 0.10
    refine_samples: int = 1000
    rounds: int = 3
    range_shrink: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.rot_stride_deg <= 0:
            raise ValueError("rot_stride_deg must be positive")
        # A zero range is the degenerate one-point grid; negatives are not.
        if (self.rot_range_deg < 0 or self.refine_rot_range_deg < 0
                or self.refine_trans_range_m < 0):
            raise ValueError("search ranges must be non-negative")
        if self.refine_samples < 0:
            raise ValueError("refine_samples must be non-negative")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not 0.0 < self.range_shrink <= 1.0:
            raise ValueError("range_shrink must lie in (0, 1]")


@dataclass(frozen=True)
class TraceEntry:
    """One candidate evaluation; delta is relative to the phase's start pose."""

    phase: str
    delta: EulerDelta
    score: float
    best_score: float


@dataclass(frozen=True)
class SearchTrace:
    entries: tuple

    def __len__(self) -> int:
        return len(self.entries)

    def best_scores(self) -> list:
        return [e.best_score for e in self.entries]

    def to_csv(self) -> str:
        lines = ["phase,d_roll_deg,d_pitch_deg,d_yaw_deg,d_tx_m,d_ty_m,d_tz_m,score,best_score"]
        for e in self.entries:
            d = e.delta
            lines.append(",".join([e.phase] + [repr(float(x)) for x in (
                d.d_roll, d.d_pitch, d.d_yaw, d.d_tx, d.d_ty, d.d_tz,
                e.score, e.best_score)]))
        return "\n".join(lines) + "\n"

    @staticmethod
    def concat(traces) -> "SearchTrace":
        entries = []
        for t in traces:
            entries.extend(t.entries)
        return SearchTrace(tuple(entries))


@dataclass(frozen=True)
class CalibrationResult:
    extrinsic: Extrinsic
    score: float
    reports: tuple  # per-frame ScoreReport at the final extrinsic
    trace: SearchTrace
    evaluations: int


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else CALIB_THREADS, 0 meaning auto."""
    if workers is None:
        raw = os.environ.get("CALIB_THREADS", "0")
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ValueError(f"CALIB_THREADS must be an integer, got {raw!r}") from exc
    if workers < 0:
        raise ValueError("worker count must be non-negative")
    if workers == 0:
        return os.cpu_count() or 1
    return workers


_POOL_EVALUATOR = None


def _pool_init(evaluator) -> None:
    global _POOL_EVALUATOR
    _POOL_EVALUATOR = evaluator


def _pool_eval(extrinsic):
    return _POOL_EVALUATOR.evaluate(extrinsic)


def _evaluate_candidates(evaluator: ConsistencyEvaluator, candidates: list,
                         workers: int) -> list:
    """Scores for each candidate, in candidate order regardless of workers."""
    if workers <= 1 or len(candidates) < 4 * workers:
        return [evaluator.evaluate(c) for c in candidates]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return [evaluator.evaluate(c) for c in candidates]
    chunk = max(1, len(candidates) // (workers * 8))
    with ctx.Pool(workers, initializer=_pool_init, initargs=(evaluator,)) as pool:
        return pool.map(_pool_eval, candidates, chunksize=chunk)


def _reduce(init: Extrinsic, init_score: float, phase: str, deltas: list,
            candidates: list, scored: list, entries: list):
    """Strict-improvement argmax in candidate order; incumbent wins ties."""
    best = init
    best_score = init_score
    any_points = False
    for delta, candidate, (cand_score, points) in zip(deltas, candidates, scored):
        if points > 0:
            any_points = True
        if cand_score > best_score:
            best = candidate
            best_score = cand_score
        entries.append(TraceEntry(phase, delta, cand_score, best_score))
    return best, best_score, any_points


def _grid_values(rot_range: float, stride: float) -> np.ndarray:
    steps = int(round(2.0 * rot_range / stride)) if rot_range > 0 else 0
    return -rot_range + stride * np.arange(steps + 1)


def brute_force_rotation(init: Extrinsic, frames, intrinsics,
                         cfg: SearchConfig | None = None,
                         score_cfg: ScoreConfig | None = None,
                         workers: int | None = None,
                         _evaluator: ConsistencyEvaluator | None = None,
                         _init_score: float | None = None):
    """Exhaustive rotation-only grid around ``init``; returns (best, trace).

    The zero delta is always evaluated (or its known score reused), so
    the incumbent participates and a degenerate zero-range grid costs
    exactly one evaluation.
    """
    cfg = cfg or SearchConfig()
    workers = resolve_workers(workers)
    evaluator = _evaluator or ConsistencyEvaluator(frames, intrinsics, score_cfg)

    values = _grid_values(cfg.rot_range_deg, cfg.rot_stride_deg)
    deltas = [EulerDelta(d_roll=r, d_pitch=p, d_yaw=y)
              for r, p, y in itertools.product(values, values, values)
              if not (r == 0.0 and p == 0.0 and y == 0.0)]
    entries = []
    if _init_score is None:
        init_score, init_points = evaluator.evaluate(init)
        entries.append(TraceEntry("grid", EulerDelta(), init_score, init_score))
    else:
        init_score, init_points = _init_score, 1
        entries.append(TraceEntry("grid", EulerDelta(), init_score, init_score))

    candidates = [compose_delta(init, d) for d in deltas]
    scored = _evaluate_candidates(evaluator, candidates, workers)
    best, best_score, any_points = _reduce(
        init, init_score, "grid", deltas, candidates, scored, entries)
    if not any_points and init_points == 0:
        raise NoOverlapError("no candidate on the rotation grid projects any point")
    return best, SearchTrace(tuple(entries))


def random_refine(init: Extrinsic, frames, intrinsics,
                  cfg: SearchConfig | None = None, round_scale: float = 1.0,
                  score_cfg: ScoreConfig | None = None,
                  workers: int | None = None,
                  rng: np.random.Generator | None = None,
                  _evaluator: ConsistencyEvaluator | None = None,
                  _init_score: float | None = None,
                  _phase: str = "refine"):
    """One round of uniform random 6-DoF deltas around ``init``."""
    cfg = cfg or SearchConfig()
    workers = resolve_workers(workers)
    evaluator = _evaluator or ConsistencyEvaluator(frames, intrinsics, score_cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    rot_range = cfg.refine_rot_range_deg * round_scale
    trans_range = cfg.refine_trans_range_m * round_scale
    draws = rng.uniform(-1.0, 1.0, size=(cfg.refine_samples, 6))
    deltas = [EulerDelta(d_roll=d[0] * rot_range, d_pitch=d[1] * rot_range,
                         d_yaw=d[2] * rot_range, d_tx=d[3] * trans_range,
                         d_ty=d[4] * trans_range, d_tz=d[5] * trans_range)
              for d in draws]

    entries = []
    if _init_score is None:
        init_score, init_points = evaluator.evaluate(init)
        entries.append(TraceEntry(_phase, EulerDelta(), init_score, init_score))
    else:
        init_score, init_points = _init_score, 1

    candidates = [compose_delta(init, d) for d in deltas]
    scored = _evaluate_candidates(evaluator, candidates, workers)
    best, best_score, any_points = _reduce(
        init, init_score, _phase, deltas, candidates, scored, entries)
    if deltas and not any_points and init_points == 0:
        raise NoOverlapError("no refinement candidate projects any point")
    return best, SearchTrace(tuple(entries))


def calibrate(init: Extrinsic, frames, intrinsics,
              cfg: SearchConfig | None = None,
              score_cfg: ScoreConfig | None = None,
              workers: int | None = None) -> CalibrationResult:
    """Full search: one rotation grid pass, then shrinking random rounds.

    ``frames`` is a sequence of (cloud, maskset) pairs; candidate scores
    average over frames.  Raises NoOverlapError when the initial guess
    projects zero points in every frame.
    """
    cfg = cfg or SearchConfig()
    workers = resolve_workers(workers)
    evaluator = ConsistencyEvaluator(frames, intrinsics, score_cfg)

    init_score, init_points = evaluator.evaluate(init)
    if init_points == 0:
        raise NoOverlapError("initial extrinsic projects zero points in every frame")

    best, grid_trace = brute_force_rotation(
        init, frames, intrinsics, cfg, workers=workers,
        _evaluator=evaluator, _init_score=init_score)
    best_score = grid_trace.entries[-1].best_score
    traces = [grid_trace]

    rng = np.random.default_rng(cfg.rng_seed)
    for round_index in range(cfg.rounds):
        scale = cfg.range_shrink ** round_index
        best, trace = random_refine(
            best, frames, intrinsics, cfg, round_scale=scale, workers=workers,
            rng=rng, _evaluator=evaluator, _init_score=best_score,
            _phase=f"refine-{round_index + 1}")
        if len(trace):
            best_score = trace.entries[-1].best_score
        traces.append(trace)

    reports = evaluator.report(best)
    trace = SearchTrace.concat(traces)
    return CalibrationResult(best, best_score, reports, trace, len(trace))
