"""Slow-in/slow-out scoring: speed-profile rubric over foreground tracks.

Pipeline: build a frame-wise relative speed curve (foreground motion minus
background/camera motion), smooth it with a centered moving average, find
the motion interval, then award 0..5 points for the easing profile. Three
points cover the profile shape (peak-to-valley ratio, rise, fall); two
cover the acceleration/deceleration phase durations.

The absolute rise/fall threshold applies to the curve after normalization
by its peak, so all criteria are invariant to uniform speed scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .artifacts import ROLE_BACKGROUND, ROLE_FOREGROUND, TrackSet

EPS_SPEED = 1e-6

DEFAULT_WINDOW = 9
DEFAULT_INTERVAL_FRAC = 0.10
DEFAULT_RATIO_MIN = 2.0
DEFAULT_ABS_RISE = 0.15
DEFAULT_REL_RISE = 0.20
DEFAULT_PHASE_FRAC = 0.05

MIN_INTERVAL_FRAMES = 5


class NoMotionError(ValueError):
    """The speed curve is identically zero; no motion interval exists."""


@dataclass(frozen=True)
class SpeedCurve:
    """Frame-pair relative speeds, one value per adjacent frame pair."""

    values: np.ndarray
    frame_rate: float = 8.0
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 1:
            raise ValueError(f"speed curve must be non-empty 1-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("speed curve contains non-finite values")
        if np.any(values < 0):
            raise ValueError("speeds must be non-negative")


@dataclass(frozen=True)
class SisoVerdict:
    points: int
    ratio_ok: bool
    rise_ok: bool
    fall_ok: bool
    accel_phase_ok: bool
    decel_phase_ok: bool
    interval: tuple[int, int]
    normalized_score: float
    degenerate: bool = False

    def __post_init__(self):
        expected = sum(
            (self.ratio_ok, self.rise_ok, self.fall_ok,
             self.accel_phase_ok, self.decel_phase_ok)
        )
        if self.points != expected:
            raise ValueError(f"points {self.points} != criteria sum {expected}")
        if self.normalized_score != 20.0 * self.points:
            raise ValueError("normalized_score must be 20 x points")

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "ratio_ok": self.ratio_ok,
            "rise_ok": self.rise_ok,
            "fall_ok": self.fall_ok,
            "accel_phase_ok": self.accel_phase_ok,
            "decel_phase_ok": self.decel_phase_ok,
            "interval": list(self.interval),
            "normalized_score": self.normalized_score,
            "degenerate": self.degenerate,
        }


def relative_speed_curve(tracks: TrackSet) -> SpeedCurve:
    """Per frame pair: ||mean foreground step - mean background step|| in px/frame.

    Only points visible at both endpoints of a pair contribute. Pairs where
    no foreground point is visible get speed 0; pairs with no visible
    background point use a zero background step (static-camera assumption).
    """
    fg = tracks.points_with_role(ROLE_FOREGROUND)
    bg = tracks.points_with_role(ROLE_BACKGROUND)
    if fg.size == 0:
        raise ValueError("tracks contain no foreground points")
    if bg.size == 0:
        raise ValueError("tracks contain no background points")

    pos = tracks.positions.astype(float)
    vis = tracks.visibility.astype(bool)
    t = tracks.frame_count
    speeds = np.zeros(t - 1, dtype=float)
    for i in range(t - 1):
        both = vis[i] & vis[i + 1]
        fg_vis = fg[both[fg]]
        if fg_vis.size == 0:
            continue
        fg_step = (pos[i + 1, fg_vis] - pos[i, fg_vis]).mean(axis=0)
        bg_vis = bg[both[bg]]
        if bg_vis.size:
            bg_step = (pos[i + 1, bg_vis] - pos[i, bg_vis]).mean(axis=0)
        else:
            bg_step = np.zeros(2)
        speeds[i] = float(np.linalg.norm(fg_step - bg_step))
    return SpeedCurve(values=speeds)


def smooth_speed(curve: SpeedCurve, window: int = DEFAULT_WINDOW) -> SpeedCurve:
    """Centered moving average, window truncated symmetrically at the ends."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    values = curve.values
    n = values.size
    half = window // 2
    out = np.empty_like(values)
    for i in range(n):
        k = min(half, i, n - 1 - i)
        out[i] = values[i - k : i + k + 1].mean()
    return SpeedCurve(values=out, frame_rate=curve.frame_rate, normalized=curve.normalized)


def detect_motion_interval(
    curve: SpeedCurve, threshold_frac: float = DEFAULT_INTERVAL_FRAC
) -> tuple[int, int]:
    """Longest run of samples above ``threshold_frac`` of the curve maximum.

    Ties break to the earliest start. Indices are inclusive and index the
    speed curve (frame pairs), not video frames.
    """
    values = curve.values
    peak = float(values.max())
    if peak <= 0.0:
        raise NoMotionError("speed curve is identically zero")
    above = values > threshold_frac * peak
    best_start, best_len = 0, 0
    run_start = None
    for i, flag in enumerate(np.append(above, False)):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            run_len = i - run_start
            if run_len > best_len:
                best_start, best_len = run_start, run_len
            run_start = None
    if best_len == 0:
        raise NoMotionError("no samples above the motion threshold")
    return best_start, best_start + best_len - 1


def score_siso(
    curve: SpeedCurve,
    video_frames: int,
    window: int = DEFAULT_WINDOW,
    interval_frac: float = DEFAULT_INTERVAL_FRAC,
    ratio_min: float = DEFAULT_RATIO_MIN,
    abs_rise: float = DEFAULT_ABS_RISE,
    rel_rise: float = DEFAULT_REL_RISE,
    phase_frac: float = DEFAULT_PHASE_FRAC,
) -> SisoVerdict:
    """Apply the 0..5 easing rubric to a raw speed curve.

    The curve is smoothed, the motion interval detected, and the smoothed
    curve normalized by its peak. The interval is split into its first 20%,
    middle, and last 20%; segment means v_s, v_m, v_e drive the rise/fall
    checks, the middle's peak against the smaller end mean drives the
    ratio check, and the monotone prefix/suffix lengths (in frames,
    compared against ``phase_frac`` of the whole video) drive the phase
    checks. Intervals shorter than 5 samples yield a degenerate 0-point
    verdict.
    """
    smoothed = smooth_speed(curve, window=window)
    start, end = detect_motion_interval(smoothed, threshold_frac=interval_frac)
    n = end - start + 1
    if n < MIN_INTERVAL_FRAMES:
        return SisoVerdict(
            points=0,
            ratio_ok=False,
            rise_ok=False,
            fall_ok=False,
            accel_phase_ok=False,
            decel_phase_ok=False,
            interval=(start, end),
            normalized_score=0.0,
            degenerate=True,
        )

    norm = smoothed.values / smoothed.values.max()
    seg = norm[start : end + 1]
    k = max(1, round(0.2 * n))
    v_start = float(seg[:k].mean())
    v_end = float(seg[-k:].mean())
    middle = seg[k : n - k]
    v_mid = float(middle.mean())

    peak = float(middle.max())
    valley = min(v_start, v_end)
    ratio_ok = peak / max(EPS_SPEED, valley) >= ratio_min

    rise = v_mid - v_start
    rise_ok = rise >= abs_rise and rise / max(EPS_SPEED, v_start) >= rel_rise
    fall = v_mid - v_end
    fall_ok = fall >= abs_rise and fall / max(EPS_SPEED, v_end) >= rel_rise

    prefix = 1
    while prefix < n and seg[prefix] >= seg[prefix - 1]:
        prefix += 1
    suffix = 1
    while suffix < n and seg[n - 1 - suffix] >= seg[n - suffix]:
        suffix += 1
    need = phase_frac * video_frames
    accel_ok = prefix >= need
    decel_ok = suffix >= need

    points = int(ratio_ok) + int(rise_ok) + int(fall_ok) + int(accel_ok) + int(decel_ok)
    return SisoVerdict(
        points=points,
        ratio_ok=bool(ratio_ok),
        rise_ok=bool(rise_ok),
        fall_ok=bool(fall_ok),
        accel_phase_ok=bool(accel_ok),
        decel_phase_ok=bool(decel_ok),
        interval=(start, end),
        normalized_score=20.0 * points,
    )
