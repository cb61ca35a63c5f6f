"""The slow-in/slow-out rubric: from point tracks to a 0..5 easing score.

Good easing accelerates gradually, peaks mid-motion, then decelerates.
Three rubric points cover the speed profile's shape, two cover the
phase durations.
"""

import numpy as np

from animetric import SpeedCurve, TrackSet, relative_speed_curve, score_siso, smooth_speed


def tracks_from_steps(steps):
    """Foreground points stepping by `steps` px/frame; static background."""
    frames = len(steps) + 1
    x = np.concatenate([[0.0], np.cumsum(steps)])
    positions = np.zeros((frames, 3, 2), dtype=np.float32)
    positions[:, 0, 0] = 10 + x
    positions[:, 0, 1] = 40
    positions[:, 1, 0] = 30 + x
    positions[:, 1, 1] = 50
    positions[:, 2] = (100.0, 100.0)
    return TrackSet(
        positions=positions,
        visibility=np.ones((frames, 3), dtype=np.uint8),
        roles=("foreground", "foreground", "background"),
        image_size=(128, 128),
    )


def report(name, steps):
    tracks = tracks_from_steps(steps)
    curve = relative_speed_curve(tracks)
    verdict = score_siso(curve, video_frames=tracks.frame_count)
    flags = "".join(
        "+" if ok else "-"
        for ok in (
            verdict.ratio_ok,
            verdict.rise_ok,
            verdict.fall_ok,
            verdict.accel_phase_ok,
            verdict.decel_phase_ok,
        )
    )
    print(
        f"{name:22s} points={verdict.points} [ratio/rise/fall/accel/decel {flags}] "
        f"score={verdict.normalized_score:.0f} interval={verdict.interval}"
    )


eased = np.concatenate([np.zeros(5), np.linspace(0, 6, 36), np.linspace(6, 0, 53), np.zeros(5)])
report("eased (triangular)", eased)
report("robotic (constant)", np.full(99, 3.0))
report("ramp, no slow-out", np.linspace(0, 6, 99))

# The smoothing window (9 frames, centered) is what makes the rubric
# robust to frame-level jitter:
noisy = eased + np.random.default_rng(0).normal(0, 0.4, eased.size).clip(-0.4, 0.4)
raw = SpeedCurve(values=np.abs(noisy))
print("\nnoisy curve, first 10 raw vs smoothed values:")
print("  raw     :", " ".join(f"{v:4.2f}" for v in raw.values[:10]))
print("  smoothed:", " ".join(f"{v:4.2f}" for v in smooth_speed(raw).values[:10]))
report("eased + jitter", np.abs(noisy))
