"""Camera-operation classification from edge-point tracks.

Points tracked along the four frame edges summarize scene motion: their
mean first-to-last displacements per edge decide between static, zoom,
pan, and tilt. Labels name the camera's motion, so scene content moves
opposite the label (content drifting left means the camera panned right).

The decision rule (static threshold at 0.5% of the frame diagonal, zoom
when the outward divergence dominates the mean translation by 1.5x) is
this module's documented reference behavior; both constants are
configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .artifacts import EDGE_ROLES, TrackSet

CAMERA_CLASSES = (
    "pan_left",
    "pan_right",
    "tilt_up",
    "tilt_down",
    "zoom_in",
    "zoom_out",
    "static",
)

DEFAULT_STATIC_FRAC = 0.005
DEFAULT_ZOOM_DOMINANCE = 1.5


@dataclass(frozen=True)
class CameraVerdict:
    predicted: str
    edge_displacements: dict[str, tuple[float, float]]
    confidence: float

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted,
            "edge_displacements": {
                role: [float(v) for v in vec]
                for role, vec in self.edge_displacements.items()
            },
            "confidence": self.confidence,
        }


def edge_displacements(tracks: TrackSet) -> dict[str, np.ndarray]:
    """Mean first-to-last-visible displacement per edge role.

    Points never visible are excluded; an edge with no usable point is an
    error because the verdict would silently lose one motion axis.
    """
    vis = tracks.visibility.astype(bool)
    pos = tracks.positions.astype(float)
    result: dict[str, np.ndarray] = {}
    for role in EDGE_ROLES:
        indices = tracks.points_with_role(role)
        if indices.size == 0:
            raise ValueError(f"tracks contain no points with role {role!r}")
        displacements = []
        for idx in indices:
            frames = np.nonzero(vis[:, idx])[0]
            if frames.size == 0:
                continue
            displacements.append(pos[frames[-1], idx] - pos[frames[0], idx])
        if not displacements:
            raise ValueError(f"no point with role {role!r} is ever visible")
        result[role] = np.mean(displacements, axis=0)
    return result


def classify_camera(
    tracks: TrackSet,
    static_frac: float = DEFAULT_STATIC_FRAC,
    zoom_dominance: float = DEFAULT_ZOOM_DOMINANCE,
) -> CameraVerdict:
    """Classify the clip's camera operation into one of seven classes."""
    edges = edge_displacements(tracks)
    top = edges["edge-top"]
    bottom = edges["edge-bottom"]
    left = edges["edge-left"]
    right = edges["edge-right"]

    h, w = tracks.image_size
    static_threshold = static_frac * math.hypot(h, w)
    magnitudes = [float(np.linalg.norm(v)) for v in (top, bottom, left, right)]
    displacement_report = {
        role: (float(edges[role][0]), float(edges[role][1])) for role in EDGE_ROLES
    }

    if max(magnitudes) < static_threshold:
        confidence = 1.0 - max(magnitudes) / static_threshold
        return CameraVerdict("static", displacement_report, confidence)

    # Outward-positive divergence: edges spreading apart means zooming in.
    divergence = (right[0] - left[0]) + (bottom[1] - top[1])
    mean_step = (top + bottom + left + right) / 4.0
    translation = float(np.linalg.norm(mean_step))

    if abs(divergence) >= zoom_dominance * translation:
        predicted = "zoom_in" if divergence > 0 else "zoom_out"
        confidence = abs(divergence) / (abs(divergence) + translation)
        return CameraVerdict(predicted, displacement_report, confidence)

    ax, ay = abs(float(mean_step[0])), abs(float(mean_step[1]))
    competing = ax + ay + abs(divergence)
    if ax >= ay:
        predicted = "pan_right" if mean_step[0] < 0 else "pan_left"
        confidence = ax / competing if competing else 0.0
    else:
        predicted = "tilt_down" if mean_step[1] < 0 else "tilt_up"
        confidence = ay / competing if competing else 0.0
    return CameraVerdict(predicted, displacement_report, confidence)


def camera_accuracy(cases: list[tuple[str, str | None]]) -> float:
    """Exact-match percentage over (predicted, expected) label pairs."""
    if not cases:
        raise ValueError("no camera cases to score")
    for predicted, expected in cases:
        if expected is None:
            raise ValueError("a camera case is missing its expected label")
        if expected not in CAMERA_CLASSES:
            raise ValueError(f"unknown expected camera label {expected!r}")
    matches = sum(1 for predicted, expected in cases if predicted == expected)
    return 100.0 * matches / len(cases)
