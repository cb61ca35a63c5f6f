"""Classifying the camera operation from points tracked along the frame edges.

Labels name the CAMERA's motion: when the camera pans right, scene
content drifts left across the frame. Zoom shows up as edges spreading
apart (in) or converging (out); the divergence statistic isolates it
from any translation.
"""

import numpy as np

from animetric import TrackSet, classify_camera


def edge_tracks(top, bottom, left, right, frames=8, size=256, per_edge=4):
    anchors, roles = [], []
    spec = {
        "edge-top": ([(size * (i + 1) / (per_edge + 1), 4) for i in range(per_edge)], top),
        "edge-bottom": ([(size * (i + 1) / (per_edge + 1), size - 5) for i in range(per_edge)], bottom),
        "edge-left": ([(4, size * (i + 1) / (per_edge + 1)) for i in range(per_edge)], left),
        "edge-right": ([(size - 5, size * (i + 1) / (per_edge + 1)) for i in range(per_edge)], right),
    }
    moves = []
    for role, (points, move) in spec.items():
        for point in points:
            anchors.append(point)
            roles.append(role)
            moves.append(move)
    anchors = np.asarray(anchors, float)
    moves = np.asarray(moves, float)
    positions = np.stack(
        [anchors + moves * (t / (frames - 1)) for t in range(frames)]
    ).astype(np.float32)
    return TrackSet(
        positions=positions,
        visibility=np.ones(positions.shape[:2], dtype=np.uint8),
        roles=tuple(roles),
        image_size=(size, size),
    )


scenarios = {
    "nothing moves": ((0, 0), (0, 0), (0, 0), (0, 0)),
    "content drifts left": ((-18, 0), (-18, 0), (-18, 0), (-18, 0)),
    "content drifts right": ((18, 0), (18, 0), (18, 0), (18, 0)),
    "content drifts down": ((0, 18), (0, 18), (0, 18), (0, 18)),
    "content drifts up": ((0, -18), (0, -18), (0, -18), (0, -18)),
    "edges spread apart": ((0, -12), (0, 12), (-12, 0), (12, 0)),
    "edges converge": ((0, 12), (0, -12), (12, 0), (-12, 0)),
    "spread + slight drift": ((2, -12), (2, 12), (-10, 0), (14, 0)),
}

for name, vectors in scenarios.items():
    verdict = classify_camera(edge_tracks(*vectors))
    print(f"{name:24s} -> {verdict.predicted:10s} (confidence {verdict.confidence:.2f})")
