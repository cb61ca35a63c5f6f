"""Classical extraction backends.

Defaults favor determinism and zero model weights: contrast-based
segmentation, pyramidal Lucas-Kanade point tracking, Farneback dense
flow, downsampled-patch features, and a sharpness/exposure quality proxy.
Each backend records a ``source_tag`` so provenance stays auditable, and
heavier learned models can be registered under new tags without touching
the callers.
"""

from __future__ import annotations

import numpy as np
import cv2

from .video import to_gray

EDGE_INSET = 4
POINTS_PER_EDGE = 5
BG_GRID = 4
FG_POINTS = 9
MIN_CONTRAST = 10


# --- segmentation ------------------------------------------------------------

def segment_contrast(frames: np.ndarray, concept: str = "") -> np.ndarray:
    """Otsu-threshold segmentation of the salient object.

    The foreground is the thresholded side with the smaller area, reduced
    to its largest connected component. The ``concept`` prompt is recorded
    by the caller but not interpreted here; a promptable segmenter can be
    registered alongside this backend. Frames without contrast (object
    absent) yield an all-zero mask.
    """
    gray = to_gray(frames)
    masks = np.zeros(gray.shape, dtype=np.uint8)
    for t, frame in enumerate(gray):
        if int(frame.max()) - int(frame.min()) < MIN_CONTRAST:
            continue
        _, binary = cv2.threshold(frame, 0, 1, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
        if binary.sum() > binary.size / 2:
            binary = 1 - binary
        count, labels = cv2.connectedComponents(binary.astype(np.uint8))
        if count <= 1:
            continue
        sizes = np.bincount(labels.ravel())
        sizes[0] = 0
        masks[t] = (labels == int(sizes.argmax())).astype(np.uint8)
    return masks


SEGMENTERS = {"contrast": segment_contrast}


# --- point tracking -------------------------------------------------------------

def _seed_points(first_mask: np.ndarray, image_size: tuple[int, int],
                 bg_grid: int = BG_GRID):
    """Query points: foreground from the mask's centroid region, background
    on a grid away from the object, plus strips along the four edges."""
    h, w = image_size
    points: list[tuple[float, float]] = []
    roles: list[str] = []

    ys, xs = np.nonzero(first_mask)
    if xs.size:
        # Sample the object interior around its centroid.
        order = np.argsort((xs - xs.mean()) ** 2 + (ys - ys.mean()) ** 2)
        picks = order[:: max(1, order.size // FG_POINTS)][:FG_POINTS]
        for i in picks:
            points.append((float(xs[i]), float(ys[i])))
            roles.append("foreground")

    # Background grid, kept clear of the object by more than the LK window
    # so edge gradients cannot drag a background point onto it.
    away = cv2.dilate(first_mask, np.ones((31, 31), np.uint8)) if xs.size else first_mask
    for gy in range(bg_grid):
        for gx in range(bg_grid):
            x = (gx + 0.5) * w / bg_grid
            y = (gy + 0.5) * h / bg_grid
            if not away[min(h - 1, int(y)), min(w - 1, int(x))]:
                points.append((x, y))
                roles.append("background")

    for i in range(POINTS_PER_EDGE):
        span_x = (i + 1) * w / (POINTS_PER_EDGE + 1)
        span_y = (i + 1) * h / (POINTS_PER_EDGE + 1)
        points.append((span_x, float(EDGE_INSET)))
        roles.append("edge-top")
        points.append((span_x, float(h - 1 - EDGE_INSET)))
        roles.append("edge-bottom")
        points.append((float(EDGE_INSET), span_y))
        roles.append("edge-left")
        points.append((float(w - 1 - EDGE_INSET), span_y))
        roles.append("edge-right")
    return np.array(points, dtype=np.float32), roles


def track_lk(frames: np.ndarray, first_mask: np.ndarray, bg_grid: int = BG_GRID):
    """Chained pyramidal Lucas-Kanade tracking of the seeded query points.

    Returns (positions [T,N,2], visibility [T,N], roles). A point that LK
    loses goes invisible and its position freezes.
    """
    gray = to_gray(frames)
    h, w = gray.shape[1:]
    seeds, roles = _seed_points(first_mask, (h, w), bg_grid=bg_grid)
    if seeds.size == 0:
        raise RuntimeError("no trackable query points found")
    t_total, n = gray.shape[0], seeds.shape[0]
    positions = np.zeros((t_total, n, 2), dtype=np.float32)
    visibility = np.ones((t_total, n), dtype=np.uint8)
    positions[0] = seeds

    current = seeds.reshape(-1, 1, 2)
    alive = np.ones(n, dtype=bool)
    lk_params = dict(
        winSize=(21, 21),
        maxLevel=3,
        criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 30, 0.01),
    )
    for t in range(1, t_total):
        nxt, status, _ = cv2.calcOpticalFlowPyrLK(
            gray[t - 1], gray[t], current, None, **lk_params
        )
        status = status.ravel().astype(bool)
        inside = (
            (nxt[:, 0, 0] >= 0)
            & (nxt[:, 0, 0] <= w - 1)
            & (nxt[:, 0, 1] >= 0)
            & (nxt[:, 0, 1] <= h - 1)
        )
        alive = alive & status & inside
        current = np.where(alive[:, None, None], nxt, current)
        positions[t] = current[:, 0, :]
        visibility[t] = alive.astype(np.uint8)
    return positions, visibility, roles


TRACKERS = {"lucas-kanade": track_lk}


# --- dense flow ------------------------------------------------------------------

FLOW_BORDER_FRAC = 0.1


def flow_border_margin(height: int, width: int) -> int:
    """Frame-border crop: pixels whose true correspondence can fall outside
    the frame have no supported flow estimate, for any estimator."""
    return max(4, int(np.ceil(FLOW_BORDER_FRAC * min(height, width))))


def flow_farneback(sampled_frames: np.ndarray) -> np.ndarray:
    """Farneback dense flow between adjacent sampled frames.

    Returns [P, H-2m, W-2m, 2]: a border margin of ``flow_border_margin``
    pixels is cropped because estimates there are unsupported.
    """
    gray = to_gray(sampled_frames)
    margin = flow_border_margin(*gray.shape[1:])
    fields = []
    for t in range(len(gray) - 1):
        flow = cv2.calcOpticalFlowFarneback(
            gray[t],
            gray[t + 1],
            None,
            pyr_scale=0.5,
            levels=4,
            winsize=21,
            iterations=3,
            poly_n=5,
            poly_sigma=1.1,
            flags=0,
        )
        fields.append(flow[margin:-margin, margin:-margin].astype(np.float32))
    return np.stack(fields)


FLOW_ESTIMATORS = {"farneback": flow_farneback}


# --- features -----------------------------------------------------------------------

PATCH = 8
HIST_BINS = 16


def frame_feature(frame: np.ndarray) -> np.ndarray:
    """Fixed 80-dim appearance feature: 8x8 intensity patch + 16-bin histogram."""
    gray = cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY)
    patch = cv2.resize(gray, (PATCH, PATCH), interpolation=cv2.INTER_AREA)
    hist = cv2.calcHist([gray], [0], None, [HIST_BINS], [0, 256]).ravel()
    hist = hist / max(1.0, hist.sum())
    feature = np.concatenate([patch.ravel() / 255.0, hist]).astype(np.float32)
    if not feature.any():
        feature[0] = 1e-6  # all-black frame still yields a usable vector
    return feature


def embed_segments(frames: np.ndarray, segments: int) -> np.ndarray:
    """Mean per-frame features over equal temporal segments, [S, 80]."""
    segments = max(1, min(segments, len(frames)))
    bounds = np.linspace(0, len(frames), segments + 1).astype(int)
    vectors = []
    for s in range(segments):
        chunk = frames[bounds[s] : max(bounds[s] + 1, bounds[s + 1])]
        vectors.append(np.mean([frame_feature(f) for f in chunk], axis=0))
    return np.stack(vectors).astype(np.float32)


EMBEDDERS = {"gray-patch": embed_segments}


# --- quality ----------------------------------------------------------------------------

def quality_sharpness(frames: np.ndarray) -> np.ndarray:
    """Sharpness/exposure proxy on a 0..100 scale (native to this backend):
    Laplacian-variance sharpness damped by exposure imbalance."""
    scores = []
    for frame in frames:
        gray = cv2.cvtColor(frame, cv2.COLOR_RGB2GRAY)
        sharp = float(cv2.Laplacian(gray, cv2.CV_64F).var())
        exposure = 1.0 - 2.0 * abs(float(gray.mean()) / 255.0 - 0.5)
        scores.append(100.0 * (1.0 - np.exp(-sharp / 100.0)) * (0.5 + 0.5 * exposure))
    return np.array(scores, dtype=np.float32)


QUALITY_MODELS = {"lap-sharpness": quality_sharpness}

DEFAULT_BACKENDS = {
    "masks": "contrast",
    "tracks": "lucas-kanade",
    "flow": "farneback",
    "embeddings": "gray-patch",
    "frame_features": "gray-patch",
    "quality": "lap-sharpness",
}
