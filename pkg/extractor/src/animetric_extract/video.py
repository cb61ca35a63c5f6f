"""Video decoding and frame sampling.

A "video" is either a container file OpenCV can decode or a directory of
numbered PNG/JPG frames (handy for lossless synthetic rigs). Frames come
back as RGB uint8 [T, H, W, 3] plus the source frame rate.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

FRAME_DIR_DEFAULT_FPS = 8.0


class DecodeError(RuntimeError):
    pass


def load_video(path: str | Path) -> tuple[np.ndarray, float]:
    path = Path(path)
    if path.is_dir():
        return _load_frame_dir(path)
    if not path.exists():
        raise DecodeError(f"{path}: no such video")
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"{path}: could not open for decoding")
    fps = capture.get(cv2.CAP_PROP_FPS) or FRAME_DIR_DEFAULT_FPS
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    capture.release()
    if not frames:
        raise DecodeError(f"{path}: decoded zero frames")
    return np.stack(frames), float(fps)


def _load_frame_dir(path: Path) -> tuple[np.ndarray, float]:
    files = sorted(
        p for p in path.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not files:
        raise DecodeError(f"{path}: directory holds no image frames")
    frames = []
    fps = FRAME_DIR_DEFAULT_FPS
    fps_file = path / "fps.txt"
    if fps_file.exists():
        fps = float(fps_file.read_text().strip())
    for file in files:
        image = cv2.imread(str(file), cv2.IMREAD_COLOR)
        if image is None:
            raise DecodeError(f"{file}: unreadable frame")
        frames.append(cv2.cvtColor(image, cv2.COLOR_BGR2RGB))
    return np.stack(frames), fps


def sample_indices(frame_count: int, source_fps: float, target_fps: float) -> list[int]:
    """Indices approximating ``target_fps``, always including frame 0."""
    if frame_count < 1:
        raise ValueError("no frames to sample")
    step = max(1, round(source_fps / target_fps))
    return list(range(0, frame_count, step))


def uniform_indices(frame_count: int, count: int) -> list[int]:
    """``count`` indices spread uniformly across the clip, order preserved."""
    if frame_count <= count:
        return list(range(frame_count))
    if count == 1:
        return [0]
    return [round(i * (frame_count - 1) / (count - 1)) for i in range(count)]


def to_gray(frames: np.ndarray) -> np.ndarray:
    return np.stack([cv2.cvtColor(f, cv2.COLOR_RGB2GRAY) for f in frames])
