import re

import cv2
import numpy as np
import pytest


def render_disc_frames(size=128, frames=16, radius=18, start=(34, 44), velocity=(3.0, 1.0)):
    """White disc on black translating at a known velocity (px/frame)."""
    out = []
    yy, xx = np.mgrid[0:size, 0:size]
    for t in range(frames):
        cx = start[0] + velocity[0] * t
        cy = start[1] + velocity[1] * t
        image = np.zeros((size, size, 3), np.uint8)
        image[((xx - cx) ** 2 + (yy - cy) ** 2) <= radius**2] = 255
        out.append(image)
    return np.stack(out)


def render_scroll_frames(size=128, frames=16, speed=4, seed=0):
    """Textured plane scrolling horizontally at ``speed`` px/frame (wraps).

    The texture mixes sinusoidal gratings at several orientations whose
    shortest wavelength stays above twice the largest per-pair
    displacement, so the motion is unambiguous and gradients exist
    everywhere (no aperture-problem flats).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    texture = np.full((size, size), 128.0)
    for wavelength, angle in ((32, 0.0), (40, 1.1), (48, 2.2)):
        phase = rng.uniform(0, 2 * np.pi)
        k = 2 * np.pi / wavelength
        texture += 35.0 * np.sin(
            k * (np.cos(angle) * xx + np.sin(angle) * yy) + phase
        )
    texture = np.clip(texture, 0, 255).astype(np.uint8)
    out = []
    for t in range(frames):
        rolled = np.roll(texture, -speed * t, axis=1)
        out.append(np.stack([rolled] * 3, axis=2))
    return np.stack(out)


def write_video(path, frames, fps=8):
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"mp4v"), fps, frames.shape[1:3][::-1]
    )
    assert writer.isOpened()
    for frame in frames:
        writer.write(cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    writer.release()
    return path


def write_frame_dir(path, frames, fps=8):
    path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        cv2.imwrite(str(path / f"{i:04d}.png"), cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    (path / "fps.txt").write_text(str(fps))
    return path


@pytest.fixture
def disc_video(tmp_path):
    return write_video(tmp_path / "disc.mp4", render_disc_frames())


@pytest.fixture
def disc_frame_dir(tmp_path):
    return write_frame_dir(tmp_path / "disc-frames", render_disc_frames())


@pytest.fixture
def scroll_video(tmp_path):
    return write_video(tmp_path / "scroll.mp4", render_scroll_frames())


@pytest.fixture
def static_video(tmp_path):
    frames = np.repeat(render_disc_frames(frames=1, velocity=(0, 0)), 12, axis=0)
    return write_video(tmp_path / "static.mp4", frames)


CRITERION_PATTERN = re.compile(r"::test_(p\d+|s\d+)_")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, set[str]] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            match = CRITERION_PATTERN.search(nodeid)
            if match:
                outcomes.setdefault(match.group(1).upper(), set()).add(status)
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(outcomes):
        verdict = "PASS" if outcomes[criterion] == {"passed"} else "FAIL"
        terminalreporter.write_line(f"{criterion}: {verdict}")
