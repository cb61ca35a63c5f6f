"""Standardized per-video intermediate artifacts the metric kernels consume.

Each type wraps one numpy tensor plus the minimal metadata its consumers
need, validates its invariants on construction, and knows how to round-trip
through ABTF files using the conventional extensions (``.masks.abtf``,
``.tracks.abtf``, ``.flow.abtf``, ``.emb.abtf``, ``.quality.abtf``). Track
roles and image size live in a sibling ``.roles.json``; track visibility in
a sibling ``.vis.abtf`` (absent sibling means all points visible).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensorfile import read_array, write_array

ROLE_FOREGROUND = "foreground"
ROLE_BACKGROUND = "background"
ROLE_EDGE_TOP = "edge-top"
ROLE_EDGE_BOTTOM = "edge-bottom"
ROLE_EDGE_LEFT = "edge-left"
ROLE_EDGE_RIGHT = "edge-right"

TRACK_ROLES = frozenset(
    {
        ROLE_FOREGROUND,
        ROLE_BACKGROUND,
        ROLE_EDGE_TOP,
        ROLE_EDGE_BOTTOM,
        ROLE_EDGE_LEFT,
        ROLE_EDGE_RIGHT,
    }
)

EDGE_ROLES = (ROLE_EDGE_TOP, ROLE_EDGE_BOTTOM, ROLE_EDGE_LEFT, ROLE_EDGE_RIGHT)

ARTIFACT_KINDS = frozenset(
    {"masks", "tracks", "flow", "embeddings", "quality", "frames"}
)


class ArtifactError(ValueError):
    """An artifact violates its invariants."""


@dataclass(frozen=True)
class MaskSequence:
    """Per-frame binary foreground masks, u8 [T, H, W] with values in {0, 1}."""

    data: np.ndarray
    frame_rate: float = 8.0

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.uint8))
        validate_mask_sequence(self)

    @property
    def frame_count(self) -> int:
        return self.data.shape[0]

    def save(self, path: str | Path) -> None:
        write_array(path, self.data)

    @classmethod
    def load(cls, path: str | Path, frame_rate: float = 8.0) -> "MaskSequence":
        return cls(data=read_array(path), frame_rate=frame_rate)


def validate_mask_sequence(masks: MaskSequence) -> None:
    """Check the mask invariants, naming the first offending frame/pixel."""
    data = masks.data
    if data.ndim != 3:
        raise ArtifactError(f"mask tensor must be [T, H, W], got shape {data.shape}")
    t, h, w = data.shape
    if t < 2:
        raise ArtifactError(f"mask sequence needs at least 2 frames, got {t}")
    if h < 1 or w < 1:
        raise ArtifactError(f"mask frames must be at least 1x1, got {h}x{w}")
    bad = np.argwhere(data > 1)
    if bad.size:
        ft, fy, fx = (int(v) for v in bad[0])
        raise ArtifactError(
            f"mask value {int(data[ft, fy, fx])} outside {{0,1}} at frame {ft}, "
            f"pixel (row {fy}, col {fx})"
        )


@dataclass(frozen=True)
class TrackSet:
    """Point trajectories in pixel coordinates with per-frame visibility.

    positions: f32 [T, N, 2] as (x, y); visibility: u8 [T, N] in {0, 1};
    roles: one label per point; image_size: (H, W). A point invisible at
    frame t contributes to no statistic at t.
    """

    positions: np.ndarray
    visibility: np.ndarray
    roles: tuple[str, ...]
    image_size: tuple[int, int]

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float32)
        vis = np.asarray(self.visibility, dtype=np.uint8)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "visibility", vis)
        object.__setattr__(self, "roles", tuple(self.roles))
        object.__setattr__(self, "image_size", tuple(int(v) for v in self.image_size))
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise ArtifactError(f"positions must be [T, N, 2], got {pos.shape}")
        t, n = pos.shape[:2]
        if t < 2:
            raise ArtifactError(f"tracks need at least 2 frames, got {t}")
        if n < 1:
            raise ArtifactError("tracks need at least 1 point")
        if vis.shape != (t, n):
            raise ArtifactError(
                f"visibility shape {vis.shape} does not match positions {(t, n)}"
            )
        if np.any(vis > 1):
            raise ArtifactError("visibility values must be 0 or 1")
        if not np.all(np.isfinite(pos)):
            raise ArtifactError("positions contain non-finite values")
        if len(self.roles) != n:
            raise ArtifactError(f"{len(self.roles)} roles for {n} points")
        unknown = set(self.roles) - TRACK_ROLES
        if unknown:
            raise ArtifactError(f"unknown track roles {sorted(unknown)}")
        if len(self.image_size) != 2 or min(self.image_size) < 1:
            raise ArtifactError(f"bad image_size {self.image_size}")

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    def points_with_role(self, role: str) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.roles) if r == role], dtype=int)

    def save(self, path: str | Path) -> None:
        """Write ``<base>.tracks.abtf`` plus the visibility/roles siblings."""
        path = Path(path)
        write_array(path, self.positions)
        base = _strip_suffix(path, ".tracks.abtf")
        write_array(base.with_name(base.name + ".vis.abtf"), self.visibility)
        roles_doc = {"image_size": list(self.image_size), "roles": list(self.roles)}
        base.with_name(base.name + ".roles.json").write_text(
            json.dumps(roles_doc, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "TrackSet":
        path = Path(path)
        positions = read_array(path)
        base = _strip_suffix(path, ".tracks.abtf")
        roles_path = base.with_name(base.name + ".roles.json")
        if not roles_path.exists():
            raise ArtifactError(f"missing roles sidecar {roles_path}")
        roles_doc = json.loads(roles_path.read_text())
        vis_path = base.with_name(base.name + ".vis.abtf")
        if vis_path.exists():
            visibility = read_array(vis_path)
        else:
            visibility = np.ones(positions.shape[:2], dtype=np.uint8)
        return cls(
            positions=positions,
            visibility=visibility,
            roles=tuple(roles_doc["roles"]),
            image_size=tuple(roles_doc["image_size"]),
        )


def _strip_suffix(path: Path, suffix: str) -> Path:
    name = path.name
    if name.endswith(suffix):
        return path.with_name(name[: -len(suffix)])
    return path.with_name(path.stem)


@dataclass(frozen=True)
class FlowSequence:
    """Dense optical flow per adjacent sampled-frame pair, f32 [P, H, W, 2]."""

    data: np.ndarray
    sample_fps: float = 8.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", data)
        if data.ndim != 4 or data.shape[3] != 2:
            raise ArtifactError(f"flow tensor must be [P, H, W, 2], got {data.shape}")
        if data.shape[0] < 1:
            raise ArtifactError("flow sequence needs at least one frame pair")
        if not np.all(np.isfinite(data)):
            raise ArtifactError("flow contains non-finite values")

    @property
    def pair_count(self) -> int:
        return self.data.shape[0]

    def save(self, path: str | Path) -> None:
        write_array(path, self.data)

    @classmethod
    def load(cls, path: str | Path, sample_fps: float = 8.0) -> "FlowSequence":
        return cls(data=read_array(path), sample_fps=sample_fps)


@dataclass(frozen=True)
class EmbeddingSet:
    """Temporal-segment feature vectors, f32 [S, D]; no vector may be all-zero."""

    vectors: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float32)
        object.__setattr__(self, "vectors", vec)
        if vec.ndim != 2:
            raise ArtifactError(f"embeddings must be [S, D], got shape {vec.shape}")
        s, d = vec.shape
        if s < 1 or d < 1:
            raise ArtifactError(f"embeddings must be non-empty, got {vec.shape}")
        norms = np.linalg.norm(vec, axis=1)
        zero = np.nonzero(norms == 0)[0]
        if zero.size:
            raise ArtifactError(f"embedding vector {int(zero[0])} is all-zero")

    @property
    def segment_count(self) -> int:
        return self.vectors.shape[0]

    def save(self, path: str | Path) -> None:
        write_array(path, self.vectors)

    @classmethod
    def load(cls, path: str | Path, source_tag: str = "") -> "EmbeddingSet":
        return cls(vectors=read_array(path), source_tag=source_tag)


@dataclass(frozen=True)
class QualitySeries:
    """Per-frame perceptual quality scores on the producing model's scale."""

    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float32)
        object.__setattr__(self, "scores", scores)
        if scores.ndim != 1 or scores.shape[0] < 1:
            raise ArtifactError(f"quality series must be non-empty 1-D, got {scores.shape}")

    def save(self, path: str | Path) -> None:
        write_array(path, self.scores)

    @classmethod
    def load(cls, path: str | Path) -> "QualitySeries":
        return cls(scores=read_array(path))


@dataclass(frozen=True)
class VideoCase:
    """One benchmark case: a source image + prompt and what its scorer needs."""

    case_id: str
    dimension_id: str
    source_image: str = ""
    prompt: str = ""
    expected_label: str | None = None
    question_bank_ref: str | None = None
    artifact_needs: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "artifact_needs", frozenset(self.artifact_needs))
        if not self.case_id:
            raise ArtifactError("case_id must be non-empty")
        unknown = self.artifact_needs - ARTIFACT_KINDS
        if unknown:
            raise ArtifactError(
                f"case {self.case_id}: unknown artifact kinds {sorted(unknown)}"
            )
