"""Appeal and expressiveness metrics.

Dynamic degree flags per-pair motion from the strongest optical-flow
vectors against a resolution-scaled threshold; diversity and novelty are
cosine statistics over extractor-supplied feature vectors; semantic
extension tallies plausible content beyond the prompt; perceptual quality
averages a per-frame quality series on its native scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .artifacts import EmbeddingSet, FlowSequence, QualitySeries

FLOW_THRESHOLD_BASE = 6.0
FLOW_THRESHOLD_REF_SIZE = 256.0
TOP_FLOW_FRACTION = 0.05
DEFAULT_DYNAMIC_FRACTION = 0.25

ACTION_CAP = 5
BINARY_ASPECTS = (
    "new_characters",
    "new_objects",
    "camera_editing",
    "scene_expansion",
    "environment_change",
)


@dataclass(frozen=True)
class DynamicDegreeResult:
    per_pair_scores: np.ndarray
    moving_flags: np.ndarray
    threshold_used: float
    is_dynamic: bool
    moving_fraction: float

    def to_dict(self) -> dict:
        return {
            "per_pair_scores": [float(v) for v in self.per_pair_scores],
            "moving_flags": [bool(v) for v in self.moving_flags],
            "threshold_used": self.threshold_used,
            "is_dynamic": self.is_dynamic,
            "moving_fraction": self.moving_fraction,
        }


@dataclass(frozen=True)
class SemanticExtensionTally:
    new_action_count: int
    new_characters: int
    new_objects: int
    camera_editing: int
    scene_expansion: int
    environment_change: int
    raw_points: int
    normalized: float

    def to_dict(self) -> dict:
        return {
            "new_action_count": self.new_action_count,
            "new_characters": self.new_characters,
            "new_objects": self.new_objects,
            "camera_editing": self.camera_editing,
            "scene_expansion": self.scene_expansion,
            "environment_change": self.environment_change,
            "raw_points": self.raw_points,
            "normalized": self.normalized,
        }


def pair_motion_score(flow_field: np.ndarray) -> float:
    """Mean magnitude of the top 5% largest flow vectors in one field."""
    field = np.asarray(flow_field, dtype=float)
    if field.ndim != 3 or field.shape[2] != 2:
        raise ValueError(f"flow field must be [H, W, 2], got {field.shape}")
    h, w = field.shape[:2]
    if h * w < 20:
        raise ValueError(f"flow field of {h}x{w} pixels is too small for a top-5% mean")
    magnitudes = np.linalg.norm(field, axis=2).ravel()
    k = math.ceil(TOP_FLOW_FRACTION * magnitudes.size)
    top = np.partition(magnitudes, magnitudes.size - k)[-k:]
    return float(top.mean())


def motion_threshold(height: int, width: int) -> float:
    return FLOW_THRESHOLD_BASE * min(height, width) / FLOW_THRESHOLD_REF_SIZE


def dynamic_degree(
    flows: FlowSequence,
    height: int,
    width: int,
    dynamic_fraction: float = DEFAULT_DYNAMIC_FRACTION,
) -> DynamicDegreeResult:
    """Classify a video as dynamic from its sampled flow fields.

    A pair moves when its top-5% flow mean exceeds a threshold scaled by
    the video's smaller dimension; the video is dynamic when at least
    ``dynamic_fraction`` of the pairs move.
    """
    scores = np.array([pair_motion_score(f) for f in flows.data], dtype=float)
    threshold = motion_threshold(height, width)
    flags = scores > threshold
    fraction = float(flags.mean())
    return DynamicDegreeResult(
        per_pair_scores=scores,
        moving_flags=flags,
        threshold_used=threshold,
        is_dynamic=fraction >= dynamic_fraction,
        moving_fraction=fraction,
    )


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def diversity_score(pooled_features: np.ndarray) -> float:
    """Mean pairwise cosine distance over exactly five pooled vectors, x100.

    Each vector is the temporal mean of one sampled video's per-frame
    features. Similarities are clamped to [-1, 1] so anti-correlated pairs
    contribute at most 2; the final score is clamped to [0, 100].
    """
    feats = np.asarray(pooled_features, dtype=float)
    if feats.ndim != 2 or feats.shape[0] != 5:
        raise ValueError(f"diversity needs exactly 5 pooled vectors, got {feats.shape}")
    terms = []
    for i in range(5):
        for j in range(i + 1, 5):
            sim = max(-1.0, min(1.0, _cosine(feats[i], feats[j])))
            terms.append(1.0 - sim)
    return min(100.0, max(0.0, 100.0 * float(np.mean(terms))))


def novelty_score(gen: EmbeddingSet, ref: EmbeddingSet) -> float:
    """100 x (1 - mean cosine similarity) against the paired reference video.

    Segments are aligned by index; the mean similarity is clamped to [0, 1]
    so anti-correlated embeddings cannot push novelty past 100.
    """
    if gen.segment_count != ref.segment_count:
        raise ValueError(
            f"segment counts differ: generated {gen.segment_count} vs "
            f"reference {ref.segment_count}"
        )
    sims = [
        _cosine(gen.vectors[s], ref.vectors[s]) for s in range(gen.segment_count)
    ]
    mu = min(1.0, max(0.0, float(np.mean(sims))))
    return 100.0 * (1.0 - mu)


def semantic_extension(
    aspect_verdicts: dict[str, str], action_count: int
) -> SemanticExtensionTally:
    """Tally content beyond the prompt: individually counted new actions
    (capped at 5) plus five binary aspects, normalized to [0, 100]."""
    if action_count < 0:
        raise ValueError(f"action_count must be >= 0, got {action_count}")
    missing = [a for a in BINARY_ASPECTS if a not in aspect_verdicts]
    if missing:
        raise ValueError(f"missing aspect verdicts: {missing}")
    bits = {a: 1 if aspect_verdicts[a] == "yes" else 0 for a in BINARY_ASPECTS}
    raw = min(action_count, ACTION_CAP) + sum(bits.values())
    normalized = 100.0 * raw / (ACTION_CAP + len(BINARY_ASPECTS))
    return SemanticExtensionTally(
        new_action_count=action_count,
        raw_points=raw,
        normalized=normalized,
        **bits,
    )


def perceptual_quality(quality: QualitySeries) -> float:
    """Arithmetic mean of the per-frame quality scores, native scale."""
    scores = np.asarray(quality.scores, dtype=float)
    bad = np.nonzero(~np.isfinite(scores))[0]
    if bad.size:
        raise ValueError(f"non-finite quality score at frame {int(bad[0])}")
    return float(scores.mean())
