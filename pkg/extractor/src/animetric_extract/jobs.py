"""Extraction jobs: decode once, run the requested backends, emit artifacts.

Output layout under the job's output directory (stem = case id):

    <stem>.masks.abtf                u8 [T, H, W]
    <stem>.tracks.abtf               f32 [T, N, 2]  (+ .vis.abtf, .roles.json)
    <stem>.flow.abtf                 f32 [P, H, W, 2]
    <stem>.emb.abtf                  f32 [S, D]   segment embeddings
    <stem>.feat.emb.abtf             f32 [T, D]   per-frame features
    <stem>.quality.abtf              f32 [T]
    <stem>.frames/NNN.png            judge stills at native resolution
    metadata.json                    backends, sampling params, warnings
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from . import backends
from .abtf import write_abtf
from .video import load_video, sample_indices, uniform_indices

KNOWN_OUTPUTS = (
    "masks",
    "tracks",
    "flow",
    "embeddings",
    "frame_features",
    "quality",
    "frames",
)


@dataclass
class ExtractionJob:
    video: str
    outputs: set[str]
    concept: str = ""
    case_id: str = ""
    sample_fps: float = 8.0
    frames_per_query: int = 8
    segments: int = 4
    track_grid: int = 4
    backend_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.outputs = set(self.outputs)
        unknown = self.outputs - set(KNOWN_OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs requested: {sorted(unknown)}")
        if not self.outputs:
            raise ValueError("no outputs requested")
        if self.sample_fps <= 0 or self.frames_per_query < 1 or self.track_grid < 1:
            raise ValueError("sampling parameters must be positive")
        if not self.case_id:
            self.case_id = Path(self.video).stem

    def backend(self, output: str) -> str:
        return self.backend_overrides.get(output, backends.DEFAULT_BACKENDS.get(output, ""))


def run_extraction(job: ExtractionJob, out_dir: str | Path) -> dict[str, str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames, source_fps = load_video(job.video)
    stem = job.case_id

    written: dict[str, str] = {}
    warnings: list[str] = []
    meta: dict = {
        "case_id": stem,
        "video": str(job.video),
        "source_fps": source_fps,
        "frame_count": int(frames.shape[0]),
        "image_size": [int(frames.shape[1]), int(frames.shape[2])],
        "backends": {},
        "params": {
            "sample_fps": job.sample_fps,
            "frames_per_query": job.frames_per_query,
            "segments": job.segments,
            "concept": job.concept,
        },
    }

    masks = None
    if {"masks", "tracks"} & job.outputs:
        segmenter = backends.SEGMENTERS[job.backend("masks")]
        masks = segmenter(frames, job.concept)

    if "masks" in job.outputs:
        path = out_dir / f"{stem}.masks.abtf"
        write_abtf(path, masks)
        if not masks.any():
            warnings.append("masks are empty on every frame")
        written["masks"] = str(path)
        meta["backends"]["masks"] = job.backend("masks")

    if "tracks" in job.outputs:
        tracker = backends.TRACKERS[job.backend("tracks")]
        positions, visibility, roles = tracker(frames, masks[0], bg_grid=job.track_grid)
        path = out_dir / f"{stem}.tracks.abtf"
        write_abtf(path, positions.astype(np.float32))
        write_abtf(out_dir / f"{stem}.vis.abtf", visibility.astype(np.uint8))
        roles_doc = {
            "image_size": [int(frames.shape[1]), int(frames.shape[2])],
            "roles": roles,
        }
        (out_dir / f"{stem}.roles.json").write_text(json.dumps(roles_doc, indent=2) + "\n")
        if "foreground" not in roles:
            warnings.append("no foreground query points (empty first-frame mask)")
        written["tracks"] = str(path)
        meta["backends"]["tracks"] = job.backend("tracks")

    if "flow" in job.outputs:
        indices = sample_indices(len(frames), source_fps, job.sample_fps)
        if len(indices) < 2:
            raise RuntimeError("video too short to sample a flow pair")
        estimator = backends.FLOW_ESTIMATORS[job.backend("flow")]
        fields = estimator(frames[indices])
        path = out_dir / f"{stem}.flow.abtf"
        write_abtf(path, fields)
        written["flow"] = str(path)
        meta["backends"]["flow"] = job.backend("flow")
        meta["params"]["flow_sample_indices"] = indices
        meta["params"]["flow_border_margin"] = backends.flow_border_margin(
            frames.shape[1], frames.shape[2]
        )
        meta["params"]["effective_sample_fps"] = source_fps / max(
            1, indices[1] - indices[0]
        )

    if "embeddings" in job.outputs:
        embedder = backends.EMBEDDERS[job.backend("embeddings")]
        vectors = embedder(frames, job.segments)
        path = out_dir / f"{stem}.emb.abtf"
        write_abtf(path, vectors)
        written["embeddings"] = str(path)
        meta["backends"]["embeddings"] = job.backend("embeddings")

    if "frame_features" in job.outputs:
        features = np.stack([backends.frame_feature(f) for f in frames])
        path = out_dir / f"{stem}.feat.emb.abtf"
        write_abtf(path, features.astype(np.float32))
        written["frame_features"] = str(path)
        meta["backends"]["frame_features"] = job.backend("frame_features")

    if "quality" in job.outputs:
        scorer = backends.QUALITY_MODELS[job.backend("quality")]
        path = out_dir / f"{stem}.quality.abtf"
        write_abtf(path, scorer(frames))
        written["quality"] = str(path)
        meta["backends"]["quality"] = job.backend("quality")

    if "frames" in job.outputs:
        frames_dir = out_dir / f"{stem}.frames"
        frames_dir.mkdir(exist_ok=True)
        for ordinal, index in enumerate(uniform_indices(len(frames), job.frames_per_query)):
            bgr = cv2.cvtColor(frames[index], cv2.COLOR_RGB2BGR)
            cv2.imwrite(str(frames_dir / f"{ordinal:03d}.png"), bgr)
        written["frames"] = str(frames_dir)

    meta["warnings"] = warnings
    meta["outputs"] = written
    meta["source_tags"] = {
        output: meta["backends"].get(output, "") for output in sorted(job.outputs)
    }
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written["metadata"] = str(out_dir / "metadata.json")
    return written
