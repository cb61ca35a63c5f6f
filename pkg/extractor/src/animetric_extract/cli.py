"""animetric-extract: turn one video into evaluation-ready artifact files."""

from __future__ import annotations

import argparse
import json
import sys

from .jobs import ExtractionJob, run_extraction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="animetric-extract",
        description="Decode a video and emit ABTF artifacts for evaluation",
    )
    parser.add_argument("--video", required=True, help="video file or frame directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--case-id", default="", help="artifact stem (default: video stem)")
    parser.add_argument("--tracks", action="store_true", help="emit point tracks")
    parser.add_argument(
        "--masks",
        metavar="CONCEPT",
        default=None,
        help="emit object masks for the given concept prompt",
    )
    parser.add_argument("--flow", action="store_true", help="emit dense optical flow")
    parser.add_argument("--embeddings", action="store_true", help="emit segment embeddings")
    parser.add_argument(
        "--frame-features", action="store_true", help="emit per-frame features"
    )
    parser.add_argument("--quality", action="store_true", help="emit quality series")
    parser.add_argument("--frames", action="store_true", help="emit judge stills (PNG)")
    parser.add_argument("--sample-fps", type=float, default=8.0)
    parser.add_argument("--frames-per-query", type=int, default=8)
    parser.add_argument("--segments", type=int, default=4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    outputs = set()
    if args.tracks:
        outputs.add("tracks")
    if args.masks is not None:
        outputs.add("masks")
    if args.flow:
        outputs.add("flow")
    if args.embeddings:
        outputs.add("embeddings")
    if args.frame_features:
        outputs.add("frame_features")
    if args.quality:
        outputs.add("quality")
    if args.frames:
        outputs.add("frames")

    try:
        job = ExtractionJob(
            video=args.video,
            outputs=outputs,
            concept=args.masks or "",
            case_id=args.case_id,
            sample_fps=args.sample_fps,
            frames_per_query=args.frames_per_query,
            segments=args.segments,
        )
        written = run_extraction(job, args.out)
    except Exception as exc:
        print(f"extraction failed: {exc}", file=sys.stderr)
        return 1
    json.dump(written, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
