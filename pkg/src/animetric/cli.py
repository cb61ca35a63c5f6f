"""Command-line entry points.

Every subcommand prints a JSON document to stdout; ``run`` and ``refine``
additionally write files into their output directories. Exit status is 0
on success; ``run`` exits nonzero when any case failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import appeal, camera, harness, openset, qa, siso, squash
from .artifacts import EmbeddingSet, FlowSequence, MaskSequence, QualitySeries, TrackSet
from .gateway import GatewayConfig, StubTransport, VlmGateway


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_siso(args) -> int:
    tracks = TrackSet.load(args.tracks)
    curve = siso.relative_speed_curve(tracks)
    verdict = siso.score_siso(
        curve,
        video_frames=tracks.frame_count,
        window=args.window,
        interval_frac=args.siso_interval_frac,
    )
    _emit(verdict.to_dict())
    return 0


def _cmd_squash(args) -> int:
    masks = MaskSequence.load(args.masks)
    result = squash.squash_stretch_score(
        masks, rebound=args.rebound == "true", tau=args.tau
    )
    _emit(result.to_dict())
    return 0


def _cmd_dyndeg(args) -> int:
    flows = FlowSequence.load(args.flow)
    height = args.height or flows.data.shape[1]
    width = args.width or flows.data.shape[2]
    result = appeal.dynamic_degree(
        flows, height, width, dynamic_fraction=args.dynamic_fraction
    )
    _emit(result.to_dict())
    return 0


def _cmd_diversity(args) -> int:
    import numpy as np

    vectors = [EmbeddingSet.load(p) for p in args.features]
    pooled = np.stack([e.vectors.mean(axis=0) for e in vectors])
    _emit({"diversity": appeal.diversity_score(pooled)})
    return 0


def _cmd_novelty(args) -> int:
    gen = EmbeddingSet.load(args.gen)
    ref = EmbeddingSet.load(args.ref)
    _emit({"novelty": appeal.novelty_score(gen, ref)})
    return 0


def _cmd_camera(args) -> int:
    tracks = TrackSet.load(args.tracks)
    verdict = camera.classify_camera(
        tracks, static_frac=args.static_frac, zoom_dominance=args.zoom_dominance
    )
    _emit(verdict.to_dict())
    return 0


def _cmd_quality(args) -> int:
    series = QualitySeries.load(args.quality)
    _emit({"mean_quality": appeal.perceptual_quality(series)})
    return 0


def _build_gateway(args) -> VlmGateway:
    cache_dir = getattr(args, "vlm_cache", None)
    if getattr(args, "stub_gateway", None):
        transport = StubTransport.from_file(args.stub_gateway)
        return VlmGateway(GatewayConfig(), cache_dir=cache_dir, transport=transport)
    if getattr(args, "gateway", None):
        config = GatewayConfig.from_file(args.gateway)
        return VlmGateway(config, cache_dir=cache_dir)
    raise SystemExit("either --gateway or --stub-gateway is required")


def _cmd_run(args) -> int:
    manifest = harness.load_manifest(args.manifest, strict_counts=args.strict_counts)
    gateway = _build_gateway(args)
    config = harness.RunConfig(workers=args.workers)
    report = harness.run_close_set(
        manifest,
        artifacts_dir=args.artifacts,
        gateway=gateway,
        model_name=args.model_name,
        config=config,
    )
    paths = harness.render_report(report, args.out)
    _emit(
        {
            "report": str(paths[0]),
            "failed_cases": report.failed_cases,
            "dimensions": report.models[args.model_name].dimension_scores,
        }
    )
    return 0 if report.failed_cases == 0 else 1


def _cmd_refine(args) -> int:
    gateway = _build_gateway(args)
    spec = openset.DimensionSpec(
        dimension_id=args.dimension,
        definition=args.definition or args.dimension.replace("_", " "),
        scoring_hook=args.scoring_hook,
    )
    if args.generator_cmd:
        generator = openset.CommandGenerator(args.generator_cmd)
    elif args.generator_url:
        generator = openset.HttpGenerator(args.generator_url)
    else:
        raise SystemExit("either --generator-cmd or --generator-url is required")

    extract_cmd = args.extractor_cmd

    def extractor_hook(video_ref: str) -> dict:
        return _extract_for_refine(extract_cmd, video_ref, Path(args.out))

    prompt = Path(args.prompt).read_text().strip()
    trace = openset.refine_iterate(
        openset.OpenSetCase(
            video=args.video, prompt=prompt, source_image=args.image or ""
        ),
        spec,
        generator,
        extractor_hook,
        gateway,
        max_iters=args.max_iters,
        target_score=args.target_score,
        workdir=args.out,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.json"
    trace_path.write_text(json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n")
    best = trace.best
    (out_dir / "best_prompt.txt").write_text(best.prompt + "\n")
    _emit(
        {
            "trace": str(trace_path),
            "best_video": best.video_ref,
            "best_score": best.score,
            "stop_reason": trace.stop_reason,
        }
    )
    return 0


def _extract_for_refine(extract_cmd: str | None, video_ref: str, out_dir: Path) -> dict:
    """Run an extractor command and load what it produced for this video."""
    import shlex
    import subprocess

    if extract_cmd is None:
        raise SystemExit("--extractor-cmd is required for refinement scoring")
    stem = Path(video_ref).stem
    target = out_dir / f"extracted-{stem}"
    target.mkdir(parents=True, exist_ok=True)
    argv = shlex.split(extract_cmd) + ["--video", video_ref, "--out", str(target)]
    completed = subprocess.run(argv, capture_output=True, text=True)
    if completed.returncode != 0:
        raise RuntimeError(
            f"extractor failed ({completed.returncode}): {completed.stderr[:500]}"
        )
    artifacts: dict = {}
    frames_dir = target / "frames"
    if frames_dir.is_dir():
        artifacts["frames"] = sorted(str(p) for p in frames_dir.glob("*.png"))
    for name, loader in (
        ("tracks", lambda p: TrackSet.load(p)),
        ("masks", lambda p: MaskSequence.load(p)),
        ("flow", lambda p: FlowSequence.load(p)),
        ("quality", lambda p: QualitySeries.load(p)),
    ):
        matches = sorted(target.glob(f"*.{name}.abtf"))
        if matches:
            artifacts[name] = loader(matches[0])
    emb = sorted(p for p in target.glob("*.emb.abtf") if not p.name.endswith(".ref.emb.abtf"))
    if emb:
        artifacts["embeddings"] = EmbeddingSet.load(emb[0])
    return artifacts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="animetric",
        description="Character-animation video evaluation metrics and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("siso", help="slow-in/slow-out rubric from a track file")
    p.add_argument("--tracks", required=True)
    p.add_argument("--window", type=int, default=siso.DEFAULT_WINDOW)
    p.add_argument(
        "--siso-interval-frac", type=float, default=siso.DEFAULT_INTERVAL_FRAC
    )
    p.set_defaults(func=_cmd_siso)

    p = sub.add_parser("squash", help="squash-and-stretch score from a mask file")
    p.add_argument("--masks", required=True)
    p.add_argument("--rebound", required=True, choices=["true", "false"])
    p.add_argument("--tau", type=float, default=squash.DEFAULT_TAU)
    p.set_defaults(func=_cmd_squash)

    p = sub.add_parser("dyndeg", help="dynamic-degree classification from a flow file")
    p.add_argument("--flow", required=True)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument(
        "--dynamic-fraction", type=float, default=appeal.DEFAULT_DYNAMIC_FRACTION
    )
    p.set_defaults(func=_cmd_dyndeg)

    p = sub.add_parser("diversity", help="pairwise diversity over five embedding files")
    p.add_argument("--features", nargs=5, required=True, metavar="EMB")
    p.set_defaults(func=_cmd_diversity)

    p = sub.add_parser("novelty", help="novelty of generated vs reference embeddings")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_novelty)

    p = sub.add_parser("camera", help="camera-operation classification from edge tracks")
    p.add_argument("--tracks", required=True)
    p.add_argument("--static-frac", type=float, default=camera.DEFAULT_STATIC_FRAC)
    p.add_argument(
        "--zoom-dominance", type=float, default=camera.DEFAULT_ZOOM_DOMINANCE
    )
    p.set_defaults(func=_cmd_camera)

    p = sub.add_parser("quality", help="mean perceptual quality of a quality series")
    p.add_argument("--quality", required=True)
    p.set_defaults(func=_cmd_quality)

    p = sub.add_parser("run", help="run a close-set benchmark manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-name", default="model")
    p.add_argument("--strict-counts", action="store_true")
    p.add_argument("--gateway", help="gateway config JSON")
    p.add_argument("--stub-gateway", help="scripted stub answers JSON")
    p.add_argument("--vlm-cache", help="judge response cache directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("refine", help="open-set diagnose/refine/regenerate loop")
    p.add_argument("--video", required=True)
    p.add_argument("--prompt", required=True, help="file holding the original prompt")
    p.add_argument("--image", help="source image for regeneration")
    p.add_argument("--dimension", required=True)
    p.add_argument("--definition", help="dimension definition for the judge")
    p.add_argument("--scoring-hook", default="qa", choices=list(harness.SCORER_KINDS))
    p.add_argument("--generator-cmd")
    p.add_argument("--generator-url")
    p.add_argument("--extractor-cmd")
    p.add_argument("--max-iters", type=int, default=openset.DEFAULT_MAX_ITERS)
    p.add_argument("--target-score", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--gateway")
    p.add_argument("--stub-gateway")
    p.add_argument("--vlm-cache")
    p.set_defaults(func=_cmd_refine)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
