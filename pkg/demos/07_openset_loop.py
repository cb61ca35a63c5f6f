"""The open-set loop: diagnose an arbitrary video, refine its prompt,
regenerate, and keep the best result.

Everything external is stubbed here: the judge is scripted, the
"generator" hands back a better fixture, and the extractor hook maps
video names onto checked-in track files. The flow and the trace are the
real thing.
"""

import json
from pathlib import Path

from animetric import (
    DimensionSpec,
    GatewayConfig,
    OpenSetCase,
    StubTransport,
    TrackSet,
    VlmGateway,
    refine_iterate,
)

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

spec = DimensionSpec(
    dimension_id="slow_in_slow_out",
    definition="motion should accelerate gradually, peak mid-action, then decelerate",
    scoring_hook="siso",
)

# The judge: diagnoses two easing failures, then acts as the prompt refiner.
gateway = VlmGateway(
    GatewayConfig(),
    transport=StubTransport(
        rules=[
            (
                "List concrete failures",
                '["Does the motion ease in before peaking?", '
                '"Does the motion ease out at the end?"]',
            ),
            (
                "You improve prompts",
                "the ball eases into motion, peaks mid-path, then glides to a stop",
            ),
        ],
        default='{"answer": "yes"}',
    ),
)


class DemoGenerator:
    """Pretends to regenerate: returns a better-easing fixture video."""

    def __call__(self, image, prompt, out_path):
        print(f"  [generator] regenerating with prompt: {prompt!r}")
        return "video-eased"


def extractor_hook(video_ref):
    stem = {"video-robotic": "siso-02", "video-eased": "siso-01"}[video_ref]
    return {
        "tracks": TrackSet.load(FIXTURES / "artifacts" / f"{stem}.tracks.abtf"),
        "frames": sorted(
            str(p) for p in (FIXTURES / "artifacts" / "qa-01.frames").glob("*.png")
        ),
    }


trace = refine_iterate(
    OpenSetCase(video="video-robotic", prompt="a ball moves across the floor"),
    spec,
    DemoGenerator(),
    extractor_hook,
    gateway,
    max_iters=3,
    target_score=80.0,
)

print("\ntrace:")
for i, it in enumerate(trace.iterations):
    marker = " <- best" if i == trace.best_index else ""
    print(f"  [{i}] score={it.score:5.1f} video={it.video_ref!r}{marker}")
    if it.questions:
        for q in it.questions:
            print(f"       diagnosed: {q}")
print(f"\nstop reason: {trace.stop_reason}")
print(f"best prompt: {trace.best.prompt!r}")
print("\nfull trace as JSON:")
print(json.dumps(trace.to_dict(), indent=2)[:400] + " ...")
