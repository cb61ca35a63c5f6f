import json
import sys
from pathlib import Path

import numpy as np
import pytest

from animetric.artifacts import TrackSet
from animetric.gateway import GatewayConfig, GatewayError, StubTransport, VlmGateway
from animetric.openset import (
    CommandGenerator,
    DimensionSpec,
    Iteration,
    OpenSetCase,
    RefinementTrace,
    diagnose,
    refine_iterate,
    refine_prompt,
)

FIXTURES = Path(__file__).parent / "fixtures"


def gateway(transport):
    return VlmGateway(GatewayConfig(), transport=transport)


def siso_spec():
    return DimensionSpec(
        dimension_id="slow_in_slow_out",
        definition="motion should accelerate gradually, peak, then decelerate",
        scoring_hook="siso",
    )


DIAGNOSIS = '["Does the motion ease in before peaking?", "Does the motion ease out at the end?"]'


def scripted_transport(diagnose_after_first=DIAGNOSIS):
    return StubTransport(
        rules=[
            ("List concrete failures", diagnose_after_first),
            ("You improve prompts", "the ball eases into motion, peaks, then glides to a stop"),
        ],
        default='{"answer": "yes"}',
    )


class StubGenerator:
    """Returns pre-baked video references, counting invocations."""

    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.calls = 0

    def __call__(self, image, prompt, out_path):
        self.calls += 1
        if not self.outputs:
            raise RuntimeError("generator exhausted")
        return self.outputs.pop(0)


def fixture_extractor(video_ref: str) -> dict:
    """Map scripted video names onto checked-in track fixtures."""
    mapping = {
        "video-constant": "siso-02",   # 2 rubric points -> score 40
        "video-triangular": "siso-01",  # 5 rubric points -> score 100
        "video-ramp": "siso-03",       # 3 rubric points -> score 60
    }
    stem = mapping[video_ref]
    frames_dir = FIXTURES / "artifacts" / "qa-01.frames"
    return {
        "tracks": TrackSet.load(FIXTURES / "artifacts" / f"{stem}.tracks.abtf"),
        "frames": sorted(str(p) for p in frames_dir.glob("*.png")),
    }


# --- spec & trace types --------------------------------------------------------

def test_dimension_spec_requires_known_hook():
    with pytest.raises(ValueError, match="not a known scorer kind"):
        DimensionSpec("d", "def", "vibes")


def test_trace_best_index_invariant():
    good = Iteration("p", (), "v", 10.0)
    better = Iteration("p2", ("q",), "v2", 30.0)
    RefinementTrace(iterations=(good, better), best_index=1, stop_reason="max_iters")
    with pytest.raises(ValueError, match="best_index"):
        RefinementTrace(iterations=(good, better), best_index=0, stop_reason="max_iters")


# --- diagnose -------------------------------------------------------------------

def test_diagnose_parses_list(frame_files):
    stub = StubTransport(default='["Does the character crouch before jumping?"]')
    questions = diagnose(frame_files(2), "a frog jumps", siso_spec(), gateway(stub))
    assert questions == ["Does the character crouch before jumping?"]


def test_diagnose_empty_list(frame_files):
    stub = StubTransport(default="[]")
    assert diagnose(frame_files(1), "p", siso_spec(), gateway(stub)) == []


def test_diagnose_malformed_twice_errors(frame_files):
    stub = StubTransport(default="the video looks fine to me")
    with pytest.raises(GatewayError):
        diagnose(frame_files(1), "p", siso_spec(), gateway(stub))


def test_diagnose_caps_at_ten(frame_files):
    stub = StubTransport(default=json.dumps([f"Q{i}?" for i in range(25)]))
    assert len(diagnose(frame_files(1), "p", siso_spec(), gateway(stub))) == 10


# --- refine_prompt ----------------------------------------------------------------

def test_refine_empty_questions_identity():
    gw = gateway(StubTransport(default="SHOULD NOT BE CALLED"))
    assert refine_prompt("original prompt", [], gw) == "original prompt"
    assert gw.transport.calls == 0


def test_refine_appends_constraints():
    stub = StubTransport(default="original prompt, and it crouches before jumping")
    refined = refine_prompt("original prompt", ["Does it crouch?"], gateway(stub))
    assert refined.startswith("original prompt")
    assert "crouches" in refined


def test_refine_empty_prompt_rejected():
    with pytest.raises(ValueError):
        refine_prompt("", ["q"], gateway(StubTransport()))


def test_refine_empty_completion_rejected():
    with pytest.raises(RuntimeError, match="empty prompt"):
        refine_prompt("p", ["q"], gateway(StubTransport(default="   ")))


# --- refine_iterate scenarios ---------------------------------------------------------

def run_loop(generator, max_iters=3, target_score=80.0, transport=None):
    return refine_iterate(
        OpenSetCase(video="video-constant", prompt="a ball moves across the floor"),
        siso_spec(),
        generator,
        fixture_extractor,
        gateway(transport or scripted_transport()),
        max_iters=max_iters,
        target_score=target_score,
    )


def test_improving_fixture_meets_target(tmp_path):
    trace = run_loop(StubGenerator(["video-triangular"]))
    assert trace.stop_reason == "score_improved_target_met"
    assert trace.best_index == 1
    assert [it.score for it in trace.iterations] == [40.0, 100.0]
    assert trace.iterations[1].questions == (
        "Does the motion ease in before peaking?",
        "Does the motion ease out at the end?",
    )


def test_fixed_point_video_stops_no_improvement(tmp_path):
    trace = run_loop(StubGenerator(["video-constant", "video-constant"]))
    assert trace.stop_reason == "no_improvement"
    assert len(trace.iterations) == 2  # original + one refinement
    assert trace.best_index == 0
    assert [it.score for it in trace.iterations] == [40.0, 40.0]


def test_max_iters_one_attempts_exactly_one_refinement(tmp_path):
    generator = StubGenerator(["video-ramp", "video-triangular"])
    trace = run_loop(generator, max_iters=1, target_score=None)
    assert generator.calls == 1
    assert trace.stop_reason == "max_iters"
    assert [it.score for it in trace.iterations] == [40.0, 60.0]


def test_empty_diagnosis_means_zero_generator_calls(tmp_path):
    generator = StubGenerator(["video-triangular"])
    transport = StubTransport(
        rules=[("List concrete failures", "[]")], default='{"answer": "yes"}'
    )
    trace = run_loop(generator, transport=transport, target_score=None)
    assert generator.calls == 0
    assert trace.stop_reason == "no_improvement"
    assert len(trace.iterations) == 1


def test_target_met_at_origin_skips_everything(tmp_path):
    generator = StubGenerator(["video-triangular"])
    trace = run_loop(generator, target_score=30.0)
    assert generator.calls == 0
    assert trace.stop_reason == "score_improved_target_met"


def test_generator_failure_recorded(tmp_path):
    class ExplodingGenerator:
        calls = 0

        def __call__(self, image, prompt, out_path):
            raise OSError("gpu on fire")

    trace = run_loop(ExplodingGenerator())
    assert trace.stop_reason == "no_improvement"
    assert trace.iterations[-1].score is None
    assert "gpu on fire" in trace.iterations[-1].error
    assert trace.best_index == 0


def test_trace_determinism(tmp_path):
    a = run_loop(StubGenerator(["video-triangular"]))
    b = run_loop(StubGenerator(["video-triangular"]))
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(
        b.to_dict(), sort_keys=True
    )


def test_trace_serializes(tmp_path):
    trace = run_loop(StubGenerator(["video-triangular"]))
    doc = trace.to_dict()
    assert doc["stop_reason"] == "score_improved_target_met"
    assert doc["refiner_template"] == "refiner-v1"
    json.dumps(doc)  # JSON-safe


# --- command generator ------------------------------------------------------------------

def test_command_generator_invocation(tmp_path):
    script = tmp_path / "fake_generator.py"
    script.write_text(
        "import argparse, pathlib\n"
        "p = argparse.ArgumentParser()\n"
        "p.add_argument('--image'); p.add_argument('--prompt'); p.add_argument('--out')\n"
        "a = p.parse_args()\n"
        "prompt = pathlib.Path(a.prompt).read_text()\n"
        "pathlib.Path(a.out).write_text('video for: ' + prompt)\n"
    )
    generator = CommandGenerator(f"{sys.executable} {script}")
    out = tmp_path / "candidate.mp4"
    result = generator("img.png", "an easing ball", str(out))
    assert result == str(out)
    assert out.read_text() == "video for: an easing ball"


def test_command_generator_failure(tmp_path):
    generator = CommandGenerator(f"{sys.executable} -c 'import sys; sys.exit(3)'")
    with pytest.raises(RuntimeError, match="generator command failed"):
        generator("img.png", "p", str(tmp_path / "o.mp4"))
