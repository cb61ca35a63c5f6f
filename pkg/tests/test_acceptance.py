"""Acceptance suite: one test per exit criterion, at its stated tolerance.

The terminal summary (tests/conftest.py) prints one PASS/FAIL line per
criterion. Expected values come from independent oracles computed inside
each test, never from the code paths under test.
"""

import itertools
import json
import math
import shutil
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from animetric.appeal import dynamic_degree, motion_threshold, pair_motion_score
from animetric.artifacts import FlowSequence, MaskSequence, TrackSet
from animetric.camera import classify_camera
from animetric.cli import main as cli_main
from animetric.gateway import GatewayConfig, StubTransport, VlmGateway
from animetric.harness import load_manifest, render_report, run_close_set
from animetric.openset import OpenSetCase, refine_iterate
from animetric.qa import score_qa
from animetric.siso import SpeedCurve, score_siso
from animetric.squash import anisotropy_series, squash_stretch_score
from animetric.stats import cohen_kappa, spearman_rho, win_rate
from animetric.tensorfile import (
    MAGIC,
    BadMagicError,
    ShapeError,
    TensorHeader,
    TruncatedFileError,
    UnknownDtypeError,
    read_tensor_file,
    write_tensor_file,
)

import test_camera as camera_helpers
import test_openset as openset_helpers
import test_siso as siso_helpers
import test_stats as stats_helpers

FIXTURES = Path(__file__).parent / "fixtures"


# =====================================================================
# P1 - squash-and-stretch analytic oracle
# =====================================================================

def test_p1_squash_stretch_analytic_oracle():
    start = time.monotonic()
    size, frames, a0, b = 256, 64, 70.0, 40.0
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    center = (size - 1) / 2
    stack = []
    a_values = []
    for t in range(frames):
        a = a0 * (1 + 0.3 * math.sin(2 * math.pi * t / frames))
        a_values.append(a)
        stack.append(
            ((((xx - center) / a) ** 2 + ((yy - center) / b) ** 2) <= 1.0).astype(
                np.uint8
            )
        )
    masks = MaskSequence(data=np.stack(stack))
    a_values = np.array(a_values)

    # Per-frame elongation vs the analytic log axis ratio, within 2%.
    u = anisotropy_series(masks)
    expected_u = np.log(a_values / b)
    rel_err = np.abs(u - expected_u) / np.abs(expected_u)
    assert rel_err.max() < 0.02

    # Area and deformation scores vs closed-form evaluation, within 2%.
    tau = 0.2
    areas_cf = math.pi * a_values * b
    rates_cf = np.abs(np.diff(areas_cf)) / (areas_cf[:-1] + 1e-6)
    area_cf = 100.0 * (1.0 - min(1.0, rates_cf.mean()))
    deform_cf = 100.0 * min(1.0, np.abs(np.diff(expected_u)).mean() / tau)

    result = squash_stretch_score(masks, rebound=True, tau=tau)
    assert abs(result.area_score - area_cf) / area_cf < 0.02
    assert abs(result.deformation_score - deform_cf) / deform_cf < 0.02

    # Rebound gating is exact arithmetic.
    assert result.combined_score == 0.7 * result.area_score + 0.3 * result.deformation_score
    gated = squash_stretch_score(masks, rebound=False, tau=tau)
    assert gated.combined_score == 0.0

    assert time.monotonic() - start < 2.0


# =====================================================================
# P2 - easing rubric oracle and properties
# =====================================================================

RUBRIC_SUITE = [
    ("triangular", siso_helpers.triangular_curve(), 100, 5),
    ("constant", np.full(99, 0.5), 100, 2),
    ("ramp-up-only", np.linspace(0, 1, 99), 100, 3),
    (
        "plateau",
        np.concatenate([np.linspace(0, 1, 31)[1:], np.ones(39), np.linspace(1, 0, 31)[1:]]),
        100,
        5,
    ),
    (
        "noisy-triangular",
        np.clip(
            siso_helpers.triangular_curve()
            + np.random.default_rng(7).normal(0, 0.02, 98),
            0,
            None,
        ),
        100,
        5,
    ),
    ("impulse", (lambda v: (v.__setitem__(149, 1.0), v)[1])(np.zeros(299)), 300, 0),
]


def test_p2_siso_rubric_oracle_suite():
    assert len(RUBRIC_SUITE) >= 6
    for name, values, video_frames, expected_points in RUBRIC_SUITE:
        verdict = score_siso(SpeedCurve(values=values), video_frames)
        oracle = siso_helpers.oracle_verdict(values, video_frames)
        assert verdict.points == oracle["points"] == expected_points, name
        for key in ("ratio_ok", "rise_ok", "fall_ok", "accel_phase_ok", "decel_phase_ok"):
            assert getattr(verdict, key) == oracle[key], f"{name}:{key}"


def test_p2_siso_properties_on_random_curves():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        values = siso_helpers.random_curve(rng)
        video_frames = int(rng.integers(60, 240))
        base = score_siso(SpeedCurve(values=values), video_frames)

        scale = float(rng.uniform(0.01, 800.0))
        scaled = score_siso(SpeedCurve(values=scale * values), video_frames)
        assert scaled.to_dict() == base.to_dict()

        rev = score_siso(SpeedCurve(values=values[::-1].copy()), video_frames)
        assert rev.ratio_ok == base.ratio_ok
        assert (rev.rise_ok, rev.accel_phase_ok) == (base.fall_ok, base.decel_phase_ok)
        assert (rev.fall_ok, rev.decel_phase_ok) == (base.rise_ok, base.accel_phase_ok)
        assert rev.points == base.points


# =====================================================================
# P3 - camera classification
# =====================================================================

def test_p3_camera_seven_classes():
    correct = 0
    for expected, vectors in camera_helpers.SYNTHETIC_CASES.items():
        verdict = classify_camera(camera_helpers.edge_tracks(*vectors))
        correct += verdict.predicted == expected
    assert correct == 7


def test_p3_camera_properties_on_random_fields():
    rng = np.random.default_rng(99)
    for _ in range(500):
        vectors = [rng.uniform(-25, 25, size=2) for _ in range(4)]
        tracks = camera_helpers.edge_tracks(*vectors)
        base = classify_camera(tracks).predicted

        mirrored_x = classify_camera(camera_helpers.mirror_x(tracks)).predicted
        assert mirrored_x == camera_helpers.MIRROR_X_MAP[base]
        mirrored_y = classify_camera(camera_helpers.mirror_y(tracks)).predicted
        assert mirrored_y == camera_helpers.MIRROR_Y_MAP[base]

        # Divergence is exactly invariant to a uniform displacement field.
        shift = rng.uniform(-40, 40, size=2)
        shifted = camera_helpers.edge_tracks(*[np.asarray(v) + shift for v in vectors])
        def div(t):
            from animetric.camera import edge_displacements
            e = edge_displacements(t)
            return (e["edge-right"][0] - e["edge-left"][0]) + (
                e["edge-bottom"][1] - e["edge-top"][1]
            )
        assert div(shifted) == pytest.approx(div(tracks), abs=1e-3)

        if base != "static":
            grown = camera_helpers.edge_tracks(*[np.asarray(v) * 5 for v in vectors])
            assert classify_camera(grown).predicted != "static"

        # Pure radial fields classify as zoom regardless of magnitude.
        m = float(rng.uniform(2, 30))
        zoom = camera_helpers.edge_tracks((0, -m), (0, m), (-m, 0), (m, 0))
        assert classify_camera(zoom).predicted == "zoom_in"


# =====================================================================
# P4 - dynamic degree thresholds
# =====================================================================

def test_p4_dynamic_degree_thresholds():
    for h, w in [(256, 256), (480, 832), (720, 1280)]:
        assert motion_threshold(h, w) == 6.0 * min(h, w) / 256.0

    # Uniform flows at half and double the threshold flip the pair flag.
    for h, w in [(256, 256), (480, 832)]:
        threshold = motion_threshold(h, w)
        for factor, moving in [(0.5, False), (2.0, True)]:
            field = np.zeros((1, 32, 32, 2), dtype=np.float32)
            field[..., 0] = factor * threshold
            result = dynamic_degree(FlowSequence(data=field), h, w)
            assert bool(result.moving_flags[0]) is moving
            assert result.per_pair_scores[0] == pytest.approx(factor * threshold)

    # Video-level rule flips exactly at a moving fraction of 0.25.
    def fraction_case(moving_pairs, total):
        loud = np.zeros((total, 32, 32, 2), dtype=np.float32)
        loud[:moving_pairs, ..., 0] = 12.0
        return dynamic_degree(FlowSequence(data=loud), 256, 256)

    assert fraction_case(1, 4).is_dynamic          # exactly 0.25
    assert not fraction_case(2, 10).is_dynamic     # 0.20
    assert fraction_case(3, 10).is_dynamic         # 0.30


# =====================================================================
# P5 - QA aggregation exactness
# =====================================================================

def test_p5_score_qa_exhaustive():
    for k in range(1, 11):
        for bits in itertools.product((0, 1), repeat=k):
            answers = ["yes" if bit else "no" for bit in bits]
            expected = float(Fraction(100 * sum(bits), k))
            got = score_qa(answers)
            assert abs(got - expected) < 1e-9

            # Permutation invariance: any permutation shares the multiset.
            assert score_qa(sorted(answers)) == got
            assert score_qa(sorted(answers, reverse=True)) == got

            # Single-flip monotonicity: each no->yes adds exactly 100/k.
            for i, bit in enumerate(bits):
                if bit == 0:
                    flipped = list(answers)
                    flipped[i] = "yes"
                    assert abs((score_qa(flipped) - got) - 100.0 / k) < 1e-9


def test_p5_unparseable_scores_as_no():
    assert score_qa(["unparseable"] * 4) == 0.0
    assert score_qa(["unparseable", "yes"]) == 50.0


# =====================================================================
# P6 - statistics oracles
# =====================================================================

def test_p6_spearman_and_kappa_against_brute_force():
    rng = np.random.default_rng(606)
    checked_rho = checked_kappa = 0
    while checked_rho < 1000 or checked_kappa < 1000:
        n = int(rng.integers(2, 11))
        x = rng.integers(0, 6, size=n).astype(float)
        y = rng.integers(0, 6, size=n).astype(float)
        expected = stats_helpers.spearman_oracle(list(x), list(y))
        got = spearman_rho(x, y)
        if math.isnan(expected):
            assert math.isnan(got)
        else:
            assert abs(got - expected) < 1e-9
        checked_rho += 1

        labels_n = int(rng.integers(1, 11))
        a = list(rng.choice(list("ABC"), size=labels_n))
        b = list(rng.choice(list("ABC"), size=labels_n))
        expected_k = stats_helpers.kappa_oracle(a, b)
        got_k = cohen_kappa(a, b)
        if math.isnan(expected_k):
            assert math.isnan(got_k)
        else:
            assert abs(got_k - expected_k) < 1e-9
        checked_kappa += 1


def test_p6_win_rate_exact():
    assert win_rate(["win", "loss", "tie"]) == 0.5


# =====================================================================
# P7 - deterministic end-to-end fixture
# =====================================================================

def _run_fixture(out_dir, artifacts_dir, cache_dir):
    manifest = load_manifest(FIXTURES / "mini-manifest.json")
    gateway = VlmGateway(
        GatewayConfig(),
        cache_dir=cache_dir,
        transport=StubTransport.from_file(FIXTURES / "stub-answers.json"),
    )
    report = run_close_set(
        manifest, artifacts_dir, gateway, model_name="fixture-model"
    )
    render_report(report, out_dir)
    return report


def test_p7_deterministic_end_to_end(tmp_path):
    cache = tmp_path / "cache"
    report_1 = _run_fixture(tmp_path / "out1", FIXTURES / "artifacts", cache)
    report_2 = _run_fixture(tmp_path / "out2", FIXTURES / "artifacts", cache)
    assert report_1.failed_cases == report_2.failed_cases == 0

    bytes_1 = (tmp_path / "out1" / "report.json").read_bytes()
    bytes_2 = (tmp_path / "out2" / "report.json").read_bytes()
    assert bytes_1 == bytes_2

    # Table-2-shaped: one row per dimension for the model.
    doc = json.loads(bytes_1)
    dims = doc["models"]["fixture-model"]["dimensions"]
    assert set(dims) == {"slow_in_slow_out", "squash_stretch", "anticipation"}
    assert all(isinstance(v, float) for v in dims.values())


def test_p7_corrupted_artifact_fails_exactly_one_case(tmp_path, capsys):
    artifacts = tmp_path / "artifacts"
    shutil.copytree(FIXTURES / "artifacts", artifacts)
    target = artifacts / "squash-03.masks.abtf"
    blob = bytearray(target.read_bytes())
    blob[0:4] = b"XXXX"
    target.write_bytes(bytes(blob))

    exit_code = cli_main(
        [
            "run",
            "--manifest", str(FIXTURES / "mini-manifest.json"),
            "--artifacts", str(artifacts),
            "--out", str(tmp_path / "out"),
            "--stub-gateway", str(FIXTURES / "stub-answers.json"),
        ]
    )
    doc = json.loads(capsys.readouterr().out)
    assert exit_code != 0
    assert doc["failed_cases"] == 1
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    failures = [
        c for c in report["models"]["model"]["cases"] if c["error"] is not None
    ]
    assert [c["case_id"] for c in failures] == ["squash-03"]


# =====================================================================
# P8 - tensor file round-trips and malformed classes
# =====================================================================

def test_p8_round_trip_500_random(tmp_path):
    rng = np.random.default_rng(808)
    path = tmp_path / "t.abtf"
    for _ in range(500):
        dtype = rng.choice(["f32", "u8"])
        ndims = int(rng.integers(1, 5))
        shape = tuple(int(rng.integers(1, 6)) for _ in range(ndims))
        size = int(np.prod(shape)) * (4 if dtype == "f32" else 1)
        payload = rng.bytes(size)
        header = TensorHeader(dtype=str(dtype), shape=shape)
        write_tensor_file(path, header, payload)
        got_header, got_payload = read_tensor_file(path)
        assert got_header == header and got_payload == payload


def test_p8_malformed_classes(tmp_path):
    path = tmp_path / "t.abtf"
    write_tensor_file(path, TensorHeader(dtype="f32", shape=(2, 3)), bytes(24))
    pristine = path.read_bytes()

    corrupt = bytearray(pristine)
    corrupt[:4] = b"NOPE"
    path.write_bytes(bytes(corrupt))
    with pytest.raises(BadMagicError):
        read_tensor_file(path)

    path.write_bytes(pristine[:-3])
    with pytest.raises(TruncatedFileError):
        read_tensor_file(path)

    import struct as struct_mod

    bad_dtype = b'{"byte_order":"little","dtype":"c64","layout":"row-major","shape":[2]}'
    path.write_bytes(MAGIC + struct_mod.pack("<I", len(bad_dtype)) + bad_dtype + bytes(16))
    with pytest.raises(UnknownDtypeError):
        read_tensor_file(path)

    too_many = b'{"byte_order":"little","dtype":"u8","layout":"row-major","shape":[1,1,1,1,1]}'
    path.write_bytes(MAGIC + struct_mod.pack("<I", len(too_many)) + too_many + bytes(1))
    with pytest.raises(ShapeError):
        read_tensor_file(path)

    huge = b'{"byte_order":"little","dtype":"f32","layout":"row-major","shape":[2000000,2000000,2000]}'
    path.write_bytes(MAGIC + struct_mod.pack("<I", len(huge)) + huge)
    with pytest.raises(ShapeError):
        read_tensor_file(path)


# =====================================================================
# P9 - open-set loop scripted scenarios
# =====================================================================

def test_p9_improving_fixture_meets_target():
    trace = openset_helpers.run_loop(
        openset_helpers.StubGenerator(["video-triangular"])
    )
    assert trace.stop_reason == "score_improved_target_met"
    assert trace.best_index == 1
    assert [it.score for it in trace.iterations] == [40.0, 100.0]


def test_p9_fixed_point_video():
    trace = openset_helpers.run_loop(
        openset_helpers.StubGenerator(["video-constant", "video-constant"])
    )
    assert trace.stop_reason == "no_improvement"
    assert len(trace.iterations) == 2
    assert [it.score for it in trace.iterations] == [40.0, 40.0]


def test_p9_max_iters_one():
    generator = openset_helpers.StubGenerator(["video-ramp", "video-triangular"])
    trace = openset_helpers.run_loop(generator, max_iters=1, target_score=None)
    assert generator.calls == 1
    assert trace.stop_reason == "max_iters"
    assert len(trace.iterations) == 2
