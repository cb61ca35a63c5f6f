import math

import numpy as np
import pytest

from animetric.artifacts import MaskSequence
from animetric.squash import (
    anisotropy_series,
    area_change_rates,
    area_preservation,
    area_series,
    deformation_magnitude,
    squash_stretch_score,
)


def disc_mask(radius, size=128, cx=None, cy=None):
    cx = (size - 1) / 2 if cx is None else cx
    cy = (size - 1) / 2 if cy is None else cy
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    return (((xx - cx) ** 2 + (yy - cy) ** 2) <= radius**2).astype(np.uint8)


def ellipse_mask(a, b, size=256, angle=0.0):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    cx = cy = (size - 1) / 2
    x = (xx - cx) * math.cos(angle) + (yy - cy) * math.sin(angle)
    y = -(xx - cx) * math.sin(angle) + (yy - cy) * math.cos(angle)
    return (((x / a) ** 2 + (y / b) ** 2) <= 1.0).astype(np.uint8)


def seq(*frames):
    return MaskSequence(data=np.stack(frames))


# --- area ---------------------------------------------------------------

def test_area_series_counts_pixels():
    ones = np.ones((3, 4, 4), dtype=np.uint8)
    np.testing.assert_array_equal(area_series(MaskSequence(data=ones)), [16, 16, 16])
    zeros = np.zeros((3, 4, 4), dtype=np.uint8)
    np.testing.assert_array_equal(area_series(MaskSequence(data=zeros)), [0, 0, 0])


def test_area_series_plus_sign():
    frame = np.zeros((5, 5), dtype=np.uint8)
    frame[2, 1:4] = 1
    frame[1:4, 2] = 1
    assert area_series(seq(frame, frame))[0] == 5


def test_area_preservation_constant():
    assert area_preservation(np.array([80.0, 80.0, 80.0])) == 100.0


def test_area_preservation_doubling():
    # |200-100|/(100+eps) ~ 1.0 so the score collapses to ~0
    assert area_preservation(np.array([100.0, 200.0])) == pytest.approx(0.0, abs=1e-3)


def test_area_preservation_hand_value():
    # r = (10/100.000001 + 10/110.000001) / 2; S = 100 (1 - r)
    rates = area_change_rates(np.array([100.0, 110.0, 100.0]))
    expected_r = (10 / (100 + 1e-6) + 10 / (110 + 1e-6)) / 2
    assert rates.mean() == pytest.approx(expected_r, abs=1e-12)
    assert area_preservation(np.array([100.0, 110.0, 100.0])) == pytest.approx(
        90.45, abs=1e-2
    )


# --- anisotropy -----------------------------------------------------------

def test_disc_is_isotropic():
    u = anisotropy_series(seq(disc_mask(30), disc_mask(30)))
    assert np.abs(u).max() <= 0.02


def test_ellipse_matches_axis_ratio():
    # Semi-axes 2:1 give an eigenvalue ratio of 4, so u = ln 2.
    masks = seq(ellipse_mask(60, 30), ellipse_mask(60, 30))
    u = anisotropy_series(masks)
    assert u[0] == pytest.approx(math.log(2), rel=0.02)


def test_single_row_strongly_anisotropic():
    frame = np.zeros((32, 64), dtype=np.uint8)
    frame[16, 2:62] = 1
    u = anisotropy_series(seq(frame, frame))
    assert u[0] > 2.0


def test_degenerate_frames_zero():
    empty = np.zeros((8, 8), dtype=np.uint8)
    single = np.zeros((8, 8), dtype=np.uint8)
    single[4, 4] = 1
    u = anisotropy_series(seq(empty, single))
    np.testing.assert_array_equal(u, [0.0, 0.0])
    result = squash_stretch_score(seq(empty, single), rebound=True)
    assert result.degenerate_frames == (0, 1)


# --- deformation -----------------------------------------------------------

def test_deformation_constant_zero():
    assert deformation_magnitude(np.array([0.4, 0.4, 0.4])) == 0.0


def test_deformation_saturates():
    u = np.array([0.0, math.log(2), 0.0, math.log(2)])
    assert deformation_magnitude(u, tau=0.2) == 100.0


def test_deformation_linear_region():
    assert deformation_magnitude(np.array([0.0, 0.1]), tau=0.2) == pytest.approx(50.0)


def test_deformation_requires_positive_tau():
    with pytest.raises(ValueError):
        deformation_magnitude(np.array([0.0, 0.1]), tau=0.0)


# --- combined score ----------------------------------------------------------

def test_no_rebound_scores_zero_but_reports_audit():
    masks = seq(disc_mask(20), disc_mask(20), disc_mask(20))
    result = squash_stretch_score(masks, rebound=False)
    assert result.combined_score == 0.0
    assert result.area_score == pytest.approx(100.0)
    assert result.deformation_score == pytest.approx(0.0, abs=0.5)


def test_rebound_constant_disc():
    masks = seq(disc_mask(25), disc_mask(25), disc_mask(25))
    result = squash_stretch_score(masks, rebound=True)
    assert result.area_score == 100.0
    assert result.deformation_score == 0.0
    assert result.combined_score == pytest.approx(70.0)


def test_weighted_sum_hand_value():
    # Area series 100 -> 110 -> 100 with violent elongation changes:
    # area score 100(1 - (0.1 + 10/110)/2) = 90.4545 and deformation
    # saturating at 100 combine to 0.7*90.4545 + 0.3*100 = 93.318.
    block = np.zeros((16, 128), dtype=np.uint8)
    block[3:13, 10:20] = 1  # 10x10 = 100 px
    row = np.zeros((16, 128), dtype=np.uint8)
    row[8, 9:119] = 1  # 1x110 = 110 px
    result = squash_stretch_score(seq(block, row, block), rebound=True, tau=0.2)
    assert result.area_score == pytest.approx(90.4545, abs=0.001)
    assert result.deformation_score == 100.0
    assert result.combined_score == pytest.approx(93.318, abs=0.001)
    assert result.combined_score == 0.7 * result.area_score + 0.3 * result.deformation_score


# --- properties ---------------------------------------------------------------

def test_translation_invariance_exact():
    frame = ellipse_mask(40, 20, size=192)
    shifted = np.roll(np.roll(frame, 13, axis=0), -21, axis=1)
    u = anisotropy_series(seq(frame, shifted))
    assert u[0] == pytest.approx(u[1], abs=1e-9)


def test_rotation_90_exact_and_arbitrary_within_tolerance():
    frame = ellipse_mask(50, 25, size=192)
    transposed = frame.T.copy()
    u = anisotropy_series(seq(frame, frame))[0]
    u_t = anisotropy_series(seq(transposed, transposed))[0]
    assert u_t == pytest.approx(u, abs=1e-9)
    rotated = ellipse_mask(50, 25, size=192, angle=0.6)
    u_r = anisotropy_series(seq(rotated, rotated))[0]
    assert u_r == pytest.approx(u, abs=0.03)


def test_uniform_scaling_invariance():
    small = ellipse_mask(30, 15, size=192)
    large = ellipse_mask(60, 30, size=192)
    u_small = anisotropy_series(seq(small, small))[0]
    u_large = anisotropy_series(seq(large, large))[0]
    assert u_small == pytest.approx(u_large, abs=0.02)


def test_scores_bounded_on_random_masks():
    rng = np.random.default_rng(5)
    for _ in range(25):
        t = int(rng.integers(2, 6))
        data = (rng.random((t, 24, 24)) > rng.uniform(0.2, 0.95)).astype(np.uint8)
        result = squash_stretch_score(MaskSequence(data=data), rebound=bool(rng.integers(2)))
        assert 0.0 <= result.area_score <= 100.0
        assert 0.0 <= result.deformation_score <= 100.0
        assert 0.0 <= result.combined_score <= 100.0


def test_temporal_reversal():
    # Deformation is exactly reversal-invariant (plain |du| terms). The
    # area term is only first-order invariant: its rate divides by the
    # PREVIOUS frame's area, which reversal swaps.
    rng = np.random.default_rng(6)
    data = (rng.random((5, 32, 32)) > 0.6).astype(np.uint8)
    fwd = squash_stretch_score(MaskSequence(data=data), rebound=True)
    rev = squash_stretch_score(MaskSequence(data=data[::-1].copy()), rebound=True)
    assert fwd.deformation_score == pytest.approx(rev.deformation_score, abs=1e-6)

    discs = seq(*(disc_mask(30 + t) for t in range(6)))
    fwd = squash_stretch_score(discs, rebound=True)
    rev = squash_stretch_score(
        MaskSequence(data=discs.data[::-1].copy()), rebound=True
    )
    assert fwd.area_score == pytest.approx(rev.area_score, abs=0.5)
