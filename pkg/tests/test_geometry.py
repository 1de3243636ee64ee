"""Angle, pose, and frustum helpers."""

import math

import numpy as np
import pytest

from searchsim.geometry import (Pose, frustum_mask, polyline_length,
                                position_of, wrap_angle, yaw_of, yaw_to_dir)


def test_wrap_angle_identity_in_range():
    for a in (-3.0, -1.0, 0.0, 0.5, 3.1):
        assert wrap_angle(a) == pytest.approx(a)


def test_wrap_angle_half_open_interval():
    # (-pi, pi]: +pi stays, -pi flips to +pi
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


def test_wrap_angle_periodicity():
    rng = np.random.default_rng(7)
    for a in rng.uniform(-30, 30, size=200):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi + 1e-12
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_yaw_to_dir_cardinals():
    np.testing.assert_allclose(yaw_to_dir(0.0), (1, 0, 0), atol=1e-12)
    np.testing.assert_allclose(yaw_to_dir(math.pi / 2), (0, 1, 0), atol=1e-12)
    np.testing.assert_allclose(yaw_to_dir(math.pi), (-1, 0, 0), atol=1e-12)


def test_pose_duck_typing():
    p = Pose(position=np.array([1.0, 2.0, 3.0]), yaw=0.5)
    np.testing.assert_array_equal(position_of(p), [1.0, 2.0, 3.0])
    assert yaw_of(p) == 0.5
    # plain tuple with yaw attribute absent -> position only
    np.testing.assert_array_equal(position_of((4.0, 5.0, 6.0)), [4.0, 5.0, 6.0])


def _frustum_oracle(pos, yaw, fov_h, fov_v, far, pts):
    """Scalar reimplementation: distance, azimuth gap, elevation."""
    out = []
    for q in pts:
        d = np.asarray(q, dtype=float) - np.asarray(pos, dtype=float)
        dist = float(np.linalg.norm(d))
        if dist > far:
            out.append(False)
            continue
        az = math.atan2(d[1], d[0])
        gap = abs(wrap_angle(az - yaw))
        el = math.asin(max(-1.0, min(1.0, d[2] / dist))) if dist > 0 else 0.0
        out.append(gap <= math.radians(fov_h) / 2 + 1e-12
                   and abs(el) <= math.radians(fov_v) / 2 + 1e-12)
    return np.array(out, dtype=bool)


def test_frustum_mask_matches_scalar_oracle():
    rng = np.random.default_rng(42)
    pos = np.array([2.0, 3.0, 1.0])
    pts = rng.uniform(-2, 8, size=(500, 3))
    for yaw in (0.0, 1.1, -2.5):
        got = frustum_mask(pts, pos, yaw, 68.0, 51.0, 3.0)
        want = _frustum_oracle(pos, yaw, 68.0, 51.0, 3.0, pts)
        np.testing.assert_array_equal(got, want)


def test_frustum_mask_empty_input():
    got = frustum_mask(np.zeros((0, 3)), np.zeros(3), 0.0, 68.0, 51.0, 3.0)
    assert got.shape == (0,)


def test_frustum_wraparound_yaw():
    # target across the -pi/+pi seam must stay inside
    pts = np.array([[-1.0, -0.05, 0.0]])
    got = frustum_mask(pts, np.zeros(3), math.pi, 68.0, 51.0, 3.0)
    assert got[0]


def test_polyline_length():
    pts = np.array([[0, 0, 0], [3, 4, 0], [3, 4, 2]], dtype=float)
    assert polyline_length(pts) == pytest.approx(7.0)
    assert polyline_length(pts[:1]) == 0.0
