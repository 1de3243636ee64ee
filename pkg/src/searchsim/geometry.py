"""Small geometric helpers: poses, angles, camera frustum tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def wrap_angle(a):
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def yaw_to_dir(yaw):
    """Unit direction in the xy-plane for a yaw angle."""
    return np.array([math.cos(yaw), math.sin(yaw), 0.0])


@dataclass
class Pose:
    """A position plus heading; the minimal agent pose used by map ops."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.yaw = float(self.yaw)


def position_of(pose):
    """Accept a Pose, an AgentState-like object, or a bare point."""
    pos = getattr(pose, "position", pose)
    return np.asarray(pos, dtype=np.float64)


def yaw_of(pose, default=0.0):
    return float(getattr(pose, "yaw", default))


def frustum_mask(points, cam_pos, yaw, fov_h_deg, fov_v_deg, far):
    """Boolean mask of points inside a yaw-aligned camera frustum.

    The frustum is an angular wedge (half field of view per axis, pitch
    fixed to zero) cut at the far distance. Vectorized over points.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return np.zeros(0, dtype=bool)
    rel = points - np.asarray(cam_pos, dtype=np.float64)
    dist = np.sqrt(np.sum(rel * rel, axis=1))
    half_h = math.radians(fov_h_deg) * 0.5
    half_v = math.radians(fov_v_deg) * 0.5
    az = np.arctan2(rel[:, 1], rel[:, 0])
    daz = np.arctan2(np.sin(az - yaw), np.cos(az - yaw))
    horiz = np.hypot(rel[:, 0], rel[:, 1])
    el = np.arctan2(rel[:, 2], horiz)
    return (dist <= far) & (np.abs(daz) <= half_h) & (np.abs(el) <= half_v)


def polyline_length(points):
    """Total length of a polyline given as an (n, 3) array."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 2:
        return 0.0
    deltas = np.diff(points, axis=0)
    return float(np.sum(np.sqrt(np.sum(deltas * deltas, axis=1))))
