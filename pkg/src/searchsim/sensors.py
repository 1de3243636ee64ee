"""Ground-truth world model and simulated range/camera sensing.

The world is a dense boolean occupancy volume built from a scenario's
solid boxes, plus target points. Sensors run against this truth: the
lidar casts a fixed deterministic direction lattice and reports hit
ranges, the camera reports which truth voxels it can observe. The
mapping side (grid.py) then folds those observations into the agent's
own map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import InvalidPoseError, ScenarioError
from .geometry import position_of

__all__ = [
    "GroundTruthWorld", "RangeScan",
    "lidar_directions", "simulate_lidar", "simulate_camera",
    "compute_reachable_mask",
]


@dataclass
class RangeScan:
    """One lidar sweep: ray origin, endpoints, hit flags, struck cells.

    For a hit ray the endpoint is the returned surface point and
    hit_cells holds the struck voxel's indices; for a miss the endpoint
    is the point at maximum range along the ray and hit_cells is -1.
    """

    origin: np.ndarray
    ends: np.ndarray
    hits: np.ndarray
    hit_cells: np.ndarray

    def __len__(self):
        return len(self.ends)


class GroundTruthWorld:
    """Immutable truth volume the simulator senses against.

    start is the scenario's (x, y, z, yaw) launch pose, carried along so
    a world object is a self-contained run input.
    """

    def __init__(self, origin, resolution, dims, solid, targets, start=None):
        self.origin = np.asarray(origin, dtype=np.float64)
        self.resolution = float(resolution)
        self.dims = tuple(int(d) for d in dims)
        self.solid = np.ascontiguousarray(solid, dtype=np.uint8)
        self.start = None if start is None else tuple(float(v) for v in start)
        if self.solid.shape != self.dims:
            raise ScenarioError("solid volume shape does not match dims")
        self.targets = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        for t in self.targets:
            idx = self._index_of(t)
            if idx is None:
                raise ScenarioError(f"target {tuple(t)} outside world bounds")
            if not self.solid[idx]:
                raise ScenarioError(f"target {tuple(t)} not on solid geometry")

    def _index_of(self, point):
        rel = (np.asarray(point, dtype=np.float64) - self.origin) / self.resolution
        idx = np.floor(rel).astype(np.int64)
        for a in range(3):
            if not 0 <= idx[a] < self.dims[a]:
                return None
        return tuple(int(c) for c in idx)

    def is_solid_at(self, point):
        idx = self._index_of(point)
        if idx is None:
            return False
        return bool(self.solid[idx])

    def contains(self, point):
        return self._index_of(point) is not None


def lidar_directions(az_step_deg, el_step_deg, el_min_deg=-90.0, el_max_deg=90.0):
    """Unit direction lattice for the spinning range sensor.

    Azimuth covers [0, 360) at az_step_deg; elevation covers
    [el_min, el_max] inclusive at el_step_deg. The lattice is fixed per
    configuration, so scans from the same pose are identical.
    """
    if az_step_deg <= 0 or el_step_deg <= 0:
        raise ValueError("angular steps must be positive")
    azs = np.arange(0.0, 360.0, az_step_deg)
    els = np.arange(el_min_deg, el_max_deg + 1e-9, el_step_deg)
    az_r = np.deg2rad(azs)
    el_r = np.deg2rad(els)
    ca, sa = np.cos(az_r), np.sin(az_r)
    ce, se = np.cos(el_r), np.sin(el_r)
    dirs = np.empty((len(els) * len(azs), 3), dtype=np.float64)
    n = 0
    for e in range(len(els)):
        dirs[n:n + len(azs), 0] = ce[e] * ca
        dirs[n:n + len(azs), 1] = ce[e] * sa
        dirs[n:n + len(azs), 2] = se[e]
        n += len(azs)
    # Collapse the poles: at |elevation| = 90 every azimuth is the same ray.
    keep = np.ones(len(dirs), dtype=bool)
    for e in range(len(els)):
        if abs(abs(els[e]) - 90.0) < 1e-9:
            keep[e * len(azs) + 1:(e + 1) * len(azs)] = False
    return np.ascontiguousarray(dirs[keep])


def simulate_lidar(world, pose, dirs, max_range):
    """Cast the direction lattice from the pose against the truth volume.

    Returns a RangeScan. Hit endpoints land on the hit voxel's center;
    misses are clipped to max_range (and to the world box, so endpoints
    always stay inside bounds).
    """
    pos = position_of(pose)
    if not world.contains(pos):
        raise InvalidPoseError(f"sensor origin {tuple(pos)} outside world")
    if world.is_solid_at(pos):
        raise InvalidPoseError(f"sensor origin {tuple(pos)} inside solid")
    t, hit, cells = _kernels.lidar_sweep(
        world.solid, pos, np.ascontiguousarray(dirs, dtype=np.float64),
        float(max_range), world.origin, world.resolution)
    ends = pos[None, :] + t[:, None] * dirs
    return RangeScan(origin=pos, ends=ends, hits=hit, hit_cells=cells)


def simulate_camera(world, pose, cfg):
    """Truth voxel centers the camera can see from the pose.

    Mirrors the map-side camera model (frustum + occlusion against the
    truth volume, far plane = lidar_range); exists for tests that need
    an oracle independent of the agent's map.
    """
    from .geometry import frustum_mask, yaw_of

    pos = position_of(pose)
    occ = np.argwhere(world.solid.astype(bool))
    if len(occ) == 0:
        return np.zeros((0, 3), dtype=np.float64)
    centers = world.origin + (occ + 0.5) * world.resolution
    mask = frustum_mask(centers, pos, yaw_of(pose),
                        cfg.camera_fov[0], cfg.camera_fov[1], cfg.lidar_range)
    if not mask.any():
        return np.zeros((0, 3), dtype=np.float64)
    cand = np.ascontiguousarray(centers[mask])
    vis = _kernels.rays_visible(world.solid, pos, cand,
                                world.origin, world.resolution).astype(bool)
    return cand[vis]


def compute_reachable_mask(world, start):
    """Truth voxels involved in a complete search from the start pose.

    Free voxels 6-connected to the start's free component are reachable
    space; solid voxels face-adjacent to that space are the inspectable
    surface. Everything else (sealed interior air, buried solid) can
    never be observed and is exempt from completion checks.
    """
    free = ~world.solid.astype(bool)
    start_idx = world._index_of(position_of(start))
    if start_idx is None:
        raise InvalidPoseError("start pose outside world bounds")
    if not free[start_idx]:
        raise InvalidPoseError("start pose inside solid geometry")
    labels, _ = ndimage.label(free, structure=_six_connectivity())
    component = labels == labels[start_idx]
    surface = world.solid.astype(bool) & ndimage.binary_dilation(
        component, structure=_six_connectivity())
    return component | surface


def _six_connectivity():
    s = np.zeros((3, 3, 3), dtype=bool)
    s[1, 1, 1] = True
    s[0, 1, 1] = s[2, 1, 1] = True
    s[1, 0, 1] = s[1, 2, 1] = True
    s[1, 1, 0] = s[1, 1, 2] = True
    return s
