"""Volumetric environment map with inspection bookkeeping.

The grid tracks three things per voxel: a ternary knowledge state
(Unknown / Free / Occupied), the closest camera observation distance for
occupied voxels, and a target flag. Occupied voxels whose closest
observation distance exceeds the configured d_max form the uninspected
set, the quantity the whole search pipeline works to empty.

State transitions are one-way (Unknown -> Free, Unknown -> Occupied):
sensing is noise-free, so a single observation is definitive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FREE, OCCUPIED, UNKNOWN
from .errors import GridBoundsError
from .geometry import frustum_mask, position_of, yaw_of

__all__ = [
    "UNKNOWN", "FREE", "OCCUPIED",
    "MapConfig", "Voxel", "VoxelGrid",
    "raycast", "integrate_range_scan", "integrate_camera_frame",
    "detect_targets", "uninspected_set", "is_search_complete",
    "save_snapshot", "load_snapshot", "ascii_slice",
]


@dataclass
class MapConfig:
    """Sensing-related map parameters.

    d_max: maximum camera observation distance for inspection (m).
    lidar_range: range sensor radius (m); must exceed d_max so geometry
        is discovered before it needs inspecting.
    camera_fov: (horizontal, vertical) full field of view in degrees.
    agent_height_band: (low, high) z-range the agent may occupy (m).
    """

    d_max: float = 3.0
    lidar_range: float = 8.0
    camera_fov: tuple = (68.0, 51.0)
    agent_height_band: tuple = (0.5, 1.5)

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.lidar_range <= self.d_max:
            raise ValueError("lidar_range must exceed d_max")


@dataclass
class Voxel:
    """Read-only view of one voxel's fields, for inspection and tests."""

    state: int
    closest_obs: float
    is_target: bool


class VoxelGrid:
    """Dense axis-aligned voxel grid over a bounded box.

    Voxel (i, j, k) spans the half-open world cube
    [origin + index*res, origin + (index+1)*res) per axis.
    """

    def __init__(self, origin, resolution, dims):
        self.origin = np.asarray(origin, dtype=np.float64)
        self.resolution = float(resolution)
        self.dims = tuple(int(d) for d in dims)
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError("dims must be three counts >= 1")
        self.state = np.zeros(self.dims, dtype=np.uint8)
        self.closest_obs = np.full(self.dims, np.inf, dtype=np.float32)
        self.is_target = np.zeros(self.dims, dtype=bool)

    # -- geometry ---------------------------------------------------------

    def size(self):
        return np.array(self.dims, dtype=np.float64) * self.resolution

    def contains(self, point):
        p = np.asarray(point, dtype=np.float64)
        rel = p - self.origin
        sz = self.size()
        return bool(np.all(rel >= 0.0) and np.all(rel < sz))

    def world_to_index(self, point):
        p = np.asarray(point, dtype=np.float64)
        if not self.contains(p):
            raise GridBoundsError(f"point {tuple(p)} outside grid bounds")
        idx = np.floor((p - self.origin) / self.resolution).astype(np.int64)
        # Guard the top edge: contains() uses half-open bounds so floor
        # can only hit dims-1 here, but clamp against float dust anyway.
        return tuple(int(min(idx[a], self.dims[a] - 1)) for a in range(3))

    def index_to_center(self, index):
        idx = np.asarray(index, dtype=np.float64)
        return self.origin + (idx + 0.5) * self.resolution

    def in_bounds_index(self, index):
        i, j, k = index
        return 0 <= i < self.dims[0] and 0 <= j < self.dims[1] and 0 <= k < self.dims[2]

    def voxel(self, index):
        if not self.in_bounds_index(index):
            raise GridBoundsError(f"voxel index {tuple(index)} outside grid")
        i, j, k = index
        return Voxel(int(self.state[i, j, k]),
                     float(self.closest_obs[i, j, k]),
                     bool(self.is_target[i, j, k]))

    # -- derived masks ----------------------------------------------------

    def occupancy_mask(self):
        """uint8 mask of occupied voxels (the ray-blocking set)."""
        return (self.state == OCCUPIED).view(np.uint8)

    def occupied_indices(self):
        return np.argwhere(self.state == OCCUPIED)

    def counts(self):
        """(n_unknown, n_free, n_occupied) voxel counts."""
        n_occ = int(np.count_nonzero(self.state == OCCUPIED))
        n_free = int(np.count_nonzero(self.state == FREE))
        n_unk = self.state.size - n_occ - n_free
        return n_unk, n_free, n_occ


# -- core operations ------------------------------------------------------

def raycast(grid, src, dst):
    """Voxels traversed by the segment src -> dst, stopping at occupancy.

    Returns (cells, hit): cells is an int64 (n, 3) array in traversal
    order (supercover: every voxel whose cube the segment touches); when
    hit is True the last cell is the first Occupied voxel on the way.
    """
    for name, p in (("from", src), ("to", dst)):
        if not grid.contains(p):
            raise GridBoundsError(
                f"raycast {name} point {tuple(np.asarray(p, float))} outside grid bounds")
    return _kernels.trace_ray(grid.occupancy_mask(),
                              np.asarray(src, dtype=np.float64),
                              np.asarray(dst, dtype=np.float64),
                              grid.origin, grid.resolution, True)


def integrate_range_scan(grid, pose, scan):
    """Fold a range scan into the map; returns the state-change count.

    Rays walk from the scan origin toward each endpoint; traversed
    Unknown voxels become Free and each hit ray's struck cell becomes
    Occupied. Free and Occupied are terminal, so repeated integration
    is idempotent.
    """
    origin = np.asarray(scan.origin, dtype=np.float64)
    ends = np.ascontiguousarray(scan.ends, dtype=np.float64)
    hits = np.ascontiguousarray(scan.hits, dtype=np.uint8)
    cells = np.ascontiguousarray(scan.hit_cells, dtype=np.int64)
    if len(ends) == 0:
        return 0
    if not grid.contains(origin):
        raise GridBoundsError(
            f"scan origin {tuple(origin)} outside grid bounds")
    n_free, n_occ = _kernels.integrate_scan(
        grid.state, origin, ends, hits, cells, grid.origin, grid.resolution)
    return n_free + n_occ


def _camera_candidates(grid, pose, cfg, far, blocked=None):
    """Occupied voxels in the frustum with their unoccluded flags."""
    pos = position_of(pose)
    yaw = yaw_of(pose)
    if blocked is None:
        blocked = grid.occupancy_mask()
    occ_idx = grid.occupied_indices()
    if len(occ_idx) == 0:
        return occ_idx, np.zeros(0, dtype=bool), np.zeros(0)
    centers = grid.index_to_center(occ_idx)
    mask = frustum_mask(centers, pos, yaw, cfg.camera_fov[0], cfg.camera_fov[1], far)
    occ_idx = occ_idx[mask]
    if len(occ_idx) == 0:
        return occ_idx, np.zeros(0, dtype=bool), np.zeros(0)
    centers = centers[mask]
    vis = _kernels.rays_visible(blocked, pos,
                                np.ascontiguousarray(centers),
                                grid.origin, grid.resolution)
    dist = np.sqrt(np.sum((centers - pos) ** 2, axis=1))
    return occ_idx, vis.astype(bool), dist


def integrate_camera_frame(grid, pose, cfg, blocked=None):
    """Record camera observations of occupied voxels from this pose.

    Every occupied voxel inside the frustum (far plane = lidar_range,
    the camera's modeled range) with an unoccluded line of sight gets
    closest_obs = min(closest_obs, distance). Returns the set of voxel
    indices whose closest_obs crossed from > d_max to <= d_max, i.e. the
    voxels newly removed from the uninspected set.

    Occlusion defaults to the map's own occupancy; a simulator passes
    the ground-truth solid mask so walls hide things before they are
    mapped.
    """
    occ_idx, vis, dist = _camera_candidates(grid, pose, cfg,
                                            cfg.lidar_range, blocked)
    if len(occ_idx) == 0 or not vis.any():
        return set()
    idx = occ_idx[vis]
    # Distances are stored at float32; do the min at float32 too so the
    # "newly inspected" report agrees exactly with the stored values.
    d32 = dist[vis].astype(np.float32)
    ii, jj, kk = idx[:, 0], idx[:, 1], idx[:, 2]
    old = grid.closest_obs[ii, jj, kk]
    new = np.minimum(old, d32)
    grid.closest_obs[ii, jj, kk] = new
    newly = (old > cfg.d_max) & (new <= cfg.d_max)
    return {tuple(int(c) for c in row) for row in idx[newly]}


def detect_targets(grid, pose, cfg, truth_targets, blocked=None):
    """Mark and report targets visible from this pose.

    A target is detected when its voxel is inside the frustum, within
    d_max, and unoccluded (against `blocked`, defaulting to the map's
    occupancy; simulators pass ground truth). Detection sets the voxel's
    target flag; already-flagged targets are not re-reported. Returns
    the indices (into truth_targets) of newly detected targets,
    ascending.
    """
    targets = np.asarray(truth_targets, dtype=np.float64)
    if len(targets) == 0:
        return []
    pos = position_of(pose)
    yaw = yaw_of(pose)
    if blocked is None:
        blocked = grid.occupancy_mask()
    cells = [grid.world_to_index(t) for t in targets]
    fresh = np.array([not grid.is_target[c] for c in cells], dtype=bool)
    if not fresh.any():
        return []
    centers = np.array([grid.index_to_center(c) for c in cells])
    mask = frustum_mask(centers, pos, yaw, cfg.camera_fov[0], cfg.camera_fov[1],
                        cfg.d_max) & fresh
    if not mask.any():
        return []
    cand = np.ascontiguousarray(centers[mask])
    vis = _kernels.rays_visible(blocked, pos, cand,
                                grid.origin, grid.resolution).astype(bool)
    detected = np.flatnonzero(mask)[vis]
    for t in detected:
        grid.is_target[cells[t]] = True
    return sorted(int(t) for t in detected)


def uninspected_set(grid, cfg):
    """Indices of occupied voxels never camera-observed within d_max."""
    mask = (grid.state == OCCUPIED) & (grid.closest_obs > cfg.d_max)
    return {tuple(int(c) for c in row) for row in np.argwhere(mask)}


def uninspected_indices(grid, cfg):
    """Array form of uninspected_set, in lexicographic order."""
    mask = (grid.state == OCCUPIED) & (grid.closest_obs > cfg.d_max)
    return np.argwhere(mask)


def is_search_complete(grid, cfg, reachable_mask):
    """True when all reachable voxels are known and inspected.

    reachable_mask is a boolean grid precomputed from ground truth;
    voxels outside it (sealed hollows) are exempt from both conditions.
    """
    reach = np.asarray(reachable_mask, dtype=bool)
    if reach.shape != grid.state.shape:
        raise ValueError("reachable_mask shape does not match grid dims")
    if np.any((grid.state == UNKNOWN) & reach):
        return False
    unins = (grid.state == OCCUPIED) & (grid.closest_obs > cfg.d_max) & reach
    return not np.any(unins)


# -- snapshots and debug art ----------------------------------------------

_HEADER = struct.Struct("<iii d ddd")


def save_snapshot(grid, path):
    """Write the grid to a flat binary snapshot.

    Header: dims (3 x int32), resolution (float64), origin (3 x float64),
    all little-endian. Body: per voxel in C order, one state byte plus a
    float32 closest observation distance.
    """
    body_dtype = np.dtype([("state", "u1"), ("obs", "<f4")])
    body = np.empty(grid.state.size, dtype=body_dtype)
    body["state"] = grid.state.reshape(-1)
    body["obs"] = grid.closest_obs.reshape(-1)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*grid.dims, grid.resolution, *grid.origin))
        fh.write(body.tobytes())


def load_snapshot(path):
    """Read a snapshot written by save_snapshot."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"snapshot {path} truncated header")
        nx, ny, nz, res, ox, oy, oz = _HEADER.unpack(header)
        grid = VoxelGrid((ox, oy, oz), res, (nx, ny, nz))
        body_dtype = np.dtype([("state", "u1"), ("obs", "<f4")])
        body = np.frombuffer(fh.read(), dtype=body_dtype)
        if body.size != nx * ny * nz:
            raise ValueError(f"snapshot {path} body size mismatch")
        grid.state = np.ascontiguousarray(
            body["state"].reshape(nx, ny, nz))
        grid.closest_obs = np.ascontiguousarray(
            body["obs"].reshape(nx, ny, nz).astype(np.float32))
    return grid


def ascii_slice(grid, k, cfg):
    """One z-slice as ASCII art, highest y row first.

    '?' Unknown, '.' Free, '#' Occupied (inspected), '!' uninspected
    Occupied, 'T' target.
    """
    if not 0 <= k < grid.dims[2]:
        raise GridBoundsError(f"slice index {k} outside grid")
    rows = []
    for j in range(grid.dims[1] - 1, -1, -1):
        row = []
        for i in range(grid.dims[0]):
            s = grid.state[i, j, k]
            if grid.is_target[i, j, k]:
                ch = "T"
            elif s == OCCUPIED:
                ch = "!" if grid.closest_obs[i, j, k] > cfg.d_max else "#"
            elif s == FREE:
                ch = "."
            else:
                ch = "?"
            row.append(ch)
        rows.append("".join(row))
    return "\n".join(rows)
