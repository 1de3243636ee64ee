"""Viewpoint sampling and scoring around surface clusters.

For each cluster, candidate observation poses are sampled on spherical
shells around the centroid, pruned to collision-free positions that can
actually see the cluster, and scored on two axes: how much new
information the pose would gather (count of visible frontier voxels for
the range sensor plus visible uninspected voxels for the camera) and how
well it faces the surface (cosine to the cluster's average normal). The
product of the two picks the winner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import FREE
from .errors import DegenerateDirectionError, NoViewpointError
from .geometry import frustum_mask
from .grid import raycast
from .surface import ClusterKind

__all__ = [
    "ViewpointCandidate", "ScoreWeights",
    "sample_viewpoints", "score_info", "score_normal", "select_best",
    "score_candidates", "clearance_ok",
]

DEFAULT_RADII = (1.0, 1.5, 2.0, 2.5)
DEFAULT_AZIMUTHS = 12


@dataclass
class ScoreWeights:
    """Information-gain mix: uninspected voxels count more than unknowns."""

    w_uni: float = 0.8
    w_unk: float = 0.2

    def __post_init__(self):
        if self.w_uni < 0 or self.w_unk < 0:
            raise ValueError("weights must be non-negative")
        if self.w_uni <= self.w_unk:
            raise ValueError("w_uni must exceed w_unk")


@dataclass
class ViewpointCandidate:
    position: np.ndarray
    yaw: float
    cluster_id: str = ""
    dist: float = 0.0
    n_uninspected: int = 0
    n_unknown: int = 0
    s_info: float = 0.0
    s_nor: float = 1.0
    s_vp: float = 0.0


def clearance_ok(grid, pos, clearance):
    """True when the clearance cube around pos is entirely known Free."""
    p = np.asarray(pos, dtype=np.float64)
    lo = p - clearance
    hi = p + clearance
    if not (grid.contains(lo) and grid.contains(hi)):
        return False
    a = grid.world_to_index(lo)
    b = grid.world_to_index(hi)
    block = grid.state[a[0]:b[0] + 1, a[1]:b[1] + 1, a[2]:b[2] + 1]
    return bool(np.all(block == FREE))


def sample_viewpoints(cluster, grid, cfg, radii=DEFAULT_RADII,
                      n_azimuth=DEFAULT_AZIMUTHS, z_offsets=(0.0,),
                      clearance=0.3):
    """Feasible observation poses on shells around the cluster centroid.

    Each sample sits at one of the given shell radii; nonzero z_offsets
    tilt the sample up or down while staying on the shell (the
    horizontal radius shrinks to compensate). A sample survives when its
    clearance cube is Free and it can see the cluster: either the
    segment toward the centroid terminates on a cluster cell (surface
    patches block their own centroid from most directions), or, failing
    that, some individual cluster cell has an unobstructed segment from
    the sample. The per-cell fallback matters for partially inspected
    patches whose remaining cells hide behind already-seen neighbors of
    the same surface. Yaw faces the centroid, or the nearest visible
    cell when only the fallback holds. May return an empty list.
    """
    c = cluster.centroid
    positions = []
    for r in radii:
        for dz in z_offsets:
            if abs(dz) >= r:
                continue
            rh = math.sqrt(r * r - dz * dz)
            for a in range(n_azimuth):
                az = 2.0 * math.pi * a / n_azimuth
                positions.append((c[0] + rh * math.cos(az),
                                  c[1] + rh * math.sin(az),
                                  c[2] + dz))
    if not positions:
        return []
    pos_arr = np.array(positions, dtype=np.float64)
    keep = [clearance_ok(grid, p, clearance) for p in pos_arr]
    pos_arr = pos_arr[np.array(keep, dtype=bool)]
    if len(pos_arr) == 0:
        return []
    own = {tuple(int(v) for v in row) for row in cluster.cells}
    cend = tuple(int(v) for v in grid.world_to_index(c))
    own_centers = grid.index_to_center(np.asarray(cluster.cells))
    out = []
    for p in pos_arr:
        cells, hit = raycast(grid, p, c)
        last = tuple(int(v) for v in cells[-1])
        aim = c
        if hit and last != cend and last not in own:
            aim = _first_visible_cell(grid, p, own_centers)
            if aim is None:
                continue
        yaw = math.atan2(aim[1] - p[1], aim[0] - p[0])
        out.append(ViewpointCandidate(
            position=p.copy(), yaw=yaw, cluster_id=cluster.id,
            dist=float(np.linalg.norm(p - c))))
    return out


def _first_visible_cell(grid, p, centers):
    """Center of the nearest cluster cell the sample can see, else None.

    Nearest so the aim point, and with it the yaw, stays stable under
    cluster growth; ties fall to the smaller cell index.
    """
    vis = _kernels.rays_visible(grid.occupancy_mask(),
                                np.ascontiguousarray(p),
                                np.ascontiguousarray(centers),
                                grid.origin, grid.resolution)
    if not vis.any():
        return None
    d2 = ((centers - p) ** 2).sum(axis=1)
    d2[vis == 0] = np.inf
    return centers[int(np.argmin(d2))]


def _count_visible(grid, pos, centers, stride):
    if len(centers) == 0:
        return 0
    sub = centers[::stride] if stride > 1 else centers
    vis = _kernels.rays_visible(grid.occupancy_mask(),
                                np.ascontiguousarray(pos),
                                np.ascontiguousarray(sub),
                                grid.origin, grid.resolution)
    return int(vis.sum()) * stride


def combine_info(n_uninspected, n_unknown, w):
    return w.w_uni * n_uninspected + w.w_unk * n_unknown


def score_info(vp, grid, cfg, w, frontier_centers=None, unins_centers=None,
               stride=1):
    """Information score: weighted count of newly observable voxels.

    n_unknown counts frontier voxels within lidar_range of the pose with
    an unoccluded segment (the range sensor is omnidirectional, so no
    frustum test). n_uninspected counts uninspected voxels inside the
    camera frustum within d_max, unoccluded. Caller may pass the two
    center arrays to share them across candidates; stride > 1 scores a
    decimated subset and scales the counts back up.
    """
    if frontier_centers is None:
        from .surface import extract_frontiers
        fr = extract_frontiers(grid)
        frontier_centers = (grid.index_to_center(np.array(sorted(fr), dtype=np.int64))
                            if fr else np.zeros((0, 3)))
    if unins_centers is None:
        from .grid import uninspected_indices
        ui = uninspected_indices(grid, cfg)
        unins_centers = grid.index_to_center(ui) if len(ui) else np.zeros((0, 3))

    pos = vp.position
    if len(frontier_centers):
        d2 = np.sum((frontier_centers - pos) ** 2, axis=1)
        near = frontier_centers[d2 <= cfg.lidar_range ** 2]
        vp.n_unknown = _count_visible(grid, pos, near, stride)
    else:
        vp.n_unknown = 0
    if len(unins_centers):
        m = frustum_mask(unins_centers, pos, vp.yaw,
                         cfg.camera_fov[0], cfg.camera_fov[1], cfg.d_max)
        vp.n_uninspected = _count_visible(grid, pos, unins_centers[m], stride)
    else:
        vp.n_uninspected = 0
    vp.s_info = combine_info(vp.n_uninspected, vp.n_unknown, w)
    return vp.s_info


def score_normal(vp, cluster):
    """Cosine between the centroid-to-viewpoint ray and the normal.

    Frontier clusters have no meaningful surface normal and score 1.
    """
    if cluster.kind is ClusterKind.FRONTIER or cluster.avg_normal is None:
        vp.s_nor = 1.0
        return 1.0
    d = vp.position - cluster.centroid
    n = np.linalg.norm(d)
    if n < 1e-12:
        raise DegenerateDirectionError(
            "viewpoint coincides with cluster centroid")
    vp.s_nor = float(np.dot(d / n, cluster.avg_normal))
    return vp.s_nor


def select_best(cands):
    """Highest s_vp wins; ties go to the closer, then lexicographically
    smaller, position."""
    if not cands:
        raise NoViewpointError("no viewpoint candidates to select from")
    return min(cands, key=lambda v: (-v.s_vp, v.dist, tuple(v.position)))


def score_candidates(cands, cluster, grid, cfg, w, frontier_centers,
                     unins_centers, stride=1):
    """Score a cluster's candidates in place and return them.

    The final score is the product s_nor * s_info; a pose staring at the
    back of a surface gets a negative product and naturally loses.
    """
    for vp in cands:
        score_info(vp, grid, cfg, w, frontier_centers, unins_centers, stride)
        score_normal(vp, cluster)
        vp.s_vp = vp.s_nor * vp.s_info
    return cands
