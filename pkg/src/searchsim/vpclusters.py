"""Greedy grouping of viewpoints into mutually visible clusters.

Cluster members must pairwise see each other along straight segments
(checked against a body-inflated obstacle mask), which keeps every
cluster inside a collision-free convex region. Clusters are the nodes of
global route planning, so fewer, fatter clusters directly shrink the
planning problem.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels

__all__ = ["ViewpointCluster", "cluster_viewpoints", "mutual_visibility",
           "inflate_occupied"]


@dataclass
class ViewpointCluster:
    """members: admitted viewpoints; center: mean of member positions."""

    members: list
    center: np.ndarray
    id: str = ""

    def __post_init__(self):
        if not self.id:
            pos = np.array([m.position for m in self.members])
            h = hashlib.sha1(np.round(pos, 9).tobytes())
            self.id = h.hexdigest()[:12]

    def __len__(self):
        return len(self.members)


def inflate_occupied(grid, clearance):
    """Occupied mask dilated by the agent body, for sight-line checks.

    The dilation radius is floor(clearance / resolution) cells, which a
    clearance-checked viewpoint cell can never fall inside, so inflation
    never blinds a viewpoint to its own cell.
    """
    c = int(math.floor(clearance / grid.resolution + 1e-9))
    occ = grid.state == _kernels.OCCUPIED
    if c > 0:
        occ = ndimage.binary_dilation(
            occ, structure=np.ones((2 * c + 1,) * 3, dtype=bool))
    return occ.view(np.uint8) if occ.dtype == bool else occ.astype(np.uint8)


def mutual_visibility(a, b, grid):
    """True iff the straight segment between a and b hits no obstacle."""
    from .grid import raycast

    _, hit = raycast(grid, a, b)
    return not hit


def _sees_all(blocked, grid, p, member_positions):
    t = np.ascontiguousarray(np.array(member_positions, dtype=np.float64))
    vis = _kernels.rays_visible(blocked, np.ascontiguousarray(p), t,
                                grid.origin, grid.resolution)
    return bool(vis.all())


def cluster_viewpoints(vps, grid, agent_pos, r_vp, clearance=0.3):
    """Partition viewpoints into visibility cliques, greedily.

    The first cluster grows around the agent's position (a seed only,
    dropped from the final member list); each admission takes the
    nearest unclustered viewpoint within r_vp of the evolving center
    that can see every current member, then the center moves. When
    nothing more is admissible the cluster closes and the next seed is
    the unclustered viewpoint nearest the closed cluster's center.
    """
    if not vps:
        return []
    blocked = inflate_occupied(grid, clearance)
    pool = list(vps)
    clusters = []

    def drop(vp):
        # dataclass == on array fields is ambiguous, remove by identity
        for i, q in enumerate(pool):
            if q is vp:
                del pool[i]
                return
        raise AssertionError("viewpoint not in pool")

    def grow(member_positions, members):
        while True:
            center = np.mean(member_positions, axis=0)
            admitted = None
            for vp in sorted(pool, key=lambda v: (
                    float(np.linalg.norm(v.position - center)),
                    tuple(v.position))):
                if np.linalg.norm(vp.position - center) > r_vp:
                    break
                if _sees_all(blocked, grid, vp.position, member_positions):
                    admitted = vp
                    break
            if admitted is None:
                return
            drop(admitted)
            members.append(admitted)
            member_positions.append(admitted.position)

    agent = np.asarray(agent_pos, dtype=np.float64)
    members = []
    grow([agent], members)
    if members:
        clusters.append(_finalize(members))
        last_center = clusters[-1].center
    else:
        last_center = agent

    while pool:
        seed = min(pool, key=lambda v: (
            float(np.linalg.norm(v.position - last_center)),
            tuple(v.position)))
        drop(seed)
        members = [seed]
        grow([seed.position], members)
        cl = _finalize(members)
        clusters.append(cl)
        last_center = cl.center
    return clusters


def _finalize(members):
    center = np.mean([m.position for m in members], axis=0)
    return ViewpointCluster(members=list(members), center=center)
