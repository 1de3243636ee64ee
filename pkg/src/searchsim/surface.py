"""Frontier and uninspected-surface clustering.

Two voxel populations drive the search: frontiers (Free voxels touching
Unknown space, which pull exploration outward) and uninspected surface
(Occupied voxels not yet camera-observed within d_max, which pull the
agent in close). Both are grouped into connected clusters, oversized
clusters are bisected along their principal axes, and uninspected
clusters get an outward-facing average normal for viewpoint scoring.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from ._kernels import FREE, UNKNOWN

__all__ = [
    "ClusterKind", "SurfaceCluster",
    "extract_frontiers", "grow_clusters", "pca_split", "average_normal",
    "build_clusters",
]

_FACE_OFFSETS = np.array([
    [1, 0, 0], [-1, 0, 0],
    [0, 1, 0], [0, -1, 0],
    [0, 0, 1], [0, 0, -1],
], dtype=np.int64)


class ClusterKind(Enum):
    FRONTIER = "frontier"
    UNINSPECTED = "uninspected"


@dataclass
class SurfaceCluster:
    """A connected group of same-kind voxels with derived geometry.

    cells is an (n, 3) index array in lexicographic order; the id is a
    content hash of kind + cells, so unchanged clusters keep their id
    across replans.
    """

    kind: ClusterKind
    cells: np.ndarray
    centroid: np.ndarray
    avg_normal: np.ndarray = None
    id: str = ""

    def __post_init__(self):
        if not self.id:
            self.id = _cluster_id(self.kind, self.cells)

    def cell_set(self):
        return {tuple(int(c) for c in row) for row in self.cells}

    def __len__(self):
        return len(self.cells)


def _cluster_id(kind, cells):
    h = hashlib.sha1(kind.value.encode())
    h.update(np.ascontiguousarray(cells, dtype=np.int64).tobytes())
    return h.hexdigest()[:12]


def _sorted_cells(cells):
    arr = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
    order = np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))
    return np.ascontiguousarray(arr[order])


def extract_frontiers(grid):
    """Free voxels with at least one Unknown face neighbor."""
    free = grid.state == FREE
    unknown = grid.state == UNKNOWN
    near_unknown = np.zeros_like(free)
    for a in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        near_unknown[tuple(lo)] |= unknown[tuple(hi)]
        near_unknown[tuple(hi)] |= unknown[tuple(lo)]
    return {tuple(int(c) for c in row)
            for row in np.argwhere(free & near_unknown)}


def grow_clusters(cells, kind, grid):
    """Partition cells into 26-connected components.

    Returns SurfaceClusters ordered by their lexicographically smallest
    cell, each with centroid = mean of member voxel centers.
    """
    if not len(cells):
        return []
    arr = _sorted_cells(np.array(sorted(cells), dtype=np.int64)
                        if isinstance(cells, set) else cells)
    mask = np.zeros(grid.dims, dtype=bool)
    mask[arr[:, 0], arr[:, 1], arr[:, 2]] = True
    labels, n = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=bool))
    out = []
    for lab in range(1, n + 1):
        comp = _sorted_cells(np.argwhere(labels == lab))
        centroid = grid.index_to_center(comp).mean(axis=0)
        out.append(SurfaceCluster(kind=kind, cells=comp, centroid=centroid))
    out.sort(key=lambda c: tuple(c.cells[0]))
    return out


def pca_split(cluster, split_threshold, grid):
    """Recursively bisect clusters that are too long.

    The covariance of member cell centers gives the principal axes; any
    cluster whose center extent along some principal axis exceeds
    split_threshold is cut at the centroid's projection along the widest
    axis. Output cells partition the input cells exactly.
    """
    if split_threshold <= 0:
        raise ValueError("split_threshold must be positive")
    out = []
    stack = [cluster]
    while stack:
        cl = stack.pop()
        centers = grid.index_to_center(cl.cells)
        axis, extent = _widest_axis(centers)
        if extent <= split_threshold or len(cl) < 2:
            out.append(cl)
            continue
        proj = centers @ axis
        cut = cl.centroid @ axis
        left = proj <= cut
        if not left.any() or left.all():
            # Degenerate mass distribution: cut at the median instead.
            cut = np.median(proj)
            left = proj <= cut
            if not left.any() or left.all():
                out.append(cl)
                continue
        for side in (left, ~left):
            cells = _sorted_cells(cl.cells[side])
            centroid = grid.index_to_center(cells).mean(axis=0)
            stack.append(SurfaceCluster(kind=cl.kind, cells=cells,
                                        centroid=centroid))
    out.sort(key=lambda c: tuple(c.cells[0]))
    return out


def _widest_axis(centers):
    """(unit axis, extent) of the widest principal direction."""
    if len(centers) < 2:
        return np.array([1.0, 0.0, 0.0]), 0.0
    d = centers - centers.mean(axis=0)
    cov = d.T @ d / len(centers)
    w, v = np.linalg.eigh(cov)
    best_axis, best_ext = None, -1.0
    # eigh returns ascending eigenvalues; widest extent usually matches
    # the last eigenvector but is measured explicitly to be safe.
    for c in range(3):
        axis = v[:, c]
        proj = d @ axis
        ext = float(proj.max() - proj.min())
        if ext > best_ext:
            best_axis, best_ext = axis, ext
    if best_axis[np.argmax(np.abs(best_axis))] < 0:
        best_axis = -best_axis  # deterministic sign
    return best_axis, best_ext


def average_normal(cluster, grid):
    """Outward unit normal averaged over the cluster's cells.

    Each cell's normal is the mean of unit offsets toward its Free face
    neighbors (the voxel equivalent of a surface gradient). Meant for
    Uninspected clusters; if every cell is buried the fallback points
    from the centroid at the nearest Free voxel.
    """
    total = np.zeros(3)
    for cell in cluster.cells:
        for off in _FACE_OFFSETS:
            nb = cell + off
            if grid.in_bounds_index(nb) and grid.state[tuple(nb)] == FREE:
                total += off
    norm = np.linalg.norm(total)
    if norm > 1e-12:
        return total / norm
    free_idx = np.argwhere(grid.state == FREE)
    if len(free_idx) == 0:
        return np.array([0.0, 0.0, 1.0])
    centers = grid.index_to_center(free_idx)
    d = centers - cluster.centroid
    nearest = d[np.argmin(np.sum(d * d, axis=1))]
    n = np.linalg.norm(nearest)
    return nearest / n if n > 1e-12 else np.array([0.0, 0.0, 1.0])


def build_clusters(grid, cfg, split_threshold):
    """Full extraction pipeline for one planning cycle.

    Returns (frontier clusters, uninspected clusters); uninspected
    clusters carry their average normals, frontier clusters do not (they
    are scored without normal gating).
    """
    from .grid import uninspected_indices

    frontier_cells = extract_frontiers(grid)
    fr = grow_clusters(frontier_cells, ClusterKind.FRONTIER, grid)
    fr = [c for cl in fr for c in pca_split(cl, split_threshold, grid)]
    fr.sort(key=lambda c: tuple(c.cells[0]))

    unins_cells = uninspected_indices(grid, cfg)
    un = grow_clusters(unins_cells, ClusterKind.UNINSPECTED, grid)
    un = [c for cl in un for c in pca_split(cl, split_threshold, grid)]
    un.sort(key=lambda c: tuple(c.cells[0]))
    for cl in un:
        cl.avg_normal = average_normal(cl, grid)
    return fr, un
