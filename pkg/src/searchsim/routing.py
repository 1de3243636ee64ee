"""Shortest paths, travel-cost matrices, and ATSP tour solving.

Planning happens on a traversability mask: known-Free voxels eroded by
the agent body and restricted to a flight height band. Unknown space is
never traversable, so routes stay inside the mapped world. Tours over
cost matrices come in two shapes: open tours from the agent (no return)
and fixed start-to-end tours (used for history segments); both reduce to
a cyclic ATSP via standard column transforms. Every cost-matrix entry
evaluation ticks a global counter, which is how the two-level planner's
complexity claims are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage

from . import _kernels
from ._kernels import FREE
from .errors import UnreachableError
from .geometry import position_of

__all__ = [
    "TourMode", "MatrixMode", "CostMatrix", "Tour", "GridGraph",
    "EvalCounter", "EVALS",
    "astar", "build_cost_matrix", "solve_atsp", "brute_force_atsp",
    "matrix_to_text", "matrix_from_text", "tour_to_text", "tour_from_text",
]

BRUTE_FORCE_LIMIT = 13


class TourMode(Enum):
    OPEN_FROM_START = "OpenFromStart"
    FIXED_START_END = "FixedStartEnd"


class MatrixMode(Enum):
    GLOBAL = "global"
    LOCAL = "local"


class EvalCounter:
    """Counts cost-entry evaluations across planning calls."""

    def __init__(self):
        self.count = 0

    def add(self, n=1):
        self.count += n

    def reset(self):
        self.count = 0


EVALS = EvalCounter()


@dataclass
class CostMatrix:
    """n x n travel costs; diagonal zero, unreachable pairs hold a
    sentinel of 10x the largest finite entry."""

    n: int
    costs: np.ndarray
    sentinel: float = 0.0
    unreachable: set = field(default_factory=set)

    def cost(self, i, j):
        return float(self.costs[i, j])


@dataclass
class Tour:
    order: list
    cost: float
    mode: TourMode

    def recompute_cost(self, m):
        return float(sum(m.costs[self.order[i], self.order[i + 1]]
                         for i in range(len(self.order) - 1)))


# -- traversability graph ---------------------------------------------------

class GridGraph:
    """Planning view of a map: eroded Free mask plus path/field search.

    Build one per planning cycle and share it; the mask snapshot keeps
    every cost query in the cycle consistent even while sensing threads
    would mutate the map.
    """

    def __init__(self, grid, clearance, z_band=None):
        self.grid = grid
        self.clearance = float(clearance)
        self.z_band = z_band
        free = grid.state == FREE
        c = int(math.ceil(self.clearance / grid.resolution - 1e-9))
        if c > 0:
            free = ndimage.binary_erosion(
                free, structure=np.ones((2 * c + 1,) * 3, dtype=bool),
                border_value=0)
        if z_band is not None:
            zc = grid.origin[2] + (np.arange(grid.dims[2]) + 0.5) * grid.resolution
            ok = (zc >= z_band[0]) & (zc <= z_band[1])
            free = free & ok[None, None, :]
        self.trav = np.ascontiguousarray(free.astype(np.uint8))
        self._fields = {}
        self._snaps = {}

    def snap(self, point):
        """Nearest traversable cell to a world point.

        Search radius covers the clearance halo plus two voxels; beyond
        that the point is treated as unreachable. Results are cached by
        exact query position; matrix pricing asks about the same nodes
        once per row.
        """
        p = np.asarray(position_of(point), dtype=np.float64)
        key = (float(p[0]), float(p[1]), float(p[2]))
        hit = self._snaps.get(key)
        if hit is not None:
            return hit
        if not self.grid.contains(p):
            raise UnreachableError(f"point {tuple(p)} outside grid")
        home = self.grid.world_to_index(p)
        if self.trav[home]:
            self._snaps[key] = home
            return home
        r = int(math.ceil(self.clearance / self.grid.resolution)) + 2
        lo = np.maximum(np.asarray(home) - r, 0)
        hi = np.minimum(np.asarray(home) + r, np.asarray(self.grid.dims) - 1)
        ii, jj, kk = np.mgrid[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1,
                              lo[2]:hi[2] + 1]
        cells = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
        cells = cells[self.trav[cells[:, 0], cells[:, 1], cells[:, 2]] != 0]
        if len(cells) == 0:
            raise UnreachableError(
                f"no traversable voxel near {tuple(p)}")
        d2 = np.sum((self.grid.index_to_center(cells) - p) ** 2, axis=1)
        near = cells[d2 == d2.min()]
        # ties break toward the lexicographically smallest index
        order = np.lexsort((near[:, 2], near[:, 1], near[:, 0]))
        best = tuple(int(v) for v in near[order[0]])
        self._snaps[key] = best
        return best

    def path(self, frm, to):
        a = self.snap(frm)
        b = self.snap(to)
        cells, length, found = _kernels.astar_grid(
            self.trav, np.array(a, dtype=np.int64),
            np.array(b, dtype=np.int64), self.grid.resolution)
        if not found:
            raise UnreachableError(
                f"no path between {tuple(np.asarray(position_of(frm)))} "
                f"and {tuple(np.asarray(position_of(to)))}")
        return cells, float(length)

    def distance_field(self, frm):
        """Dijkstra distances from a point, cached per source cell."""
        cell = self.snap(frm)
        if cell not in self._fields:
            self._fields[cell] = _kernels.dijkstra_field(
                self.trav, np.array(cell, dtype=np.int64),
                self.grid.resolution)
        return self._fields[cell]

    def length_between(self, frm, to):
        """A*-equal path length via the cached field, inf if cut off."""
        f = self.distance_field(frm)
        return float(f[self.snap(to)])


def astar(grid, frm, to, clearance, z_band=None, graph=None):
    """Shortest 26-connected path between two free-space points.

    Returns (polyline of voxel centers, length). The length is optimal
    for the discretization (Euclidean heuristic is admissible); start
    and end are snapped to their nearest traversable voxel centers.
    """
    g = graph if graph is not None else GridGraph(grid, clearance, z_band)
    cells, length = g.path(frm, to)
    return g.grid.index_to_center(cells), length


# -- cost matrices ----------------------------------------------------------

def _finalize(costs, n):
    np.fill_diagonal(costs, 0.0)
    finite = costs[np.isfinite(costs)]
    mx = float(finite.max()) if len(finite) else 1.0
    sentinel = 10.0 * mx if mx > 0 else 10.0
    bad = ~np.isfinite(costs)
    unreachable = {(int(i), int(j)) for i, j in np.argwhere(bad)}
    costs[bad] = sentinel
    return CostMatrix(n=n, costs=costs, sentinel=sentinel,
                      unreachable=unreachable)


def build_cost_matrix(nodes, grid, motion, mode, graph=None, clearance=0.3,
                      z_band=None, counter=EVALS):
    """Travel-time matrix over planning nodes; node 0 is the agent.

    Global mode prices an edge as shortest-path length over v_max (yaw
    is a local concern). Local mode prices edges from the agent with the
    full velocity-decomposed start cost and everything else with the
    path-time vs yaw-time maximum. One counter tick per computed entry.
    """
    n = len(nodes)
    if n < 1:
        raise ValueError("need at least one node")
    costs = np.zeros((n, n), dtype=np.float64)
    if n == 1:
        return _finalize(costs, n)
    g = graph if graph is not None else GridGraph(grid, clearance, z_band)

    if mode is MatrixMode.GLOBAL:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                try:
                    length = g.length_between(position_of(nodes[i]),
                                              position_of(nodes[j]))
                except UnreachableError:
                    length = math.inf
                costs[i, j] = length / motion.v_max
                counter.add()
        return _finalize(costs, n)

    if mode is MatrixMode.LOCAL:
        from .localplan import cost_between, cost_from_state

        for j in range(1, n):
            costs[0, j] = cost_from_state(nodes[0], nodes[j], motion, g)
            counter.add()
        for i in range(1, n):
            for j in range(n):
                if i == j:
                    continue
                costs[i, j] = cost_between(nodes[i], nodes[j], motion, g)
                counter.add()
        return _finalize(costs, n)

    raise ValueError(f"unknown matrix mode {mode!r}")


# -- tour solving -----------------------------------------------------------

def _solve_cycle(costs, exact):
    c = np.ascontiguousarray(costs, dtype=np.float64)
    if exact:
        order, cost = _kernels.held_karp_cycle(c)
        return list(order)
    # multi-start: one greedy tour per start node, each polished; ties
    # keep the lowest start so equal inputs give equal tours
    n = c.shape[0]
    best_order, best_cost = None, math.inf
    for s in range(n):
        order = _kernels.improve_cycle(c, list(_kernels.nn_tour(c, s)))
        cost = _cycle_cost(c, order)
        if cost + 1e-12 < best_cost:
            best_order, best_cost = order, cost
    return _rotate_to(best_order, 0)


def _cycle_cost(c, order):
    n = len(order)
    return float(sum(c[order[t], order[(t + 1) % n]] for t in range(n)))


def _rotate_to(order, node):
    k = order.index(node)
    return order[k:] + order[:k]


def solve_atsp(m, mode, end=None, exact=None):
    """Best-effort minimal tour for the requested shape.

    Exact dynamic programming runs automatically for n <= 13; larger
    instances get nearest-neighbor construction polished by 2-opt and
    segment-relocation passes (both asymmetric-safe). Deterministic: no
    randomized restarts, so equal inputs give equal tours. Pass exact
    to override the size-based dispatch in either direction.
    """
    n = m.n
    if n == 1:
        return Tour(order=[0], cost=0.0, mode=mode)
    t = m.costs.copy()
    if mode is TourMode.OPEN_FROM_START:
        t[:, 0] = 0.0
    elif mode is TourMode.FIXED_START_END:
        if end is None or not 0 <= end < n or end == 0:
            raise ValueError("FixedStartEnd requires an end index != 0")
        finite = t[np.isfinite(t)]
        big = 10.0 * float(finite.max()) if len(finite) else 10.0
        t[end, :] = big
        t[end, 0] = 0.0
    else:
        raise ValueError(f"unknown tour mode {mode!r}")
    if exact is None:
        exact = n <= BRUTE_FORCE_LIMIT
    order = _solve_cycle(t, exact=exact)
    order = _rotate_to(order, 0)
    if mode is TourMode.FIXED_START_END and order[-1] != end:
        order.remove(end)
        order.append(end)
    tour = Tour(order=order, cost=0.0, mode=mode)
    tour.cost = tour.recompute_cost(m)
    return tour


def brute_force_atsp(m, mode, end=None):
    """Provably optimal tour by exhaustive search; refuses large n."""
    import itertools

    n = m.n
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force capped at n={BRUTE_FORCE_LIMIT}")
    if n == 1:
        return Tour(order=[0], cost=0.0, mode=mode)
    if mode is TourMode.FIXED_START_END:
        if end is None or not 0 <= end < n or end == 0:
            raise ValueError("FixedStartEnd requires an end index != 0")
        middle = [k for k in range(1, n) if k != end]
        best, best_cost = None, math.inf
        for perm in itertools.permutations(middle):
            order = [0] + list(perm) + [end]
            c = sum(m.costs[order[i], order[i + 1]] for i in range(n - 1))
            if c < best_cost:
                best, best_cost = order, c
        return Tour(order=best, cost=float(best_cost), mode=mode)
    best, best_cost = None, math.inf
    for perm in itertools.permutations(range(1, n)):
        order = [0] + list(perm)
        c = sum(m.costs[order[i], order[i + 1]] for i in range(n - 1))
        if c < best_cost:
            best, best_cost = order, c
    return Tour(order=best, cost=float(best_cost), mode=mode)


# -- plain text fixtures ------------------------------------------------------

def matrix_to_text(m):
    lines = [str(m.n)]
    for i in range(m.n):
        lines.append(" ".join(repr(float(v)) for v in m.costs[i]))
    return "\n".join(lines) + "\n"


def matrix_from_text(text):
    rows = [ln for ln in text.strip().splitlines() if ln.strip()]
    n = int(rows[0])
    costs = np.array([[float(v) for v in rows[1 + i].split()]
                      for i in range(n)], dtype=np.float64)
    if costs.shape != (n, n):
        raise ValueError("matrix text shape mismatch")
    finite = costs[np.isfinite(costs)]
    sentinel = 10.0 * float(finite.max()) if len(finite) else 10.0
    return CostMatrix(n=n, costs=costs, sentinel=sentinel)


def tour_to_text(t):
    return "{}\n{}\n{}\n".format(
        " ".join(str(i) for i in t.order), repr(float(t.cost)), t.mode.value)


def tour_from_text(text):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    order = [int(v) for v in lines[0].split()]
    return Tour(order=order, cost=float(lines[1]), mode=TourMode(lines[2]))
