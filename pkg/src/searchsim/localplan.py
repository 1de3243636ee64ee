"""Viewpoint-level route planning and kinematic edge costs.

Edge costs are travel times under a simple flight model: accelerate
toward the goal up to a velocity cap, bleed off any perpendicular
velocity, and slew yaw at a bounded rate; the slowest of the three
dominates. The first leg away from the agent accounts for its current
velocity vector, later legs assume rest-to-rest motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoViewpointError, UnreachableError
from .geometry import position_of, wrap_angle, yaw_of
from .routing import (EVALS, GridGraph, MatrixMode, TourMode,
                      build_cost_matrix, solve_atsp)

__all__ = [
    "MotionModel", "AgentState", "Waypoint", "LocalPlan",
    "time_aligned", "cost_from_state", "cost_between", "plan_local",
]


@dataclass
class MotionModel:
    v_max: float = 2.0
    a_max: float = 1.5
    w_max: float = 1.2

    def __post_init__(self):
        if min(self.v_max, self.a_max, self.w_max) <= 0:
            raise ValueError("motion limits must be positive")


@dataclass
class AgentState:
    position: np.ndarray
    velocity: np.ndarray
    yaw: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.velocity = np.asarray(self.velocity, dtype=np.float64)
        self.yaw = wrap_angle(float(self.yaw))


@dataclass
class Waypoint:
    """A pure position node (no observation yaw), e.g. a handoff point
    toward the next cluster; yaw-gap terms treat it as free."""

    position: np.ndarray
    yaw: float = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)


@dataclass
class LocalPlan:
    viewpoints: list
    path: np.ndarray
    durations: list
    order: list
    cost: float
    endpoint: np.ndarray = None
    legs: list = None               # per-leg polylines (world points)


def time_aligned(v_ali, l, m):
    """Travel time along a straight line of length l starting at speed
    v_ali: accelerate at a_max, cruise at v_max if the cap is reached
    before l is covered. Continuous across the branch point.
    """
    if l < 0:
        raise ValueError("length must be non-negative")
    v0 = min(max(v_ali, 0.0), m.v_max)
    a = m.a_max
    ramp = (m.v_max * m.v_max - v0 * v0) / (2.0 * a)
    if ramp < l:
        return (m.v_max - v0) / a + (l - ramp) / m.v_max
    return (math.sqrt(v0 * v0 + 2.0 * a * l) - v0) / a


def _graph_of(grid):
    if isinstance(grid, GridGraph):
        return grid
    return GridGraph(grid, clearance=0.3)


def cost_from_state(s, vp, m, grid):
    """First-leg travel time from a moving agent to a viewpoint.

    The agent velocity splits against the straight line to the target:
    the aligned part seeds the acceleration profile, the perpendicular
    part costs 2*v_per/a_max to cancel, and the yaw gap costs its slew
    time. The largest of the three is the edge cost. Returns inf when no
    path exists (callers map it to a sentinel).
    """
    g = _graph_of(grid)
    p0 = position_of(s)
    p1 = position_of(vp)
    try:
        l = g.length_between(p0, p1)
    except UnreachableError:
        return math.inf
    if not math.isfinite(l):
        return math.inf
    d = p1 - p0
    dn = np.linalg.norm(d)
    v = np.asarray(s.velocity, dtype=np.float64)
    if dn > 1e-12:
        u = d / dn
        v_ali = max(float(np.dot(v, u)), 0.0)
        v_per = float(np.linalg.norm(v - np.dot(v, u) * u))
    else:
        v_ali = float(np.linalg.norm(v))
        v_per = 0.0
    t_ali = time_aligned(v_ali, l, m)
    t_per = 2.0 * v_per / m.a_max
    vy = yaw_of(vp) if getattr(vp, "yaw", None) is not None else s.yaw
    t_yaw = abs(wrap_angle(vy - s.yaw)) / m.w_max
    return max(t_ali, t_per, t_yaw)


def cost_between(vp_i, vp_j, m, grid):
    """Rest-to-rest travel time between viewpoints: path time at v_max
    against yaw slew time, whichever dominates."""
    g = _graph_of(grid)
    p0 = position_of(vp_i)
    p1 = position_of(vp_j)
    yi = getattr(vp_i, "yaw", None)
    yj = getattr(vp_j, "yaw", None)
    gap = 0.0 if yi is None or yj is None else abs(wrap_angle(yj - yi))
    if np.array_equal(p0, p1) and gap == 0.0:
        return 0.0
    try:
        l = g.length_between(p0, p1)
    except UnreachableError:
        return math.inf
    if not math.isfinite(l):
        return math.inf
    return max(l / m.v_max, gap / m.w_max)


def plan_local(members, agent, next_center, grid, motion, counter=EVALS):
    """Order a cluster's viewpoints and stitch the executable path.

    With a next cluster the tour is pinned to end at its center (a plain
    waypoint); without one the tour is open. The polyline runs from the
    agent's exact position through voxel centers of each shortest-path
    leg. Per-leg durations come straight from the cost matrix.
    """
    if not members:
        raise NoViewpointError("no viewpoints to plan over")
    g = _graph_of(grid)
    nodes = [agent] + list(members)
    end_idx = None
    if next_center is not None:
        nodes.append(Waypoint(position=np.asarray(next_center, dtype=np.float64)))
        end_idx = len(nodes) - 1
    m = build_cost_matrix(nodes, g.grid, motion, MatrixMode.LOCAL, graph=g,
                          counter=counter)
    if end_idx is not None:
        tour = solve_atsp(m, TourMode.FIXED_START_END, end=end_idx)
    else:
        tour = solve_atsp(m, TourMode.OPEN_FROM_START)
    order = tour.order
    pts = [np.asarray(position_of(agent), dtype=np.float64)]
    durations = []
    legs = []
    for k in range(len(order) - 1):
        a = nodes[order[k]]
        b = nodes[order[k + 1]]
        leg, _ = g.path(position_of(a), position_of(b))
        centers = g.grid.index_to_center(leg)
        # Leg polyline runs exact start -> voxel centers -> exact goal so
        # observation poses are hit precisely, not just their cells.
        leg_pts = [np.asarray(position_of(a), dtype=np.float64)]
        leg_pts += [row for row in centers]
        leg_pts.append(np.asarray(position_of(b), dtype=np.float64))
        legs.append(np.array(leg_pts))
        start = 1 if len(pts) > 1 else 0  # drop duplicated junction center
        for row in centers[start:]:
            pts.append(row)
        durations.append(m.cost(order[k], order[k + 1]))
    ordered = [nodes[i] for i in order if 0 < i and (end_idx is None or i != end_idx)]
    return LocalPlan(viewpoints=ordered, path=np.array(pts), durations=durations,
                     order=order, cost=tour.cost,
                     endpoint=None if next_center is None
                     else np.asarray(next_center, dtype=np.float64),
                     legs=legs)
