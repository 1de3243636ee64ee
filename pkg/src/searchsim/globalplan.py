"""Cluster-level route planning with visiting-order memory.

Every replan solves a fresh open tour over all cluster centers (the
temporary route). A second, history-aware route keeps the previous
cycle's visiting order for clusters that barely moved (anchors) and only
re-solves the short segments between consecutive anchors. The cheaper
consistency is adopted when it costs at most a configured fraction more
than the fresh optimum; otherwise memory is discarded and rebuilt.
Keeping the order stable across replans is what stops the agent from
thrashing between far-apart goals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .routing import (EVALS, CostMatrix, MatrixMode, TourMode,
                      build_cost_matrix, solve_atsp)

__all__ = [
    "AGENT_NODE", "GlobalRoute", "HistoryState",
    "match_anchors", "update_history_route", "plan_global",
    "count_route_inversions", "route_log_line",
]

AGENT_NODE = "agent"


@dataclass
class GlobalRoute:
    """Adopted visiting order: ids (AGENT_NODE first) and their centers."""

    cluster_order: list
    centers: np.ndarray
    cost: float
    is_history: bool = False
    flagged: set = field(default_factory=set)

    def positions_of(self, cluster_id):
        return self.cluster_order.index(cluster_id)


@dataclass
class HistoryState:
    last_route: GlobalRoute = None
    d_anchor: float = 1.0
    d_cost_threshold: float = 0.3

    def __post_init__(self):
        if self.d_anchor <= 0:
            raise ValueError("d_anchor must be positive")
        if self.d_cost_threshold < 0:
            raise ValueError("d_cost_threshold must be non-negative")


def match_anchors(new_clusters, history):
    """Pair new clusters with barely-moved old route entries.

    Each new cluster looks up its nearest old center; a pair closer than
    d_anchor becomes an anchor, each old center claimable once with the
    closest new cluster winning (ties to the smaller new cluster id).
    Anchors come back ordered by old route position, with the agent
    pinned at position 0; everything unmatched is a non-anchor.
    """
    old = history.last_route
    if old is None or len(old.cluster_order) <= 1:
        return [(AGENT_NODE, 0)], [c.id for c in new_clusters]
    old_ids = old.cluster_order
    old_centers = old.centers
    candidates = []
    nearest_old = {}
    for new_pos, cl in enumerate(new_clusters):
        d = np.linalg.norm(old_centers[1:] - cl.center, axis=1)
        k = int(np.argmin(d))
        nearest_old[cl.id] = 1 + k
        if d[k] < history.d_anchor:
            candidates.append((float(d[k]), cl.id, 1 + k, new_pos))
    candidates.sort(key=lambda t: (t[0], t[1]))
    claimed = set()
    matched = {}
    for dist, new_id, old_pos, _ in candidates:
        if old_pos in claimed:
            continue
        claimed.add(old_pos)
        matched[new_id] = old_pos
    anchors = [(AGENT_NODE, 0)]
    anchors += sorted(((nid, pos) for nid, pos in matched.items()),
                      key=lambda t: t[1])
    non_anchors = [c.id for c in new_clusters if c.id not in matched]
    return anchors, non_anchors


def _assign_segments(anchors, non_anchors, matrix, idx_of):
    """Map each non-anchor to the anchor gap that absorbs it cheapest.

    A non-anchor belongs between the consecutive anchor pair whose leg
    it detours least, measured on the already-priced matrix: inserting
    after the last anchor costs just the hop from it (open tail). A
    nearest-old-center rule was tried here first and systematically
    produced fly-past-then-return routes whenever a new cluster appeared
    on the corridor toward the first anchor. Returns {gap index: [ids]}.
    """
    a_idx = [idx_of[nid] if nid != AGENT_NODE else 0 for nid, _ in anchors]
    c = matrix.costs
    buckets = {i: [] for i in range(len(anchors))}
    for nid in non_anchors:
        x = idx_of[nid]
        best, best_d = 0, np.inf
        for k in range(len(anchors)):
            if k < len(anchors) - 1:
                d = c[a_idx[k], x] + c[x, a_idx[k + 1]] - c[a_idx[k], a_idx[k + 1]]
            else:
                d = c[a_idx[k], x]
            if d < best_d - 1e-12:
                best, best_d = k, d
        buckets[best].append(nid)
    return buckets


def update_history_route(new_clusters, history, grid, motion, agent_pos,
                         matrix=None, node_ids=None, counter=EVALS):
    """Re-solve only the gaps between anchors, keeping their order.

    Consecutive anchors become fixed start/end pairs; the non-anchors
    assigned to the gap are ordered by a small pinned-ends tour over the
    already-priced cost matrix. Non-anchors landing after the final
    anchor are appended as an open tail. Junction nodes are deduplicated
    so every cluster appears exactly once.
    """
    anchors, non_anchors = match_anchors(new_clusters, history)
    if matrix is None or node_ids is None:
        nodes = [np.asarray(agent_pos, dtype=np.float64)]
        nodes += [c.center for c in new_clusters]
        node_ids = [AGENT_NODE] + [c.id for c in new_clusters]
        matrix = build_cost_matrix(nodes, grid, motion, MatrixMode.GLOBAL,
                                   counter=counter)
    idx_of = {nid: i for i, nid in enumerate(node_ids)}
    buckets = _assign_segments(anchors, non_anchors, matrix, idx_of)

    full_order = [0]
    for k in range(len(anchors)):
        nid_k = anchors[k][0]
        tail = k == len(anchors) - 1
        middle = [idx_of[nid] for nid in buckets[k]]
        if tail:
            if middle:
                sub = [idx_of[nid_k]] + middle
                t = _solve_sub(matrix, sub, TourMode.OPEN_FROM_START)
                full_order += [sub[i] for i in t.order[1:]]
        else:
            nid_next = anchors[k + 1][0]
            sub = [idx_of[nid_k]] + middle + [idx_of[nid_next]]
            if len(sub) == 2:
                full_order.append(sub[1])
            else:
                t = _solve_sub(matrix, sub, TourMode.FIXED_START_END)
                full_order += [sub[i] for i in t.order[1:]]
    return _route_from_order(full_order, node_ids, matrix,
                             _node_centers(new_clusters, agent_pos, matrix,
                                           node_ids), is_history=True)


def _node_centers(new_clusters, agent_pos, matrix, node_ids):
    by_id = {c.id: c.center for c in new_clusters}
    out = []
    for nid in node_ids:
        if nid == AGENT_NODE:
            out.append(np.asarray(agent_pos, dtype=np.float64))
        else:
            out.append(by_id[nid])
    return np.array(out)


def _solve_sub(matrix, sub, mode):
    costs = matrix.costs[np.ix_(sub, sub)].copy()
    m = CostMatrix(n=len(sub), costs=costs, sentinel=matrix.sentinel,
                   unreachable={(i, j) for i in range(len(sub))
                                for j in range(len(sub))
                                if (sub[i], sub[j]) in matrix.unreachable})
    if mode is TourMode.FIXED_START_END:
        return solve_atsp(m, mode, end=len(sub) - 1)
    return solve_atsp(m, mode)


def _route_from_order(order, node_ids, matrix, centers, is_history):
    cost = float(sum(matrix.costs[order[i], order[i + 1]]
                     for i in range(len(order) - 1)))
    flagged = {node_ids[order[i + 1]]
               for i in range(len(order) - 1)
               if (order[i], order[i + 1]) in matrix.unreachable}
    return GlobalRoute(cluster_order=[node_ids[i] for i in order],
                       centers=centers[order], cost=cost,
                       is_history=is_history, flagged=flagged)


def plan_global(new_clusters, history, grid, motion, agent_pos,
                graph=None, counter=EVALS):
    """One global planning cycle; returns (route, history) updated.

    A fresh open tour is always solved; the history-aware variant is
    adopted instead when its relative extra cost stays within the
    threshold. Rejection resets memory to the fresh route.
    """
    if not new_clusters:
        raise ValueError("plan_global needs at least one cluster")
    nodes = [np.asarray(agent_pos, dtype=np.float64)]
    nodes += [c.center for c in new_clusters]
    node_ids = [AGENT_NODE] + [c.id for c in new_clusters]
    matrix = build_cost_matrix(nodes, grid, motion, MatrixMode.GLOBAL,
                               graph=graph, counter=counter)
    centers = np.array([np.asarray(n, dtype=np.float64) for n in nodes])
    temp_tour = solve_atsp(matrix, TourMode.OPEN_FROM_START)
    temp = _route_from_order(temp_tour.order, node_ids, matrix, centers,
                             is_history=False)
    if history.last_route is None:
        history.last_route = temp
        return temp, history
    hist = update_history_route(new_clusters, history, grid, motion,
                                agent_pos=agent_pos, matrix=matrix,
                                node_ids=node_ids, counter=counter)
    if temp.cost > 0:
        gap = (hist.cost - temp.cost) / temp.cost
    else:
        gap = 0.0 if hist.cost <= 0 else float("inf")
    adopted = hist if gap <= history.d_cost_threshold else temp
    history.last_route = adopted
    return adopted, history


def count_route_inversions(prev_order, new_order):
    """Pairs of shared ids whose relative order flipped between routes."""
    shared = [i for i in new_order if i in prev_order and i != AGENT_NODE]
    rank = {cid: prev_order.index(cid) for cid in shared}
    seq = [rank[cid] for cid in shared]
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return inv


def route_log_line(cycle, route):
    ids = ",".join(route.cluster_order)
    return (f"cycle={cycle} is_history={int(route.is_history)} "
            f"cost={route.cost!r} order={ids}")
