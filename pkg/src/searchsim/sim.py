"""Closed-loop search simulation.

One cycle: sense and fold observations into the map, extract frontier
and uninspected clusters, sample and score viewpoints, group them into
visibility clusters, solve the global visiting order, order the first
cluster's viewpoints locally, then fly the first leg while sensing at a
fixed model-time cadence. The loop ends when everything reachable is
mapped and inspected, or when the model-time budget runs out.

All timing is model time derived from the motion model, so metrics are
machine-independent; wall-clock planner latency is tracked separately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPoseError, StallError, UnreachableError
from .geometry import Pose, wrap_angle
from .grid import (MapConfig, VoxelGrid, detect_targets,
                   integrate_camera_frame, integrate_range_scan,
                   is_search_complete)
from .globalplan import (HistoryState, count_route_inversions,
                         plan_global)
from .localplan import AgentState, MotionModel, plan_local
from .routing import EVALS, GridGraph
from .sensors import compute_reachable_mask, lidar_directions, simulate_lidar
from .surface import build_clusters
from .viewpoints import (ScoreWeights, sample_viewpoints, score_candidates,
                         select_best)
from .vpclusters import ViewpointCluster, cluster_viewpoints

__all__ = ["CycleRecord", "SearchMetrics", "run", "run_ablation"]


@dataclass
class CycleRecord:
    """Per-replan bookkeeping for the complexity claims."""

    cycle: int
    n_viewpoints: int        # N: viewpoints selected this cycle
    n_clusters: int          # n1: viewpoint clusters (global nodes - 1)
    n_local: int             # n2: local matrix size
    evals_global: int
    evals_local: int
    flat_equiv: int          # (N+1)*N: flat planner evaluations for N

    @property
    def evals_total(self):
        return self.evals_global + self.evals_local


@dataclass
class SearchMetrics:
    path_length: float = 0.0
    model_time: float = 0.0
    completeness: float = 1.0
    targets_found: list = field(default_factory=list)   # (index, time)
    replan_count: int = 0
    route_inversion_count: int = 0
    cycles: list = field(default_factory=list)
    latency_mean_ms: float = 0.0
    latency_max_ms: float = 0.0
    completed: bool = False


def _map_config(cfg, world):
    h = world.dims[2] * world.resolution
    lo, hi = cfg.band_low, cfg.band_high
    if lo < 0 or hi < 0:
        lo = world.resolution + cfg.clearance
        hi = h - world.resolution - cfg.clearance
        if hi < lo:
            lo = hi = h / 2.0
    return MapConfig(d_max=cfg.d_max, lidar_range=cfg.lidar_range,
                     camera_fov=(cfg.camera_fov_h, cfg.camera_fov_v),
                     agent_height_band=(lo, hi))


def _jittered_start(world, start, cfg, rng):
    """Seeded start pose: xy jitter inside the clearance envelope."""
    base = np.array(start[:3], dtype=np.float64)
    base_yaw = float(start[3])

    def ok(p):
        c = cfg.clearance
        lo = p - c
        hi = p + c
        if not (world.contains(lo) and world.contains(hi)):
            return False
        a = world._index_of(lo)
        b = world._index_of(hi)
        block = world.solid[a[0]:b[0] + 1, a[1]:b[1] + 1, a[2]:b[2] + 1]
        return not block.any()

    yaw = wrap_angle(base_yaw + float(rng.uniform(-math.pi, math.pi)))
    for _ in range(50):
        d = rng.uniform(-cfg.start_jitter, cfg.start_jitter, size=2)
        p = base + np.array([d[0], d[1], 0.0])
        if ok(p):
            return p, yaw
    if not ok(base):
        raise InvalidPoseError(f"start pose {tuple(base)} lacks clearance")
    return base, yaw


class _PolylineWalker:
    """Constant-speed walk along a polyline with yaw slewing."""

    def __init__(self, pts, duration, yaw0, yaw1):
        self.pts = np.asarray(pts, dtype=np.float64)
        seg = np.diff(self.pts, axis=0)
        self.seg_len = np.sqrt((seg ** 2).sum(axis=1))
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.length = float(self.cum[-1])
        self.duration = max(float(duration), 1e-9)
        self.speed = self.length / self.duration
        self.yaw0 = yaw0
        self.dyaw = wrap_angle(yaw1 - yaw0)

    def pose_at(self, t):
        t = min(max(t, 0.0), self.duration)
        s = self.speed * t
        k = int(np.searchsorted(self.cum, s, side="right")) - 1
        k = min(max(k, 0), len(self.seg_len) - 1) if len(self.seg_len) else 0
        if len(self.seg_len) == 0 or self.seg_len[k] < 1e-12:
            p = self.pts[-1]
        else:
            f = (s - self.cum[k]) / self.seg_len[k]
            f = min(max(f, 0.0), 1.0)
            p = self.pts[k] + f * (self.pts[k + 1] - self.pts[k])
        yaw = wrap_angle(self.yaw0 + self.dyaw * (t / self.duration))
        return p.copy(), yaw

    def direction_at_end(self):
        for k in range(len(self.seg_len) - 1, -1, -1):
            if self.seg_len[k] > 1e-12:
                return (self.pts[k + 1] - self.pts[k]) / self.seg_len[k]
        return np.zeros(3)


def _sense(grid, world, pose, mcfg, dirs, found, t, metrics):
    scan = simulate_lidar(world, pose, dirs, mcfg.lidar_range)
    changed = integrate_range_scan(grid, pose, scan)
    integrate_camera_frame(grid, pose, mcfg, blocked=world.solid)
    fresh = detect_targets(grid, pose, mcfg, world.targets,
                           blocked=world.solid)
    for idx in fresh:
        if idx not in found:
            found.add(idx)
            metrics.targets_found.append((idx, t))
    return changed


def _singleton_clusters(vps):
    return [ViewpointCluster(members=[vp], center=np.asarray(vp.position))
            for vp in vps]


def _z_offsets_for(cluster, mcfg, cfg):
    """Shell offsets for one cluster, with the band-clamped height added.

    Surface patches near the floor or ceiling sit outside the band, and
    the configured offsets may only reach them at camera pitch angles
    outside the vertical field of view. The nearest in-band height keeps
    one sample ring as level with the patch as the band allows.
    """
    lo, hi = mcfg.agent_height_band
    cz = float(cluster.centroid[2])
    offs = list(cfg.vp_z_offsets)
    offs.append(min(max(cz, lo), hi) - cz)
    return tuple(sorted(set(round(dz, 9) for dz in offs)))


def run(world, cfg, vc=True, hagp=True, hooks=None):
    """Execute one full search mission; see module docstring.

    vc=False plans over every viewpoint individually (no visibility
    clustering); hagp=False forgets the previous route every cycle.
    Returns (SearchMetrics, trajectory array of (t, x, y, z, yaw) rows,
    final VoxelGrid).
    """
    hooks = hooks or {}
    rng = np.random.default_rng(cfg.seed)
    mcfg = _map_config(cfg, world)
    start_pos, start_yaw = _jittered_start(world, world.start, cfg, rng)
    if not (mcfg.agent_height_band[0] - 1e-9 <= start_pos[2]
            <= mcfg.agent_height_band[1] + 1e-9):
        raise InvalidPoseError(
            f"start z {start_pos[2]} outside flight band "
            f"{mcfg.agent_height_band}")
    grid = VoxelGrid(world.origin, world.resolution, world.dims)
    reach = compute_reachable_mask(world, start_pos)
    dirs = lidar_directions(cfg.az_step, cfg.el_step)
    weights = ScoreWeights(w_uni=cfg.w_uni, w_unk=cfg.w_unk)
    motion = MotionModel(v_max=cfg.v_max, a_max=cfg.a_max, w_max=cfg.w_max)
    history = HistoryState(d_anchor=cfg.d_anchor,
                           d_cost_threshold=cfg.d_cost_threshold)
    agent = AgentState(position=start_pos, velocity=np.zeros(3),
                       yaw=start_yaw)
    metrics = SearchMetrics()
    found = set()
    trajectory = [(0.0, *agent.position, agent.yaw)]
    latencies = []
    prev_order = None
    t = 0.0
    _sense(grid, world, Pose(agent.position, agent.yaw), mcfg, dirs, found,
           t, metrics)
    stagnant = 0
    prev_sig = None

    while t < cfg.budget:
        if is_search_complete(grid, mcfg, reach):
            metrics.completed = True
            break
        wall0 = time.perf_counter()
        graph = GridGraph(grid, cfg.clearance, z_band=mcfg.agent_height_band)
        try:
            dist0 = graph.distance_field(agent.position)
        except UnreachableError:
            dist0 = None
        frontier_cl, unins_cl = build_clusters(grid, mcfg,
                                               cfg.split_threshold)
        clusters = frontier_cl + unins_cl
        if not clusters:
            raise StallError("no clusters while search incomplete",
                             dump=_dump(grid, mcfg, t))
        frontier_cells = sorted({tuple(c) for cl in frontier_cl
                                 for c in map(tuple, cl.cells)})
        fr_centers = (grid.index_to_center(np.array(frontier_cells))
                      if frontier_cells else np.zeros((0, 3)))
        un_cells = [tuple(c) for cl in unins_cl for c in map(tuple, cl.cells)]
        un_centers = (grid.index_to_center(np.array(sorted(un_cells)))
                      if un_cells else np.zeros((0, 3)))
        stride_f = _stride(len(fr_centers), cfg.score_cap)
        stride_u = _stride(len(un_centers), cfg.score_cap)

        selected = []
        funnel = [0, 0, 0, 0]
        # patches in slots narrower than the smallest shell need closer
        # rings; half the configured radii, floored above the clearance
        radii_near = tuple(max(0.5 * r, 2.0 * cfg.clearance)
                           for r in cfg.vp_radii)
        # widening ladder: densify azimuths before shrinking the shell,
        # so tight corners and narrow slots each get one bounded retry
        attempts = ((None, cfg.vp_azimuths),
                    (None, cfg.vp_azimuths * 3),
                    (radii_near, cfg.vp_azimuths),
                    (radii_near, cfg.vp_azimuths * 3))
        for cl in clusters:
            cands = []
            counts = (0, 0, 0, 0)
            used_near = False
            for radii, n_az in attempts:
                cands, counts = _feasible_candidates(cl, grid, mcfg, cfg,
                                                     graph, dist0, agent,
                                                     n_az, radii=radii)
                if cands:
                    used_near = radii is not None
                    break
            funnel = [f + c for f, c in zip(funnel, counts)]
            if not cands:
                continue   # dormant cluster, revisited when the map grows
            stride = (stride_f if cl.kind.value == "frontier" else stride_u)
            score_candidates(cands, cl, grid, mcfg, weights, fr_centers,
                             un_centers, stride=stride)
            best = select_best(cands)
            if best.s_info <= 0.0 and not used_near:
                # the wide shell flies past without inspecting; retry
                # closer in before committing to a useless hop
                near, _ = _feasible_candidates(cl, grid, mcfg, cfg, graph,
                                               dist0, agent, cfg.vp_azimuths,
                                               radii=radii_near)
                if near:
                    score_candidates(near, cl, grid, mcfg, weights,
                                     fr_centers, un_centers, stride=stride)
                    best2 = select_best(near)
                    if best2.s_info > 0.0:
                        best = best2
            selected.append(best)
        if not selected:
            dump = _dump(grid, mcfg, t)
            dump.update(n_clusters=len(clusters), cand_sampled=funnel[0],
                        cand_in_band=funnel[1], cand_reachable=funnel[2],
                        cand_fresh=funnel[3])
            raise StallError("no feasible viewpoints while incomplete",
                             dump=dump)

        if vc:
            vcl = cluster_viewpoints(selected, grid, agent.position,
                                     cfg.r_vp, clearance=cfg.clearance)
        else:
            vcl = _singleton_clusters(selected)
        if "on_clusters" in hooks:
            hooks["on_clusters"](vcl, grid, agent.position)

        if not hagp:
            history.last_route = None
        e0 = EVALS.count
        route, history = plan_global(vcl, history, grid, motion,
                                     agent.position, graph=graph)
        evals_global = EVALS.count - e0
        if prev_order is not None:
            metrics.route_inversion_count += count_route_inversions(
                prev_order, route.cluster_order)
        prev_order = list(route.cluster_order)
        if "on_route" in hooks:
            hooks["on_route"](metrics.replan_count, route)

        first_id = route.cluster_order[1]
        first = next(c for c in vcl if c.id == first_id)
        next_center = route.centers[2] if len(route.cluster_order) > 2 else None
        if next_center is not None and not _point_reachable(graph, dist0,
                                                            next_center):
            # mean of member positions can land inside an obstacle; an
            # unreachable exit bias is meaningless, plan open-ended
            next_center = None
        e0 = EVALS.count
        plan = plan_local(first.members, agent, next_center, graph, motion)
        evals_local = EVALS.count - e0
        latencies.append((time.perf_counter() - wall0) * 1000.0)

        n_vp = len(selected)
        metrics.cycles.append(CycleRecord(
            cycle=metrics.replan_count, n_viewpoints=n_vp,
            n_clusters=len(vcl), n_local=len(first.members) + 1 +
            (1 if next_center is not None else 0),
            evals_global=evals_global, evals_local=evals_local,
            flat_equiv=(n_vp + 1) * n_vp))
        metrics.replan_count += 1

        target_vp = plan.viewpoints[0]
        walker = _PolylineWalker(plan.legs[0], plan.durations[0],
                                 agent.yaw, target_vp.yaw)
        t, aborted = _execute(walker, grid, world, mcfg, dirs, found, t,
                              metrics, trajectory, cfg)
        if aborted:
            p, yaw = trajectory[-1][1:4], trajectory[-1][4]
            agent = AgentState(position=np.array(p), velocity=np.zeros(3),
                               yaw=yaw)
        else:
            speed = min(walker.speed, motion.v_max)
            agent = AgentState(position=np.asarray(target_vp.position),
                               velocity=walker.direction_at_end() * speed,
                               yaw=target_vp.yaw)
        sig = (grid.counts(), tuple(np.round(agent.position, 6)))
        stagnant = stagnant + 1 if sig == prev_sig else 0
        prev_sig = sig
        if stagnant >= 3:
            raise StallError("no progress across three replans",
                             dump=_dump(grid, mcfg, t))

    metrics.model_time = t
    metrics.path_length = _traj_length(trajectory)
    if len(world.targets):
        metrics.completeness = len(found) / len(world.targets)
    metrics.latency_mean_ms = float(np.mean(latencies)) if latencies else 0.0
    metrics.latency_max_ms = float(np.max(latencies)) if latencies else 0.0
    return metrics, np.array(trajectory), grid


def _execute(walker, grid, world, mcfg, dirs, found, t0, metrics,
             trajectory, cfg):
    """Fly one leg, sensing every integrate_dt of model time.

    Returns (new model time, aborted). The leg aborts when a freshly
    mapped obstacle lands on the remaining polyline (stall recovery) or,
    under the EveryMapChange trigger, when any integration changes the
    map.
    """
    dt = cfg.integrate_dt
    n_ticks = max(1, int(math.ceil(walker.duration / dt - 1e-9)))
    for k in range(1, n_ticks + 1):
        tk = min(k * dt, walker.duration)
        p, yaw = walker.pose_at(tk)
        t = t0 + tk
        if t > cfg.budget:
            return cfg.budget, True
        trajectory.append((t, p[0], p[1], p[2], yaw))
        changed = _sense(grid, world, Pose(p, yaw), mcfg, dirs, found, t,
                         metrics)
        if cfg.replan_trigger == "EveryMapChange" and changed and \
                tk < walker.duration:
            return t, True
        if tk < walker.duration and _path_blocked(walker, tk, grid):
            return t, True
    return t0 + walker.duration, False


def _path_blocked(walker, t, grid):
    from ._kernels import OCCUPIED

    s = walker.speed * t
    ahead = walker.pts[np.searchsorted(walker.cum, s, side="left"):]
    for p in ahead:
        if grid.contains(p) and grid.state[grid.world_to_index(p)] == OCCUPIED:
            return True
    return False


def _stride(n, cap):
    if cap <= 0 or n <= cap:
        return 1
    return int(math.ceil(n / cap))


def _in_band(vp, mcfg):
    lo, hi = mcfg.agent_height_band
    return lo - 1e-9 <= vp.position[2] <= hi + 1e-9


def _at_agent_pose(vp, agent):
    if float(np.max(np.abs(vp.position - agent.position))) > 1e-9:
        return False
    return abs(wrap_angle(vp.yaw - agent.yaw)) < 1e-9


def _feasible_candidates(cl, grid, mcfg, cfg, graph, dist0, agent, n_azimuth,
                         radii=None):
    """Sample one cluster's shell and run the feasibility filters.

    Returns (candidates, funnel counts) where the counts tally samples
    surviving each stage: raw, in flight band, path-reachable, not at
    the agent's current pose.
    """
    cands = sample_viewpoints(cl, grid, mcfg,
                              radii=cfg.vp_radii if radii is None else radii,
                              n_azimuth=n_azimuth,
                              z_offsets=_z_offsets_for(cl, mcfg, cfg),
                              clearance=cfg.clearance)
    raw = len(cands)
    cands = [v for v in cands if _in_band(v, mcfg)]
    in_band = len(cands)
    # Only viewpoints with a traversable path from the agent are
    # plannable this cycle; the rest stay dormant until the map opens
    # a corridor.
    cands = [v for v in cands if _point_reachable(graph, dist0, v.position)]
    reachable = len(cands)
    # A sample at the agent's exact pose cannot add information:
    # sensing from that pose already happened on arrival.
    cands = [v for v in cands if not _at_agent_pose(v, agent)]
    return cands, (raw, in_band, reachable, len(cands))


def _point_reachable(graph, dist0, point):
    if dist0 is None:
        return False
    try:
        cell = graph.snap(point)
    except UnreachableError:
        return False
    return math.isfinite(float(dist0[cell]))


def _traj_length(trajectory):
    pts = np.array([(r[1], r[2], r[3]) for r in trajectory])
    if len(pts) < 2:
        return 0.0
    return float(np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1)).sum())


def _dump(grid, mcfg, t):
    n_unk, n_free, n_occ = grid.counts()
    from .grid import uninspected_set
    return {"model_time": t, "unknown": n_unk, "free": n_free,
            "occupied": n_occ, "uninspected": len(uninspected_set(grid, mcfg))}


def run_ablation(world, cfg, toggles):
    """Mission with pipeline stages toggled; returns metrics only."""
    metrics, _, _ = run(world, cfg, vc=bool(toggles.get("vc", True)),
                        hagp=bool(toggles.get("hagp", True)))
    return metrics
