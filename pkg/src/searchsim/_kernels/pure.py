"""Pure-Python kernel backend.

Reference implementation of the hot numeric paths: supercover voxel ray
traversal, range-sensor sweeps, scan integration, grid shortest paths
(A* and Dijkstra with a hand-rolled binary heap) and small asymmetric
TSP solvers (Held-Karp, nearest-neighbour, 2-opt/Or-opt improvement).

The compiled backend (core.pyx) mirrors every routine expression for
expression so that results are bitwise identical across backends; keep
the two files in sync when changing anything here.
"""

from __future__ import annotations

import math

import numpy as np

_INF = math.inf


# ---------------------------------------------------------------------------
# Supercover ray traversal
# ---------------------------------------------------------------------------

def _walk(ax, ay, az, bx, by, bz, nx, ny, nz):
    """Yield (i, j, k) cells touched by the segment a -> b, in order.

    Coordinates are in grid units: cell (i, j, k) spans [i, i+1) on each
    axis. Supercover semantics: when the segment crosses a cell edge or
    corner exactly, the side cells sharing that corner are yielded too
    (x side first, then y, then z), so every cell whose closed cube the
    segment intersects is reported. Side cells outside the grid are
    skipped; both endpoints must lie inside the grid.
    """
    i = int(math.floor(ax))
    j = int(math.floor(ay))
    k = int(math.floor(az))
    ei = int(math.floor(bx))
    ej = int(math.floor(by))
    ek = int(math.floor(bz))
    dx = bx - ax
    dy = by - ay
    dz = bz - az
    sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    sz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
    if sx > 0:
        tmx = (float(i + 1) - ax) / dx
        tdx = 1.0 / dx
    elif sx < 0:
        tmx = (float(i) - ax) / dx
        tdx = -1.0 / dx
    else:
        tmx = _INF
        tdx = _INF
    if sy > 0:
        tmy = (float(j + 1) - ay) / dy
        tdy = 1.0 / dy
    elif sy < 0:
        tmy = (float(j) - ay) / dy
        tdy = -1.0 / dy
    else:
        tmy = _INF
        tdy = _INF
    if sz > 0:
        tmz = (float(k + 1) - az) / dz
        tdz = 1.0 / dz
    elif sz < 0:
        tmz = (float(k) - az) / dz
        tdz = -1.0 / dz
    else:
        tmz = _INF
        tdz = _INF

    yield (i, j, k)
    while i != ei or j != ej or k != ek:
        m = tmx
        if tmy < m:
            m = tmy
        if tmz < m:
            m = tmz
        if m > 1.0:
            # Numerical safety: the segment end was passed without the
            # end cell being reached exactly; stop.
            break
        hx = tmx == m
        hy = tmy == m
        hz = tmz == m
        nh = int(hx) + int(hy) + int(hz)
        if nh == 1:
            if hx:
                i += sx
                tmx += tdx
            elif hy:
                j += sy
                tmy += tdy
            else:
                k += sz
                tmz += tdz
            yield (i, j, k)
        elif nh == 2:
            if hx and hy:
                si = i + sx
                sj = j + sy
                if 0 <= si < nx:
                    yield (si, j, k)
                if 0 <= sj < ny:
                    yield (i, sj, k)
                i = si
                j = sj
                tmx += tdx
                tmy += tdy
            elif hx and hz:
                si = i + sx
                sk = k + sz
                if 0 <= si < nx:
                    yield (si, j, k)
                if 0 <= sk < nz:
                    yield (i, j, sk)
                i = si
                k = sk
                tmx += tdx
                tmz += tdz
            else:
                sj = j + sy
                sk = k + sz
                if 0 <= sj < ny:
                    yield (i, sj, k)
                if 0 <= sk < nz:
                    yield (i, j, sk)
                j = sj
                k = sk
                tmy += tdy
                tmz += tdz
            yield (i, j, k)
        else:
            si = i + sx
            sj = j + sy
            sk = k + sz
            if 0 <= si < nx:
                yield (si, j, k)
            if 0 <= sj < ny:
                yield (i, sj, k)
            if 0 <= sk < nz:
                yield (i, j, sk)
            if 0 <= si < nx and 0 <= sj < ny:
                yield (si, sj, k)
            if 0 <= si < nx and 0 <= sk < nz:
                yield (si, j, sk)
            if 0 <= sj < ny and 0 <= sk < nz:
                yield (i, sj, sk)
            i = si
            j = sj
            k = sk
            tmx += tdx
            tmy += tdy
            tmz += tdz
            yield (i, j, k)


def trace_ray(blocked, p0, p1, origin, res, stop_at_blocked=True):
    """Trace the segment p0 -> p1 through the grid.

    blocked: uint8 grid, nonzero cells block the ray.
    Returns (cells, hit): cells is an int64 (n, 3) array in visit order;
    when stop_at_blocked and a blocking cell is entered, it is the last
    row and hit is True. Endpoints must be inside the grid bounds.
    """
    nx, ny, nz = blocked.shape
    ox = float(origin[0])
    oy = float(origin[1])
    oz = float(origin[2])
    r = float(res)
    ax = (float(p0[0]) - ox) / r
    ay = (float(p0[1]) - oy) / r
    az = (float(p0[2]) - oz) / r
    bx = (float(p1[0]) - ox) / r
    by = (float(p1[1]) - oy) / r
    bz = (float(p1[2]) - oz) / r
    cells = []
    hit = False
    for c in _walk(ax, ay, az, bx, by, bz, nx, ny, nz):
        cells.append(c)
        if stop_at_blocked and blocked[c[0], c[1], c[2]]:
            hit = True
            break
    out = np.array(cells, dtype=np.int64)
    return out.reshape(len(cells), 3), hit


def rays_visible(blocked, p0, targets, origin, res):
    """Line-of-sight from p0 to each target point.

    A target is visible when the segment reaches the cell containing the
    target before entering any other blocking cell; the target cell
    itself may be blocked (surface voxels are their own targets).
    Returns uint8[N].
    """
    nx, ny, nz = blocked.shape
    ox = float(origin[0])
    oy = float(origin[1])
    oz = float(origin[2])
    r = float(res)
    ax = (float(p0[0]) - ox) / r
    ay = (float(p0[1]) - oy) / r
    az = (float(p0[2]) - oz) / r
    n = targets.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    for t in range(n):
        tx = float(targets[t, 0])
        ty = float(targets[t, 1])
        tz = float(targets[t, 2])
        bx = (tx - ox) / r
        by = (ty - oy) / r
        bz = (tz - oz) / r
        ti = int(math.floor(bx))
        tj = int(math.floor(by))
        tk = int(math.floor(bz))
        for (i, j, k) in _walk(ax, ay, az, bx, by, bz, nx, ny, nz):
            if i == ti and j == tj and k == tk:
                out[t] = 1
                break
            if blocked[i, j, k]:
                break
    return out


def lidar_sweep(occ, p0, dirs, max_range, origin, res):
    """Cast unit-direction rays from p0 until an occupied cell or range cap.

    occ: uint8 occupancy of the ground-truth world (nonzero = occupied).
    Returns (t, hit, cell): for hit rays t is the distance to the struck
    cell's centre (may exceed max_range by under half a cell diagonal)
    and cell[r] holds the struck cell's indices; for misses t is
    max_range, shortened where the grid boundary is closer so that
    p0 + t*dir always stays inside the grid, and cell[r] is -1. The
    explicit cell output exists because recomputing the end cell from
    the float endpoint is ambiguous for corner-grazing rays.
    """
    nx, ny, nz = occ.shape
    ox = float(origin[0])
    oy = float(origin[1])
    oz = float(origin[2])
    r = float(res)
    px = float(p0[0])
    py = float(p0[1])
    pz = float(p0[2])
    mr = float(max_range)
    margin = 1e-7
    lo_x = ox + margin
    lo_y = oy + margin
    lo_z = oz + margin
    hi_x = ox + float(nx) * r - margin
    hi_y = oy + float(ny) * r - margin
    hi_z = oz + float(nz) * r - margin
    n = dirs.shape[0]
    t_out = np.empty(n, dtype=np.float64)
    hit_out = np.zeros(n, dtype=np.uint8)
    cell_out = np.full((n, 3), -1, dtype=np.int64)
    ax = (px - ox) / r
    ay = (py - oy) / r
    az = (pz - oz) / r
    for ridx in range(n):
        dx = float(dirs[ridx, 0])
        dy = float(dirs[ridx, 1])
        dz = float(dirs[ridx, 2])
        t_exit = _INF
        if dx > 0.0:
            t_exit = (hi_x - px) / dx
        elif dx < 0.0:
            t_exit = (lo_x - px) / dx
        if dy > 0.0:
            te = (hi_y - py) / dy
            if te < t_exit:
                t_exit = te
        elif dy < 0.0:
            te = (lo_y - py) / dy
            if te < t_exit:
                t_exit = te
        if dz > 0.0:
            te = (hi_z - pz) / dz
            if te < t_exit:
                t_exit = te
        elif dz < 0.0:
            te = (lo_z - pz) / dz
            if te < t_exit:
                t_exit = te
        t_cap = mr if mr < t_exit else t_exit
        if t_cap <= 0.0:
            t_out[ridx] = 0.0
            continue
        bx = (px + dx * t_cap - ox) / r
        by = (py + dy * t_cap - oy) / r
        bz = (pz + dz * t_cap - oz) / r
        t_res = t_cap
        for (i, j, k) in _walk(ax, ay, az, bx, by, bz, nx, ny, nz):
            if occ[i, j, k]:
                cx = ox + (float(i) + 0.5) * r
                cy = oy + (float(j) + 0.5) * r
                cz = oz + (float(k) + 0.5) * r
                t_res = (cx - px) * dx + (cy - py) * dy + (cz - pz) * dz
                hit_out[ridx] = 1
                cell_out[ridx, 0] = i
                cell_out[ridx, 1] = j
                cell_out[ridx, 2] = k
                break
        t_out[ridx] = t_res
    return t_out, hit_out, cell_out


def integrate_scan(state, p0, ends, hits, hit_cells, origin, res):
    """Fold a range scan into the live map state grid.

    Walks each ray p0 -> ends[r]; traversed Unknown cells become Free
    until the ray's struck cell (hit_cells[r], from the sweep) is
    reached, which becomes Occupied and ends the walk. Free and Occupied
    are terminal: non-Unknown cells are never modified. The struck cell
    is taken as data rather than recomputed from the endpoint so that
    corner-grazing rays cannot misclassify cells around the endpoint.
    Returns (n_new_free, n_new_occupied).
    """
    nx, ny, nz = state.shape
    ox = float(origin[0])
    oy = float(origin[1])
    oz = float(origin[2])
    r = float(res)
    ax = (float(p0[0]) - ox) / r
    ay = (float(p0[1]) - oy) / r
    az = (float(p0[2]) - oz) / r
    n = ends.shape[0]
    n_free = 0
    n_occ = 0
    for ridx in range(n):
        bx = (float(ends[ridx, 0]) - ox) / r
        by = (float(ends[ridx, 1]) - oy) / r
        bz = (float(ends[ridx, 2]) - oz) / r
        is_hit = hits[ridx] != 0
        ei = int(hit_cells[ridx, 0]) if is_hit else -1
        ej = int(hit_cells[ridx, 1]) if is_hit else -1
        ek = int(hit_cells[ridx, 2]) if is_hit else -1
        for (i, j, k) in _walk(ax, ay, az, bx, by, bz, nx, ny, nz):
            if is_hit and i == ei and j == ej and k == ek:
                if state[i, j, k] == 0:
                    state[i, j, k] = 2
                    n_occ += 1
                break
            if state[i, j, k] == 0:
                state[i, j, k] = 1
                n_free += 1
    return n_free, n_occ


# ---------------------------------------------------------------------------
# Grid shortest paths
# ---------------------------------------------------------------------------

# 26-connected neighbourhood in a fixed scan order, with the diagonal
# corner-cut rule: a diagonal step is admissible only when every proper
# axis projection of the offset lands on a traversable cell.
_OFFS = []
_SUBS = []
_W = []
for _di in (-1, 0, 1):
    for _dj in (-1, 0, 1):
        for _dk in (-1, 0, 1):
            if _di == 0 and _dj == 0 and _dk == 0:
                continue
            _OFFS.append((_di, _dj, _dk))
            _W.append(math.sqrt(float(_di * _di + _dj * _dj + _dk * _dk)))
            subs = []
            for _ei in (0, _di):
                for _ej in (0, _dj):
                    for _ek in (0, _dk):
                        cand = (_ei, _ej, _ek)
                        if cand == (0, 0, 0) or cand == (_di, _dj, _dk):
                            continue
                        if cand in subs:
                            continue
                        subs.append(cand)
            _SUBS.append(tuple(subs))


def _heap_less(hf, hh, hs, a, b):
    fa = hf[a]
    fb = hf[b]
    if fa < fb:
        return True
    if fb < fa:
        return False
    ha = hh[a]
    hb = hh[b]
    if ha < hb:
        return True
    if hb < ha:
        return False
    return hs[a] < hs[b]


def _heap_push(hf, hh, hs, hv, f, h, s, v):
    hf.append(f)
    hh.append(h)
    hs.append(s)
    hv.append(v)
    i = len(hf) - 1
    while i > 0:
        p = (i - 1) >> 1
        if _heap_less(hf, hh, hs, i, p):
            hf[i], hf[p] = hf[p], hf[i]
            hh[i], hh[p] = hh[p], hh[i]
            hs[i], hs[p] = hs[p], hs[i]
            hv[i], hv[p] = hv[p], hv[i]
            i = p
        else:
            break


def _heap_pop(hf, hh, hs, hv):
    v0 = hv[0]
    last = len(hf) - 1
    hf[0] = hf[last]
    hh[0] = hh[last]
    hs[0] = hs[last]
    hv[0] = hv[last]
    hf.pop()
    hh.pop()
    hs.pop()
    hv.pop()
    n = last
    i = 0
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        m = left
        right = left + 1
        if right < n and _heap_less(hf, hh, hs, right, left):
            m = right
        if _heap_less(hf, hh, hs, m, i):
            hf[i], hf[m] = hf[m], hf[i]
            hh[i], hh[m] = hh[m], hh[i]
            hs[i], hs[m] = hs[m], hs[i]
            hv[i], hv[m] = hv[m], hv[i]
            i = m
        else:
            break
    return v0


def _admissible(tflat, i, j, k, m, nx, ny, nz, snz, snynz):
    di, dj, dk = _OFFS[m]
    ni = i + di
    nj = j + dj
    nk = k + dk
    if ni < 0 or ni >= nx or nj < 0 or nj >= ny or nk < 0 or nk >= nz:
        return -1
    nidx = ni * snynz + nj * snz + nk
    if not tflat[nidx]:
        return -1
    for (ei, ej, ek) in _SUBS[m]:
        if not tflat[(i + ei) * snynz + (j + ej) * snz + (k + ek)]:
            return -1
    return nidx


def astar_grid(trav, start, goal, res):
    """Shortest path on a traversability grid, 26-connected.

    Step cost is res * sqrt(axis steps); ties in f are broken by lower
    heuristic, then insertion order, so the result is deterministic.
    Returns (path, length, found) with path as int64 (n, 3) rows from
    start to goal inclusive.
    """
    nx, ny, nz = trav.shape
    si, sj, sk = int(start[0]), int(start[1]), int(start[2])
    gi, gj, gk = int(goal[0]), int(goal[1]), int(goal[2])
    r = float(res)
    empty = np.empty((0, 3), dtype=np.int64)
    if not (0 <= si < nx and 0 <= sj < ny and 0 <= sk < nz):
        return empty, _INF, False
    if not (0 <= gi < nx and 0 <= gj < ny and 0 <= gk < nz):
        return empty, _INF, False
    tflat = trav.reshape(-1)
    snz = nz
    snynz = ny * nz
    sidx = si * snynz + sj * snz + sk
    gidx = gi * snynz + gj * snz + gk
    if not tflat[sidx] or not tflat[gidx]:
        return empty, _INF, False
    ncells = nx * ny * nz
    g = np.full(ncells, _INF, dtype=np.float64)
    closed = np.zeros(ncells, dtype=np.uint8)
    parent = np.full(ncells, -1, dtype=np.int64)
    sc = [r * w for w in _W]
    hf = []
    hh = []
    hs = []
    hv = []
    seq = 0

    ddi = si - gi
    ddj = sj - gj
    ddk = sk - gk
    h0 = math.sqrt(float(ddi * ddi + ddj * ddj + ddk * ddk)) * r
    g[sidx] = 0.0
    _heap_push(hf, hh, hs, hv, h0, h0, seq, sidx)
    seq += 1
    while hf:
        v = _heap_pop(hf, hh, hs, hv)
        if closed[v]:
            continue
        closed[v] = 1
        if v == gidx:
            chain = []
            c = v
            while c != -1:
                chain.append(c)
                c = int(parent[c])
            chain.reverse()
            path = np.empty((len(chain), 3), dtype=np.int64)
            for t, c in enumerate(chain):
                path[t, 0] = c // snynz
                rem = c % snynz
                path[t, 1] = rem // snz
                path[t, 2] = rem % snz
            return path, float(g[v]), True
        i = v // snynz
        rem = v % snynz
        j = rem // snz
        k = rem % snz
        gv = float(g[v])
        for m in range(26):
            nidx = _admissible(tflat, i, j, k, m, nx, ny, nz, snz, snynz)
            if nidx < 0:
                continue
            if closed[nidx]:
                continue
            ng = gv + sc[m]
            if ng < g[nidx]:
                g[nidx] = ng
                parent[nidx] = v
                di, dj, dk = _OFFS[m]
                ddi = (i + di) - gi
                ddj = (j + dj) - gj
                ddk = (k + dk) - gk
                hn = math.sqrt(float(ddi * ddi + ddj * ddj + ddk * ddk)) * r
                _heap_push(hf, hh, hs, hv, ng + hn, hn, seq, nidx)
                seq += 1
    return empty, _INF, False


def dijkstra_field(trav, start, res):
    """Distance from start to every traversable cell (same moves as A*).

    Returns a float64 grid; unreachable or non-traversable cells hold inf.
    """
    nx, ny, nz = trav.shape
    si, sj, sk = int(start[0]), int(start[1]), int(start[2])
    r = float(res)
    ncells = nx * ny * nz
    g = np.full(ncells, _INF, dtype=np.float64)
    if not (0 <= si < nx and 0 <= sj < ny and 0 <= sk < nz):
        return g.reshape(nx, ny, nz)
    tflat = trav.reshape(-1)
    snz = nz
    snynz = ny * nz
    sidx = si * snynz + sj * snz + sk
    if not tflat[sidx]:
        return g.reshape(nx, ny, nz)
    closed = np.zeros(ncells, dtype=np.uint8)
    sc = [r * w for w in _W]
    hf = []
    hh = []
    hs = []
    hv = []
    seq = 0
    g[sidx] = 0.0
    _heap_push(hf, hh, hs, hv, 0.0, 0.0, seq, sidx)
    seq += 1
    while hf:
        v = _heap_pop(hf, hh, hs, hv)
        if closed[v]:
            continue
        closed[v] = 1
        i = v // snynz
        rem = v % snynz
        j = rem // snz
        k = rem % snz
        gv = float(g[v])
        for m in range(26):
            nidx = _admissible(tflat, i, j, k, m, nx, ny, nz, snz, snynz)
            if nidx < 0:
                continue
            if closed[nidx]:
                continue
            ng = gv + sc[m]
            if ng < g[nidx]:
                g[nidx] = ng
                _heap_push(hf, hh, hs, hv, ng, 0.0, seq, nidx)
                seq += 1
    return g.reshape(nx, ny, nz)


# ---------------------------------------------------------------------------
# Asymmetric TSP
# ---------------------------------------------------------------------------

def held_karp_cycle(cost):
    """Exact minimum cyclic tour 0 -> ... -> 0 by Held-Karp DP.

    cost: float64 (n, n) matrix, n <= 13 (the DP table is 2^n * n).
    Ties resolve to the lowest predecessor index so results are
    deterministic. Returns (order list starting at 0, total cost).
    """
    n = cost.shape[0]
    if n > 13:
        raise ValueError("held_karp_cycle: n must be <= 13")
    if n == 1:
        return [0], 0.0
    c = cost.tolist()
    full = 1 << n
    dp = [_INF] * (full * n)
    par = [-1] * (full * n)
    dp[1 * n + 0] = 0.0
    for mask in range(1, full):
        if not mask & 1:
            continue
        for j in range(1, n):
            if not (mask >> j) & 1:
                continue
            m2 = mask ^ (1 << j)
            base = m2 * n
            best = _INF
            bestk = -1
            for k in range(n):
                if not (m2 >> k) & 1:
                    continue
                dk = dp[base + k]
                if dk == _INF:
                    continue
                cand = dk + c[k][j]
                if cand < best:
                    best = cand
                    bestk = k
            dp[mask * n + j] = best
            par[mask * n + j] = bestk
    best = _INF
    bestj = -1
    last = (full - 1) * n
    for j in range(1, n):
        if dp[last + j] == _INF:
            continue
        cand = dp[last + j] + c[j][0]
        if cand < best:
            best = cand
            bestj = j
    if bestj < 0:
        raise ValueError("held_karp_cycle: matrix has no finite tour")
    order_rev = []
    mask = full - 1
    j = bestj
    while j != 0:
        order_rev.append(j)
        k = par[mask * n + j]
        mask ^= 1 << j
        j = k
    order_rev.append(0)
    order_rev.reverse()
    return order_rev, best


def nn_tour(cost, start=0):
    """Nearest-neighbour cyclic tour from a start node; ties pick the
    lowest index."""
    n = cost.shape[0]
    c = cost.tolist()
    visited = [False] * n
    visited[start] = True
    order = [start]
    cur = start
    for _ in range(n - 1):
        best = _INF
        bestv = -1
        row = c[cur]
        for v in range(n):
            if visited[v]:
                continue
            if row[v] < best:
                best = row[v]
                bestv = v
        visited[bestv] = True
        order.append(bestv)
        cur = bestv
    return order


_EPS_IMPROVE = 1e-9


def _two_opt_once(c, order, n):
    # Prefix sums of forward and reversed consecutive arc costs let each
    # segment reversal be scored in O(1); asymmetric matrices need the
    # reversed-run sum since arc direction flips inside the segment.
    sf = [0.0] * n
    sr = [0.0] * n
    for t in range(n - 1):
        a = order[t]
        b = order[t + 1]
        sf[t + 1] = sf[t] + c[a][b]
        sr[t + 1] = sr[t] + c[b][a]
    for i in range(1, n - 1):
        a = order[i - 1]
        b = order[i]
        for j in range(i + 1, n):
            e = order[j]
            d = order[j + 1] if j + 1 < n else order[0]
            old = c[a][b] + (sf[j] - sf[i]) + c[e][d]
            new = c[a][e] + (sr[j] - sr[i]) + c[b][d]
            if new + _EPS_IMPROVE < old:
                order[i:j + 1] = order[i:j + 1][::-1]
                return True
    return False


def _or_opt_once(c, order, n):
    for seg_len in (1, 2, 3):
        if n - seg_len < 2:
            continue
        for p in range(1, n - seg_len + 1):
            s0 = order[p]
            s1 = order[p + seg_len - 1]
            a = order[p - 1]
            b = order[p + seg_len] if p + seg_len < n else order[0]
            gain = c[a][s0] + c[s1][b] - c[a][b]
            rest = order[:p] + order[p + seg_len:]
            nrest = len(rest)
            for q in range(1, nrest + 1):
                u = rest[q - 1]
                v = rest[q] if q < nrest else rest[0]
                if u == a and v == b:
                    continue
                delta = (c[u][s0] + c[s1][v] - c[u][v]) - gain
                if delta < -_EPS_IMPROVE:
                    seg = order[p:p + seg_len]
                    order[:] = rest[:q] + seg + rest[q:]
                    return True
    return False


def improve_cycle(cost, order):
    """2-opt + Or-opt local search on a cyclic tour (position 0 pinned).

    First-improvement with a fixed scan order: deterministic. Each
    accepted move lowers the tour cost by more than a fixed epsilon, so
    the loop terminates; a move cap guards degenerate matrices.
    """
    n = len(order)
    order = list(order)
    if n < 3:
        return order
    c = cost.tolist()
    moves = 0
    while moves < 5000:
        if _two_opt_once(c, order, n):
            moves += 1
            continue
        if _or_opt_once(c, order, n):
            moves += 1
            continue
        break
    return order
