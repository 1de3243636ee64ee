# cython: language_level=3
"""Compiled kernel backend.

Mirrors pure.py expression for expression; the build disables
fp-contraction so float results stay bitwise identical to the pure
backend. Keep both files in sync when changing anything here.
"""

from libc.math cimport floor, sqrt, INFINITY
from libc.stdlib cimport malloc, realloc, free

import numpy as np


# ---------------------------------------------------------------------------
# Supercover ray traversal
# ---------------------------------------------------------------------------

cdef struct Walk:
    double tmx, tmy, tmz
    double tdx, tdy, tdz
    int i, j, k
    int ei, ej, ek
    int sx, sy, sz
    int nx, ny, nz
    int qn, qi
    int qx[7]
    int qy[7]
    int qz[7]
    bint started


cdef void walk_init(Walk* w, double ax, double ay, double az,
                    double bx, double by, double bz,
                    int nx, int ny, int nz) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double dz = bz - az
    w.i = <int>floor(ax)
    w.j = <int>floor(ay)
    w.k = <int>floor(az)
    w.ei = <int>floor(bx)
    w.ej = <int>floor(by)
    w.ek = <int>floor(bz)
    w.sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    w.sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    w.sz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
    if w.sx > 0:
        w.tmx = ((<double>(w.i + 1)) - ax) / dx
        w.tdx = 1.0 / dx
    elif w.sx < 0:
        w.tmx = ((<double>w.i) - ax) / dx
        w.tdx = -1.0 / dx
    else:
        w.tmx = INFINITY
        w.tdx = INFINITY
    if w.sy > 0:
        w.tmy = ((<double>(w.j + 1)) - ay) / dy
        w.tdy = 1.0 / dy
    elif w.sy < 0:
        w.tmy = ((<double>w.j) - ay) / dy
        w.tdy = -1.0 / dy
    else:
        w.tmy = INFINITY
        w.tdy = INFINITY
    if w.sz > 0:
        w.tmz = ((<double>(w.k + 1)) - az) / dz
        w.tdz = 1.0 / dz
    elif w.sz < 0:
        w.tmz = ((<double>w.k) - az) / dz
        w.tdz = -1.0 / dz
    else:
        w.tmz = INFINITY
        w.tdz = INFINITY
    w.nx = nx
    w.ny = ny
    w.nz = nz
    w.qn = 0
    w.qi = 0
    w.started = False


cdef inline void _qpush(Walk* w, int x, int y, int z) nogil:
    w.qx[w.qn] = x
    w.qy[w.qn] = y
    w.qz[w.qn] = z
    w.qn += 1


cdef bint walk_next(Walk* w, int* ci, int* cj, int* ck) nogil:
    """Emit the next visited cell; returns False when the walk is over.

    Visit order matches pure._walk: current cell first, then per axis
    crossing either the advanced cell alone or (on exact ties) the in-
    bounds side cells in x, y, z order, the two-axis combinations, and
    finally the fully advanced cell.
    """
    cdef double m
    cdef bint hx, hy, hz
    cdef int nh, si, sj, sk
    if not w.started:
        w.started = True
        ci[0] = w.i
        cj[0] = w.j
        ck[0] = w.k
        return True
    if w.qi < w.qn:
        ci[0] = w.qx[w.qi]
        cj[0] = w.qy[w.qi]
        ck[0] = w.qz[w.qi]
        w.qi += 1
        return True
    if w.i == w.ei and w.j == w.ej and w.k == w.ek:
        return False
    m = w.tmx
    if w.tmy < m:
        m = w.tmy
    if w.tmz < m:
        m = w.tmz
    if m > 1.0:
        return False
    hx = w.tmx == m
    hy = w.tmy == m
    hz = w.tmz == m
    nh = (1 if hx else 0) + (1 if hy else 0) + (1 if hz else 0)
    w.qn = 0
    w.qi = 0
    if nh == 1:
        if hx:
            w.i += w.sx
            w.tmx += w.tdx
        elif hy:
            w.j += w.sy
            w.tmy += w.tdy
        else:
            w.k += w.sz
            w.tmz += w.tdz
        ci[0] = w.i
        cj[0] = w.j
        ck[0] = w.k
        return True
    if nh == 2:
        if hx and hy:
            si = w.i + w.sx
            sj = w.j + w.sy
            if 0 <= si < w.nx:
                _qpush(w, si, w.j, w.k)
            if 0 <= sj < w.ny:
                _qpush(w, w.i, sj, w.k)
            w.i = si
            w.j = sj
            w.tmx += w.tdx
            w.tmy += w.tdy
        elif hx and hz:
            si = w.i + w.sx
            sk = w.k + w.sz
            if 0 <= si < w.nx:
                _qpush(w, si, w.j, w.k)
            if 0 <= sk < w.nz:
                _qpush(w, w.i, w.j, sk)
            w.i = si
            w.k = sk
            w.tmx += w.tdx
            w.tmz += w.tdz
        else:
            sj = w.j + w.sy
            sk = w.k + w.sz
            if 0 <= sj < w.ny:
                _qpush(w, w.i, sj, w.k)
            if 0 <= sk < w.nz:
                _qpush(w, w.i, w.j, sk)
            w.j = sj
            w.k = sk
            w.tmy += w.tdy
            w.tmz += w.tdz
        _qpush(w, w.i, w.j, w.k)
    else:
        si = w.i + w.sx
        sj = w.j + w.sy
        sk = w.k + w.sz
        if 0 <= si < w.nx:
            _qpush(w, si, w.j, w.k)
        if 0 <= sj < w.ny:
            _qpush(w, w.i, sj, w.k)
        if 0 <= sk < w.nz:
            _qpush(w, w.i, w.j, sk)
        if 0 <= si < w.nx and 0 <= sj < w.ny:
            _qpush(w, si, sj, w.k)
        if 0 <= si < w.nx and 0 <= sk < w.nz:
            _qpush(w, si, w.j, sk)
        if 0 <= sj < w.ny and 0 <= sk < w.nz:
            _qpush(w, w.i, sj, sk)
        w.i = si
        w.j = sj
        w.k = sk
        w.tmx += w.tdx
        w.tmy += w.tdy
        w.tmz += w.tdz
        _qpush(w, w.i, w.j, w.k)
    ci[0] = w.qx[w.qi]
    cj[0] = w.qy[w.qi]
    ck[0] = w.qz[w.qi]
    w.qi += 1
    return True


def trace_ray(blocked, p0, p1, origin, res, stop_at_blocked=True):
    """See pure.trace_ray."""
    cdef unsigned char[:, :, ::1] b = blocked
    cdef int nx = b.shape[0]
    cdef int ny = b.shape[1]
    cdef int nz = b.shape[2]
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2]
    cdef double r = res
    cdef double ax = ((<double>p0[0]) - ox) / r
    cdef double ay = ((<double>p0[1]) - oy) / r
    cdef double az = ((<double>p0[2]) - oz) / r
    cdef double bx = ((<double>p1[0]) - ox) / r
    cdef double by = ((<double>p1[1]) - oy) / r
    cdef double bz = ((<double>p1[2]) - oz) / r
    cdef bint stop = bool(stop_at_blocked)
    cdef Walk w
    cdef int ci = 0, cj = 0, ck = 0
    cdef int cap = 256
    cdef int n = 0
    cdef long long* buf = <long long*>malloc(cap * 3 * sizeof(long long))
    cdef bint hit = False
    if buf == NULL:
        raise MemoryError()
    walk_init(&w, ax, ay, az, bx, by, bz, nx, ny, nz)
    while walk_next(&w, &ci, &cj, &ck):
        if n == cap:
            cap *= 2
            buf = <long long*>realloc(buf, cap * 3 * sizeof(long long))
            if buf == NULL:
                raise MemoryError()
        buf[3 * n] = ci
        buf[3 * n + 1] = cj
        buf[3 * n + 2] = ck
        n += 1
        if stop and b[ci, cj, ck]:
            hit = True
            break
    out = np.empty((n, 3), dtype=np.int64)
    cdef long long[:, ::1] ov = out
    cdef int t
    for t in range(n):
        ov[t, 0] = buf[3 * t]
        ov[t, 1] = buf[3 * t + 1]
        ov[t, 2] = buf[3 * t + 2]
    free(buf)
    return out, bool(hit)


def rays_visible(blocked, p0, targets, origin, res):
    """See pure.rays_visible."""
    cdef unsigned char[:, :, ::1] b = blocked
    cdef double[:, ::1] tg = targets
    cdef int nx = b.shape[0]
    cdef int ny = b.shape[1]
    cdef int nz = b.shape[2]
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2]
    cdef double r = res
    cdef double ax = ((<double>p0[0]) - ox) / r
    cdef double ay = ((<double>p0[1]) - oy) / r
    cdef double az = ((<double>p0[2]) - oz) / r
    cdef int n = tg.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] ov = out
    cdef int t, ti, tj, tk, ci, cj, ck
    cdef double tx, ty, tz, bx, by, bz
    cdef Walk w
    for t in range(n):
        tx = tg[t, 0]
        ty = tg[t, 1]
        tz = tg[t, 2]
        bx = (tx - ox) / r
        by = (ty - oy) / r
        bz = (tz - oz) / r
        ti = <int>floor(bx)
        tj = <int>floor(by)
        tk = <int>floor(bz)
        walk_init(&w, ax, ay, az, bx, by, bz, nx, ny, nz)
        while walk_next(&w, &ci, &cj, &ck):
            if ci == ti and cj == tj and ck == tk:
                ov[t] = 1
                break
            if b[ci, cj, ck]:
                break
    return out


def lidar_sweep(occ, p0, dirs, max_range, origin, res):
    """See pure.lidar_sweep."""
    cdef unsigned char[:, :, ::1] g = occ
    cdef double[:, ::1] dv = dirs
    cdef int nx = g.shape[0]
    cdef int ny = g.shape[1]
    cdef int nz = g.shape[2]
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2]
    cdef double r = res
    cdef double px = p0[0]
    cdef double py = p0[1]
    cdef double pz = p0[2]
    cdef double mr = max_range
    cdef double margin = 1e-7
    cdef double lo_x = ox + margin
    cdef double lo_y = oy + margin
    cdef double lo_z = oz + margin
    cdef double hi_x = ox + (<double>nx) * r - margin
    cdef double hi_y = oy + (<double>ny) * r - margin
    cdef double hi_z = oz + (<double>nz) * r - margin
    cdef int n = dv.shape[0]
    t_out = np.empty(n, dtype=np.float64)
    hit_out = np.zeros(n, dtype=np.uint8)
    cell_out = np.full((n, 3), -1, dtype=np.int64)
    cdef double[::1] tv = t_out
    cdef unsigned char[::1] hv = hit_out
    cdef long long[:, ::1] cv = cell_out
    cdef double ax = (px - ox) / r
    cdef double ay = (py - oy) / r
    cdef double az = (pz - oz) / r
    cdef int ridx, ci, cj, ck
    cdef double dx, dy, dz, t_exit, te, t_cap, bx, by, bz, t_res, cx, cy, cz
    cdef Walk w
    for ridx in range(n):
        dx = dv[ridx, 0]
        dy = dv[ridx, 1]
        dz = dv[ridx, 2]
        t_exit = INFINITY
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
            tv[ridx] = 0.0
            continue
        bx = (px + dx * t_cap - ox) / r
        by = (py + dy * t_cap - oy) / r
        bz = (pz + dz * t_cap - oz) / r
        t_res = t_cap
        walk_init(&w, ax, ay, az, bx, by, bz, nx, ny, nz)
        while walk_next(&w, &ci, &cj, &ck):
            if g[ci, cj, ck]:
                cx = ox + ((<double>ci) + 0.5) * r
                cy = oy + ((<double>cj) + 0.5) * r
                cz = oz + ((<double>ck) + 0.5) * r
                t_res = (cx - px) * dx + (cy - py) * dy + (cz - pz) * dz
                hv[ridx] = 1
                cv[ridx, 0] = ci
                cv[ridx, 1] = cj
                cv[ridx, 2] = ck
                break
        tv[ridx] = t_res
    return t_out, hit_out, cell_out


def integrate_scan(state, p0, ends, hits, hit_cells, origin, res):
    """See pure.integrate_scan."""
    cdef unsigned char[:, :, ::1] st = state
    cdef double[:, ::1] ev = ends
    cdef unsigned char[::1] hv = hits
    cdef long long[:, ::1] hc = hit_cells
    cdef int nx = st.shape[0]
    cdef int ny = st.shape[1]
    cdef int nz = st.shape[2]
    cdef double ox = origin[0]
    cdef double oy = origin[1]
    cdef double oz = origin[2]
    cdef double r = res
    cdef double ax = ((<double>p0[0]) - ox) / r
    cdef double ay = ((<double>p0[1]) - oy) / r
    cdef double az = ((<double>p0[2]) - oz) / r
    cdef int n = ev.shape[0]
    cdef int n_free = 0
    cdef int n_occ = 0
    cdef int ridx, ei, ej, ek, ci, cj, ck
    cdef double bx, by, bz
    cdef bint is_hit
    cdef Walk w
    for ridx in range(n):
        bx = (ev[ridx, 0] - ox) / r
        by = (ev[ridx, 1] - oy) / r
        bz = (ev[ridx, 2] - oz) / r
        is_hit = hv[ridx] != 0
        ei = <int>hc[ridx, 0] if is_hit else -1
        ej = <int>hc[ridx, 1] if is_hit else -1
        ek = <int>hc[ridx, 2] if is_hit else -1
        walk_init(&w, ax, ay, az, bx, by, bz, nx, ny, nz)
        while walk_next(&w, &ci, &cj, &ck):
            if is_hit and ci == ei and cj == ej and ck == ek:
                if st[ci, cj, ck] == 0:
                    st[ci, cj, ck] = 2
                    n_occ += 1
                break
            if st[ci, cj, ck] == 0:
                st[ci, cj, ck] = 1
                n_free += 1
    return n_free, n_occ


# ---------------------------------------------------------------------------
# Grid shortest paths
# ---------------------------------------------------------------------------

cdef int OFF_I[26]
cdef int OFF_J[26]
cdef int OFF_K[26]
cdef double OFF_W[26]
cdef int SUB_N[26]
cdef int SUB_I[26][6]
cdef int SUB_J[26][6]
cdef int SUB_K[26][6]


cdef void _init_offsets():
    cdef int m = 0
    cdef int di, dj, dk, ei, ej, ek, t, sn, a, b, c
    cdef bint dup
    cdef int eis[2]
    cdef int ejs[2]
    cdef int eks[2]
    for di in range(-1, 2):
        for dj in range(-1, 2):
            for dk in range(-1, 2):
                if di == 0 and dj == 0 and dk == 0:
                    continue
                OFF_I[m] = di
                OFF_J[m] = dj
                OFF_K[m] = dk
                OFF_W[m] = sqrt(<double>(di * di + dj * dj + dk * dk))
                sn = 0
                eis[0] = 0
                eis[1] = di
                ejs[0] = 0
                ejs[1] = dj
                eks[0] = 0
                eks[1] = dk
                for a in range(2):
                    ei = eis[a]
                    for b in range(2):
                        ej = ejs[b]
                        for c in range(2):
                            ek = eks[c]
                            if ei == 0 and ej == 0 and ek == 0:
                                continue
                            if ei == di and ej == dj and ek == dk:
                                continue
                            dup = False
                            for t in range(sn):
                                if SUB_I[m][t] == ei and SUB_J[m][t] == ej and SUB_K[m][t] == ek:
                                    dup = True
                                    break
                            if dup:
                                continue
                            SUB_I[m][sn] = ei
                            SUB_J[m][sn] = ej
                            SUB_K[m][sn] = ek
                            sn += 1
                SUB_N[m] = sn
                m += 1


_init_offsets()


cdef struct Heap:
    double* f
    double* h
    long long* s
    long long* v
    int n
    int cap


cdef bint heap_init(Heap* hp, int cap) nogil:
    hp.f = <double*>malloc(cap * sizeof(double))
    hp.h = <double*>malloc(cap * sizeof(double))
    hp.s = <long long*>malloc(cap * sizeof(long long))
    hp.v = <long long*>malloc(cap * sizeof(long long))
    hp.n = 0
    hp.cap = cap
    return hp.f != NULL and hp.h != NULL and hp.s != NULL and hp.v != NULL


cdef void heap_free(Heap* hp) nogil:
    free(hp.f)
    free(hp.h)
    free(hp.s)
    free(hp.v)


cdef inline bint heap_less(Heap* hp, int a, int b) nogil:
    cdef double fa = hp.f[a]
    cdef double fb = hp.f[b]
    if fa < fb:
        return True
    if fb < fa:
        return False
    cdef double ha = hp.h[a]
    cdef double hb = hp.h[b]
    if ha < hb:
        return True
    if hb < ha:
        return False
    return hp.s[a] < hp.s[b]


cdef inline void heap_swap(Heap* hp, int a, int b) nogil:
    cdef double tf = hp.f[a]
    cdef double th = hp.h[a]
    cdef long long ts = hp.s[a]
    cdef long long tv = hp.v[a]
    hp.f[a] = hp.f[b]
    hp.h[a] = hp.h[b]
    hp.s[a] = hp.s[b]
    hp.v[a] = hp.v[b]
    hp.f[b] = tf
    hp.h[b] = th
    hp.s[b] = ts
    hp.v[b] = tv


cdef bint heap_push(Heap* hp, double f, double h, long long s, long long v) nogil:
    cdef int i, p
    if hp.n == hp.cap:
        hp.cap *= 2
        hp.f = <double*>realloc(hp.f, hp.cap * sizeof(double))
        hp.h = <double*>realloc(hp.h, hp.cap * sizeof(double))
        hp.s = <long long*>realloc(hp.s, hp.cap * sizeof(long long))
        hp.v = <long long*>realloc(hp.v, hp.cap * sizeof(long long))
        if hp.f == NULL or hp.h == NULL or hp.s == NULL or hp.v == NULL:
            return False
    i = hp.n
    hp.f[i] = f
    hp.h[i] = h
    hp.s[i] = s
    hp.v[i] = v
    hp.n += 1
    while i > 0:
        p = (i - 1) >> 1
        if heap_less(hp, i, p):
            heap_swap(hp, i, p)
            i = p
        else:
            break
    return True


cdef long long heap_pop(Heap* hp) nogil:
    cdef long long v0 = hp.v[0]
    cdef int last = hp.n - 1
    cdef int i = 0
    cdef int left, right, m
    hp.f[0] = hp.f[last]
    hp.h[0] = hp.h[last]
    hp.s[0] = hp.s[last]
    hp.v[0] = hp.v[last]
    hp.n = last
    while True:
        left = 2 * i + 1
        if left >= hp.n:
            break
        m = left
        right = left + 1
        if right < hp.n and heap_less(hp, right, left):
            m = right
        if heap_less(hp, m, i):
            heap_swap(hp, m, i)
            i = m
        else:
            break
    return v0


def astar_grid(trav, start, goal, res):
    """See pure.astar_grid."""
    cdef unsigned char[:, :, ::1] tg = trav
    cdef int nx = tg.shape[0]
    cdef int ny = tg.shape[1]
    cdef int nz = tg.shape[2]
    cdef int si = start[0]
    cdef int sj = start[1]
    cdef int sk = start[2]
    cdef int gi = goal[0]
    cdef int gj = goal[1]
    cdef int gk = goal[2]
    cdef double r = res
    empty = np.empty((0, 3), dtype=np.int64)
    if not (0 <= si < nx and 0 <= sj < ny and 0 <= sk < nz):
        return empty, float("inf"), False
    if not (0 <= gi < nx and 0 <= gj < ny and 0 <= gk < nz):
        return empty, float("inf"), False
    cdef unsigned char[::1] tflat = trav.reshape(-1)
    cdef long long snz = nz
    cdef long long snynz = (<long long>ny) * nz
    cdef long long sidx = si * snynz + sj * snz + sk
    cdef long long gidx = gi * snynz + gj * snz + gk
    if not tflat[sidx] or not tflat[gidx]:
        return empty, float("inf"), False
    cdef long long ncells = (<long long>nx) * ny * nz
    g_arr = np.full(ncells, np.inf, dtype=np.float64)
    closed_arr = np.zeros(ncells, dtype=np.uint8)
    parent_arr = np.full(ncells, -1, dtype=np.int64)
    cdef double[::1] g = g_arr
    cdef unsigned char[::1] closed = closed_arr
    cdef long long[::1] parent = parent_arr
    cdef double sc[26]
    cdef int m
    for m in range(26):
        sc[m] = r * OFF_W[m]
    cdef Heap hp
    if not heap_init(&hp, 1024):
        heap_free(&hp)
        raise MemoryError()
    cdef long long seq = 0
    cdef int ddi = si - gi
    cdef int ddj = sj - gj
    cdef int ddk = sk - gk
    cdef double h0 = sqrt(<double>(ddi * ddi + ddj * ddj + ddk * ddk)) * r
    cdef long long v, nidx, c
    cdef int i, j, k, ni, nj, nk, t, sn
    cdef long long rem
    cdef double gv, ng, hn
    cdef bint ok
    g[sidx] = 0.0
    if not heap_push(&hp, h0, h0, seq, sidx):
        heap_free(&hp)
        raise MemoryError()
    seq += 1
    while hp.n > 0:
        v = heap_pop(&hp)
        if closed[v]:
            continue
        closed[v] = 1
        if v == gidx:
            chain = []
            c = v
            while c != -1:
                chain.append(c)
                c = parent[c]
            chain.reverse()
            path = np.empty((len(chain), 3), dtype=np.int64)
            for t in range(len(chain)):
                c = chain[t]
                path[t, 0] = c // snynz
                rem = c % snynz
                path[t, 1] = rem // snz
                path[t, 2] = rem % snz
            length = float(g[v])
            heap_free(&hp)
            return path, length, True
        i = <int>(v // snynz)
        rem = v % snynz
        j = <int>(rem // snz)
        k = <int>(rem % snz)
        gv = g[v]
        for m in range(26):
            ni = i + OFF_I[m]
            nj = j + OFF_J[m]
            nk = k + OFF_K[m]
            if ni < 0 or ni >= nx or nj < 0 or nj >= ny or nk < 0 or nk >= nz:
                continue
            nidx = ni * snynz + nj * snz + nk
            if not tflat[nidx]:
                continue
            ok = True
            sn = SUB_N[m]
            for t in range(sn):
                if not tflat[(i + SUB_I[m][t]) * snynz + (j + SUB_J[m][t]) * snz + (k + SUB_K[m][t])]:
                    ok = False
                    break
            if not ok:
                continue
            if closed[nidx]:
                continue
            ng = gv + sc[m]
            if ng < g[nidx]:
                g[nidx] = ng
                parent[nidx] = v
                ddi = ni - gi
                ddj = nj - gj
                ddk = nk - gk
                hn = sqrt(<double>(ddi * ddi + ddj * ddj + ddk * ddk)) * r
                if not heap_push(&hp, ng + hn, hn, seq, nidx):
                    heap_free(&hp)
                    raise MemoryError()
                seq += 1
    heap_free(&hp)
    return empty, float("inf"), False


def dijkstra_field(trav, start, res):
    """See pure.dijkstra_field."""
    cdef unsigned char[:, :, ::1] tg = trav
    cdef int nx = tg.shape[0]
    cdef int ny = tg.shape[1]
    cdef int nz = tg.shape[2]
    cdef int si = start[0]
    cdef int sj = start[1]
    cdef int sk = start[2]
    cdef double r = res
    cdef long long ncells = (<long long>nx) * ny * nz
    g_arr = np.full(ncells, np.inf, dtype=np.float64)
    if not (0 <= si < nx and 0 <= sj < ny and 0 <= sk < nz):
        return g_arr.reshape(nx, ny, nz)
    cdef unsigned char[::1] tflat = trav.reshape(-1)
    cdef long long snz = nz
    cdef long long snynz = (<long long>ny) * nz
    cdef long long sidx = si * snynz + sj * snz + sk
    if not tflat[sidx]:
        return g_arr.reshape(nx, ny, nz)
    closed_arr = np.zeros(ncells, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef unsigned char[::1] closed = closed_arr
    cdef double sc[26]
    cdef int m
    for m in range(26):
        sc[m] = r * OFF_W[m]
    cdef Heap hp
    if not heap_init(&hp, 1024):
        heap_free(&hp)
        raise MemoryError()
    cdef long long seq = 0
    cdef long long v, nidx, rem
    cdef int i, j, k, ni, nj, nk, t, sn
    cdef double gv, ng
    cdef bint ok
    g[sidx] = 0.0
    if not heap_push(&hp, 0.0, 0.0, seq, sidx):
        heap_free(&hp)
        raise MemoryError()
    seq += 1
    while hp.n > 0:
        v = heap_pop(&hp)
        if closed[v]:
            continue
        closed[v] = 1
        i = <int>(v // snynz)
        rem = v % snynz
        j = <int>(rem // snz)
        k = <int>(rem % snz)
        gv = g[v]
        for m in range(26):
            ni = i + OFF_I[m]
            nj = j + OFF_J[m]
            nk = k + OFF_K[m]
            if ni < 0 or ni >= nx or nj < 0 or nj >= ny or nk < 0 or nk >= nz:
                continue
            nidx = ni * snynz + nj * snz + nk
            if not tflat[nidx]:
                continue
            ok = True
            sn = SUB_N[m]
            for t in range(sn):
                if not tflat[(i + SUB_I[m][t]) * snynz + (j + SUB_J[m][t]) * snz + (k + SUB_K[m][t])]:
                    ok = False
                    break
            if not ok:
                continue
            if closed[nidx]:
                continue
            ng = gv + sc[m]
            if ng < g[nidx]:
                g[nidx] = ng
                if not heap_push(&hp, ng, 0.0, seq, nidx):
                    heap_free(&hp)
                    raise MemoryError()
                seq += 1
    heap_free(&hp)
    return g_arr.reshape(nx, ny, nz)


# ---------------------------------------------------------------------------
# Asymmetric TSP
# ---------------------------------------------------------------------------

def held_karp_cycle(cost):
    """See pure.held_karp_cycle."""
    cdef double[:, ::1] c = cost
    cdef int n = c.shape[0]
    if n > 13:
        raise ValueError("held_karp_cycle: n must be <= 13")
    if n == 1:
        return [0], 0.0
    cdef long long full = (<long long>1) << n
    cdef double* dp = <double*>malloc(full * n * sizeof(double))
    cdef int* par = <int*>malloc(full * n * sizeof(int))
    if dp == NULL or par == NULL:
        free(dp)
        free(par)
        raise MemoryError()
    cdef long long mask, m2, t
    cdef int j, k, bestk, bestj
    cdef double best, cand, dk
    for t in range(full * n):
        dp[t] = INFINITY
        par[t] = -1
    dp[1 * n + 0] = 0.0
    for mask in range(1, full):
        if not mask & 1:
            continue
        for j in range(1, n):
            if not (mask >> j) & 1:
                continue
            m2 = mask ^ ((<long long>1) << j)
            best = INFINITY
            bestk = -1
            for k in range(n):
                if not (m2 >> k) & 1:
                    continue
                dk = dp[m2 * n + k]
                if dk == INFINITY:
                    continue
                cand = dk + c[k, j]
                if cand < best:
                    best = cand
                    bestk = k
            dp[mask * n + j] = best
            par[mask * n + j] = bestk
    best = INFINITY
    bestj = -1
    for j in range(1, n):
        if dp[(full - 1) * n + j] == INFINITY:
            continue
        cand = dp[(full - 1) * n + j] + c[j, 0]
        if cand < best:
            best = cand
            bestj = j
    if bestj < 0:
        free(dp)
        free(par)
        raise ValueError("held_karp_cycle: matrix has no finite tour")
    order_rev = []
    mask = full - 1
    j = bestj
    while j != 0:
        order_rev.append(j)
        k = par[mask * n + j]
        mask ^= (<long long>1) << j
        j = k
    order_rev.append(0)
    order_rev.reverse()
    free(dp)
    free(par)
    return order_rev, best


def nn_tour(cost, int start=0):
    """See pure.nn_tour."""
    cdef double[:, ::1] c = cost
    cdef int n = c.shape[0]
    cdef int cur = start
    cdef int v, bestv
    cdef double best
    visited_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] visited = visited_arr
    visited[start] = 1
    order = [start]
    for _ in range(n - 1):
        best = INFINITY
        bestv = -1
        for v in range(n):
            if visited[v]:
                continue
            if c[cur, v] < best:
                best = c[cur, v]
                bestv = v
        visited[bestv] = 1
        order.append(bestv)
        cur = bestv
    return order


cdef double _EPS_IMPROVE = 1e-9


cdef bint _two_opt_once(double[:, ::1] c, int* order, int n,
                        double* sf, double* sr) nogil:
    cdef int t, i, j, a, b, e, d, lo, hi, tmp
    cdef double old, new
    sf[0] = 0.0
    sr[0] = 0.0
    for t in range(n - 1):
        a = order[t]
        b = order[t + 1]
        sf[t + 1] = sf[t] + c[a, b]
        sr[t + 1] = sr[t] + c[b, a]
    for i in range(1, n - 1):
        a = order[i - 1]
        b = order[i]
        for j in range(i + 1, n):
            e = order[j]
            d = order[j + 1] if j + 1 < n else order[0]
            old = c[a, b] + (sf[j] - sf[i]) + c[e, d]
            new = c[a, e] + (sr[j] - sr[i]) + c[b, d]
            if new + _EPS_IMPROVE < old:
                lo = i
                hi = j
                while lo < hi:
                    tmp = order[lo]
                    order[lo] = order[hi]
                    order[hi] = tmp
                    lo += 1
                    hi -= 1
                return True
    return False


cdef bint _or_opt_once(double[:, ::1] c, int* order, int n,
                       int* rest, int* scratch) nogil:
    cdef int seg_len, p, q, t, s0, s1, a, b, u, v, nrest
    cdef double gain, delta
    for seg_len in range(1, 4):
        if n - seg_len < 2:
            continue
        for p in range(1, n - seg_len + 1):
            s0 = order[p]
            s1 = order[p + seg_len - 1]
            a = order[p - 1]
            b = order[p + seg_len] if p + seg_len < n else order[0]
            gain = c[a, s0] + c[s1, b] - c[a, b]
            nrest = 0
            for t in range(p):
                rest[nrest] = order[t]
                nrest += 1
            for t in range(p + seg_len, n):
                rest[nrest] = order[t]
                nrest += 1
            for q in range(1, nrest + 1):
                u = rest[q - 1]
                v = rest[q] if q < nrest else rest[0]
                if u == a and v == b:
                    continue
                delta = (c[u, s0] + c[s1, v] - c[u, v]) - gain
                if delta < -_EPS_IMPROVE:
                    for t in range(q):
                        scratch[t] = rest[t]
                    for t in range(seg_len):
                        scratch[q + t] = order[p + t]
                    for t in range(q, nrest):
                        scratch[seg_len + t] = rest[t]
                    for t in range(n):
                        order[t] = scratch[t]
                    return True
    return False


def improve_cycle(cost, order):
    """See pure.improve_cycle."""
    cdef double[:, ::1] c = cost
    cdef int n = len(order)
    out = list(order)
    if n < 3:
        return out
    cdef int* ord_c = <int*>malloc(n * sizeof(int))
    cdef int* rest = <int*>malloc(n * sizeof(int))
    cdef int* scratch = <int*>malloc(n * sizeof(int))
    cdef double* sf = <double*>malloc(n * sizeof(double))
    cdef double* sr = <double*>malloc(n * sizeof(double))
    if ord_c == NULL or rest == NULL or scratch == NULL or sf == NULL or sr == NULL:
        free(ord_c)
        free(rest)
        free(scratch)
        free(sf)
        free(sr)
        raise MemoryError()
    cdef int t
    for t in range(n):
        ord_c[t] = out[t]
    cdef int moves = 0
    while moves < 5000:
        if _two_opt_once(c, ord_c, n, sf, sr):
            moves += 1
            continue
        if _or_opt_once(c, ord_c, n, rest, scratch):
            moves += 1
            continue
        break
    for t in range(n):
        out[t] = ord_c[t]
    free(ord_c)
    free(rest)
    free(scratch)
    free(sf)
    free(sr)
    return out
