"""Compiled and pure kernel backends must agree bitwise.

Every routine is exercised on randomized inputs and compared exactly:
the compiled module mirrors the pure one expression for expression, so
any drift is a porting bug, not tolerance noise.
"""

import numpy as np
import pytest

from searchsim._kernels import get_backend

pure = get_backend("pure")
try:
    comp = get_backend("compiled")
except Exception:
    comp = None

pytestmark = pytest.mark.skipif(comp is None,
                                reason="compiled backend not built")


def _random_world(rng, dims=(14, 12, 9), p=0.12):
    occ = (rng.random(dims) < p).astype(np.uint8)
    occ[0, 0, 0] = 0
    return occ


def _points(rng, dims, n, res=0.25):
    lo = np.full(3, 0.02)
    hi = (np.array(dims) * res) - 0.02
    return rng.uniform(lo, hi, size=(n, 3))


def test_trace_ray_parity():
    rng = np.random.default_rng(11)
    occ = _random_world(rng)
    origin = np.zeros(3)
    pts = _points(rng, occ.shape, 80)
    for a, b in zip(pts[::2], pts[1::2]):
        for stop in (True, False):
            c1, h1 = pure.trace_ray(occ, a, b, origin, 0.25, stop)
            c2, h2 = comp.trace_ray(occ, a, b, origin, 0.25, stop)
            assert h1 == h2
            np.testing.assert_array_equal(c1, c2)


def test_rays_visible_parity():
    rng = np.random.default_rng(12)
    occ = _random_world(rng)
    origin = np.zeros(3)
    p0 = np.array([0.1, 0.1, 0.1])
    targets = _points(rng, occ.shape, 200)
    v1 = pure.rays_visible(occ, p0, targets, origin, 0.25)
    v2 = comp.rays_visible(occ, p0, targets, origin, 0.25)
    np.testing.assert_array_equal(v1, v2)


def test_lidar_sweep_parity():
    rng = np.random.default_rng(13)
    occ = _random_world(rng)
    origin = np.zeros(3)
    p0 = np.array([1.7, 1.5, 1.1])
    az = rng.uniform(0, 2 * np.pi, size=300)
    el = rng.uniform(-0.5, 0.5, size=300)
    dirs = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az),
                     np.sin(el)], axis=1)
    t1, h1, c1 = pure.lidar_sweep(occ, p0, dirs, 6.0, origin, 0.25)
    t2, h2, c2 = comp.lidar_sweep(occ, p0, dirs, 6.0, origin, 0.25)
    np.testing.assert_array_equal(t1, t2)  # bitwise: same float ops
    np.testing.assert_array_equal(h1, h2)
    np.testing.assert_array_equal(c1, c2)


def test_integrate_scan_parity():
    rng = np.random.default_rng(14)
    occ = _random_world(rng)
    origin = np.zeros(3)
    p0 = np.array([1.7, 1.5, 1.1])
    az = rng.uniform(0, 2 * np.pi, size=150)
    dirs = np.stack([np.cos(az), np.sin(az), np.zeros_like(az)], axis=1)
    t, h, cells = pure.lidar_sweep(occ, p0, dirs, 6.0, origin, 0.25)
    ends = p0 + dirs * t[:, None]
    s1 = np.zeros(occ.shape, dtype=np.uint8)
    s2 = np.zeros(occ.shape, dtype=np.uint8)
    r1 = pure.integrate_scan(s1, p0, ends, h, cells, origin, 0.25)
    r2 = comp.integrate_scan(s2, p0, ends, h, cells, origin, 0.25)
    assert r1 == r2
    np.testing.assert_array_equal(s1, s2)


def test_astar_and_dijkstra_parity():
    rng = np.random.default_rng(15)
    for trial in range(6):
        trav = (rng.random((10, 10, 6)) > 0.25).astype(np.uint8)
        trav[0, 0, 0] = 1
        trav[9, 9, 5] = 1
        p1, l1, f1 = pure.astar_grid(trav, (0, 0, 0), (9, 9, 5), 0.25)
        p2, l2, f2 = comp.astar_grid(trav, (0, 0, 0), (9, 9, 5), 0.25)
        assert f1 == f2
        assert l1 == l2
        np.testing.assert_array_equal(p1, p2)
        d1 = pure.dijkstra_field(trav, (0, 0, 0), 0.25)
        d2 = comp.dijkstra_field(trav, (0, 0, 0), 0.25)
        np.testing.assert_array_equal(d1, d2)


def test_atsp_kernels_parity():
    rng = np.random.default_rng(16)
    for n in (2, 5, 8):
        c = rng.uniform(0.1, 10.0, size=(n, n))
        np.fill_diagonal(c, 0.0)
        o1, v1 = pure.held_karp_cycle(c)
        o2, v2 = comp.held_karp_cycle(c)
        assert o1 == list(o2)
        assert v1 == v2
        for s in range(n):
            t1 = pure.nn_tour(c, s)
            t2 = comp.nn_tour(c, s)
            assert list(t1) == list(t2)
            i1 = pure.improve_cycle(c, list(t1))
            i2 = comp.improve_cycle(c, list(t2))
            assert list(i1) == list(i2)


def test_backend_selection_reports():
    import searchsim._kernels as K
    assert K.BACKEND in ("compiled", "pure")
