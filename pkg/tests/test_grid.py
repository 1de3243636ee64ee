"""Occupancy map semantics: state transitions, inspection tracking,
target flags, snapshots, and the ASCII debug view."""

import math

import numpy as np
import pytest

from searchsim._kernels import FREE, OCCUPIED, UNKNOWN
from searchsim.errors import GridBoundsError
from searchsim.geometry import Pose
from searchsim.grid import (MapConfig, ascii_slice, detect_targets,
                            integrate_camera_frame, integrate_range_scan,
                            is_search_complete, load_snapshot, raycast,
                            save_snapshot, uninspected_indices,
                            uninspected_set)
from searchsim.sensors import RangeScan

from conftest import all_free, make_grid, set_box


def _scan(origin, ends, hits, hit_cells):
    return RangeScan(origin=np.asarray(origin, dtype=np.float64),
                     ends=np.asarray(ends, dtype=np.float64),
                     hits=np.asarray(hits, dtype=np.uint8),
                     hit_cells=np.asarray(hit_cells, dtype=np.int64))


# -- lidar integration ------------------------------------------------------

def test_integrate_hit_ray_marks_traversal_free_and_struck_occupied():
    g = make_grid((20, 5, 5))
    origin = [0.625, 0.625, 0.625]
    # hit reported on the voxel at i=10, surface point on its near face
    end = [10 * 0.25, 0.625, 0.625]
    n = integrate_range_scan(g, Pose(origin, 0.0), _scan(
        origin, [end], [1], [(10, 2, 2)]))
    assert g.state[10, 2, 2] == OCCUPIED
    for i in range(2, 10):
        assert g.state[i, 2, 2] == FREE
    assert n == int(np.count_nonzero(g.state != UNKNOWN))


def test_integrate_is_idempotent_and_one_way():
    g = make_grid((20, 5, 5))
    origin = [0.625, 0.625, 0.625]
    scan = _scan(origin, [[2.5, 0.625, 0.625]], [1], [(10, 2, 2)])
    first = integrate_range_scan(g, Pose(origin, 0.0), scan)
    assert first > 0
    snap = g.state.copy()
    assert integrate_range_scan(g, Pose(origin, 0.0), scan) == 0
    assert np.array_equal(g.state, snap)
    # a later miss ray through the struck voxel must not demote it
    miss = _scan(origin, [[4.5, 0.625, 0.625]], [0], [(-1, -1, -1)])
    integrate_range_scan(g, Pose(origin, 0.0), miss)
    assert g.state[10, 2, 2] == OCCUPIED


def test_integrate_miss_ray_frees_full_traversal():
    g = make_grid((20, 5, 5))
    origin = [0.625, 0.625, 0.625]
    end = [4.875, 0.625, 0.625]
    integrate_range_scan(g, Pose(origin, 0.0), _scan(
        origin, [end], [0], [(-1, -1, -1)]))
    for i in range(2, 20):
        assert g.state[i, 2, 2] == FREE
    assert np.count_nonzero(g.state == OCCUPIED) == 0


def test_integrate_empty_scan_is_a_noop(grid10):
    before = grid10.state.copy()
    n = integrate_range_scan(grid10, Pose([1.0, 1.0, 1.0], 0.0), _scan(
        [1.0, 1.0, 1.0], np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3))))
    assert n == 0
    assert np.array_equal(grid10.state, before)


def test_integrate_origin_outside_raises(grid10):
    with pytest.raises(GridBoundsError):
        integrate_range_scan(grid10, Pose([-1.0, 0.0, 0.0], 0.0), _scan(
            [-1.0, 0.0, 0.0], [[1.0, 1.0, 1.0]], [0], [(-1, -1, -1)]))


# -- camera integration -----------------------------------------------------

def _wall_grid(wall_i=12, dims=(20, 9, 9)):
    """Known-free room with a one-voxel-thick x-normal wall."""
    g = all_free(make_grid(dims))
    set_box(g, (wall_i, 0, 0), (wall_i + 1, dims[1], dims[2]), OCCUPIED)
    return g


def test_camera_records_min_distance_and_reports_crossings(mapcfg):
    g = _wall_grid()
    wall_x = g.index_to_center((12, 4, 4))[0]
    face = (12, 4, 4)
    far_pose = Pose([wall_x - 3.5, 1.125, 1.125], 0.0)
    near_pose = Pose([wall_x - 2.0, 1.125, 1.125], 0.0)

    newly_far = integrate_camera_frame(g, far_pose, mapcfg)
    # 3.5 m straight ahead: seen but beyond d_max=3, still uninspected
    assert face not in newly_far
    d_far = g.closest_obs[face]
    assert d_far > mapcfg.d_max
    assert face in uninspected_set(g, mapcfg)

    newly_near = integrate_camera_frame(g, near_pose, mapcfg)
    assert face in newly_near
    assert g.closest_obs[face] == pytest.approx(2.0, abs=1e-6)
    assert face not in uninspected_set(g, mapcfg)

    # crossing is reported once: a repeat frame finds nothing new
    assert face not in integrate_camera_frame(g, near_pose, mapcfg)
    # and min-tracking never regresses when viewed from farther away
    integrate_camera_frame(g, far_pose, mapcfg)
    assert g.closest_obs[face] == pytest.approx(2.0, abs=1e-6)


def test_camera_distance_is_stored_at_float32(mapcfg):
    g = _wall_grid()
    pose = Pose([g.index_to_center((12, 4, 4))[0] - 2.345678901, 1.125, 1.125], 0.0)
    integrate_camera_frame(g, pose, mapcfg)
    stored = g.closest_obs[12, 4, 4]
    assert stored.dtype == np.float32
    assert stored == np.float32(2.345678901)


def test_camera_respects_occlusion(mapcfg):
    g = _wall_grid(wall_i=8)
    # second wall hidden behind the first
    set_box(g, (14, 0, 0), (15, 9, 9), OCCUPIED)
    pose = Pose([0.375, 1.125, 1.125], 0.0)
    integrate_camera_frame(g, pose, mapcfg)
    assert g.closest_obs[8, 4, 4] < np.inf
    assert np.all(np.isinf(g.closest_obs[14]))


def test_camera_respects_frustum(mapcfg):
    g = _wall_grid()
    pose = Pose([g.index_to_center((12, 4, 4))[0] - 2.0, 1.125, 1.125], 0.0)
    integrate_camera_frame(g, pose, mapcfg)
    # directly behind the camera: outside any forward frustum
    assert np.all(np.isinf(g.closest_obs[:4]))


def test_camera_uses_truth_mask_when_given(mapcfg):
    # believed map has no wall yet, truth does: the truth mask occludes
    g = all_free(make_grid((20, 9, 9)))
    set_box(g, (14, 0, 0), (15, 9, 9), OCCUPIED)
    truth = np.zeros(g.dims, dtype=np.uint8)
    truth[10, :, :] = 1
    truth[14, :, :] = 1
    integrate_camera_frame(g, Pose([0.375, 1.125, 1.125], 0.0), mapcfg,
                           blocked=truth)
    assert np.all(np.isinf(g.closest_obs[14]))


def test_uninspected_indices_matches_set_and_is_sorted(mapcfg):
    g = _wall_grid()
    integrate_camera_frame(
        g, Pose([g.index_to_center((12, 4, 4))[0] - 2.0, 1.125, 1.125], 0.0),
        mapcfg)
    idx = uninspected_indices(g, mapcfg)
    assert {tuple(r) for r in idx} == uninspected_set(g, mapcfg)
    assert np.array_equal(idx, idx[np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0]))])


# -- target detection -------------------------------------------------------

def test_detect_targets_reports_fresh_visible_only(mapcfg):
    g = _wall_grid()
    wall_near_x = 12 * 0.25
    tgt_on_wall = [wall_near_x + 0.1, 1.125, 1.125]
    tgt_behind = [wall_near_x + 0.1, 1.875, 1.125]
    pose = Pose([wall_near_x - 2.0, 1.125, 1.125], 0.0)

    got = detect_targets(g, pose, mapcfg, [tgt_on_wall, tgt_behind])
    assert got == [0, 1]
    assert g.is_target[12, 4, 4] and g.is_target[12, 7, 4]
    # flagged targets never re-reported
    assert detect_targets(g, pose, mapcfg, [tgt_on_wall, tgt_behind]) == []


def test_detect_targets_blocked_by_wall(mapcfg):
    g = _wall_grid(wall_i=8)
    set_box(g, (14, 0, 0), (15, 9, 9), OCCUPIED)
    hidden = [14 * 0.25 + 0.1, 1.125, 1.125]
    assert detect_targets(g, Pose([0.375, 1.125, 1.125], 0.0),
                          mapcfg, [hidden]) == []
    assert not g.is_target.any()


def test_detect_targets_beyond_dmax_not_reported(mapcfg):
    g = _wall_grid()
    tgt = [12 * 0.25 + 0.1, 1.125, 1.125]
    pose = Pose([12 * 0.25 - mapcfg.d_max - 0.5, 1.125, 1.125], 0.0)
    assert detect_targets(g, pose, mapcfg, [tgt]) == []


def test_detect_targets_empty_list(mapcfg, grid10):
    assert detect_targets(grid10, Pose([1.0, 1.0, 1.0], 0.0), mapcfg, []) == []


# -- completeness -----------------------------------------------------------

def test_search_complete_requires_known_and_inspected(mapcfg):
    g = _wall_grid()
    reach = np.ones(g.dims, dtype=bool)
    assert not is_search_complete(g, mapcfg, reach)  # wall uninspected
    g.closest_obs[g.state == OCCUPIED] = 1.0
    assert is_search_complete(g, mapcfg, reach)
    g.state[0, 0, 0] = UNKNOWN
    assert not is_search_complete(g, mapcfg, reach)
    reach[0, 0, 0] = False  # sealed voxels are exempt
    assert is_search_complete(g, mapcfg, reach)


def test_search_complete_exempts_unreachable_uninspected(mapcfg):
    g = _wall_grid()
    reach = np.ones(g.dims, dtype=bool)
    reach[g.state == OCCUPIED] = False
    # wall cells unreachable: their inspection state stops mattering
    g.closest_obs[12, 4, 4] = 1.0
    reach[12, 4, 4] = True
    assert is_search_complete(g, mapcfg, reach)


def test_search_complete_shape_mismatch_raises(mapcfg, grid10):
    with pytest.raises(ValueError):
        is_search_complete(grid10, mapcfg, np.ones((3, 3, 3), dtype=bool))


# -- snapshots --------------------------------------------------------------

def test_snapshot_round_trip(tmp_path, mapcfg):
    g = _wall_grid()
    integrate_camera_frame(
        g, Pose([12 * 0.25 - 2.0, 1.125, 1.125], 0.0), mapcfg)
    g.is_target[12, 4, 4] = True
    path = tmp_path / "map.snapshot"
    save_snapshot(g, path)
    back = load_snapshot(path)
    assert back.dims == g.dims
    assert back.resolution == g.resolution
    assert np.array_equal(back.origin, g.origin)
    assert np.array_equal(back.state, g.state)
    assert np.array_equal(back.closest_obs, g.closest_obs)
    assert np.array_equal(back.is_target, g.is_target)


def test_snapshot_truncated_file_raises(tmp_path):
    g = make_grid((6, 6, 6))
    path = tmp_path / "map.snapshot"
    save_snapshot(g, path)
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(ValueError):
        load_snapshot(path)


# -- ascii ------------------------------------------------------------------

def test_ascii_slice_symbols_and_orientation(mapcfg):
    g = make_grid((3, 2, 1))
    g.state[:, :, 0] = UNKNOWN
    g.state[0, 0, 0] = FREE
    g.state[1, 0, 0] = OCCUPIED           # uninspected -> '!'
    g.state[2, 0, 0] = OCCUPIED
    g.closest_obs[2, 0, 0] = 1.0          # inspected -> '#'
    g.state[2, 1, 0] = OCCUPIED
    g.closest_obs[2, 1, 0] = 1.0
    g.is_target[2, 1, 0] = True           # target wins -> 'T'
    art = ascii_slice(g, 0, mapcfg)
    assert art == "??T\n.!#"


def test_ascii_slice_bad_index_raises(mapcfg, grid10):
    with pytest.raises(GridBoundsError):
        ascii_slice(grid10, 99, mapcfg)
