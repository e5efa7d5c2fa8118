import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgrg.geometry import (
    CellGrid,
    MetricMode,
    ball_volume,
    distance,
    grid_build,
    grid_neighbors,
    sq_distances,
)

# frozen 50-digit evaluations of pi^(d/2) / Gamma(d/2 + 1)
RHO_2 = 3.1415926535897932
RHO_3 = 4.1887902047863910
RHO_4 = 4.9348022005446793


class TestBallVolume:
    @pytest.mark.parametrize("d,expected", [(2, RHO_2), (3, RHO_3), (4, RHO_4)])
    def test_known_values(self, d, expected):
        assert ball_volume(d) == pytest.approx(expected, rel=1e-14)

    def test_recurrence(self):
        # rho(d) = rho(d-2) * 2 pi / d
        for d in range(4, 40):
            assert ball_volume(d) == pytest.approx(
                ball_volume(d - 2) * 2.0 * math.pi / d, rel=1e-12
            )

    @pytest.mark.parametrize("d", [1, 0, -3])
    def test_rejects_low_dimension(self, d):
        with pytest.raises(ValueError):
            ball_volume(d)

    def test_rejects_non_integer(self):
        with pytest.raises(ValueError):
            ball_volume(2.5)

    def test_positive(self):
        assert all(ball_volume(d) > 0.0 for d in range(2, 60))


class TestDistance:
    def test_zero_for_equal_points(self):
        p = np.array([0.3, 0.7, 0.1])
        for mode in MetricMode:
            assert distance(p, p, mode) == 0.0

    def test_torus_wraparound(self):
        p, q = np.array([0.05, 0.5]), np.array([0.95, 0.5])
        assert distance(p, q, MetricMode.TORUS) == pytest.approx(0.1, abs=1e-15)

    def test_cube_no_wraparound(self):
        p, q = np.array([0.05, 0.5]), np.array([0.95, 0.5])
        assert distance(p, q, MetricMode.CUBE) == pytest.approx(0.9, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            distance(np.array([0.1, 0.2]), np.array([0.1, 0.2, 0.3]))

    @given(
        st.lists(st.floats(0.0, 1.0, exclude_max=True), min_size=2, max_size=4),
        st.lists(st.floats(0.0, 1.0, exclude_max=True), min_size=2, max_size=4),
    )
    @settings(max_examples=200)
    def test_symmetry(self, xs, ys):
        d = min(len(xs), len(ys))
        p, q = np.array(xs[:d]), np.array(ys[:d])
        for mode in MetricMode:
            assert distance(p, q, mode) == distance(q, p, mode)

    @given(
        st.integers(2, 4),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=200)
    def test_torus_below_cube_and_triangle(self, d, seed):
        gen = np.random.default_rng(seed)
        p, q, r = gen.random((3, d))
        for mode in MetricMode:
            pq, qr, pr = distance(p, q, mode), distance(q, r, mode), distance(p, r, mode)
            assert pr <= pq + qr + 1e-12
        assert distance(p, q, MetricMode.TORUS) <= distance(p, q, MetricMode.CUBE) + 1e-15

    def test_torus_coordinate_contribution_capped(self):
        # each wrapped coordinate difference is at most 1/2
        gen = np.random.default_rng(0)
        for d in (2, 3):
            pts = gen.random((200, d))
            for i in range(0, 200, 2):
                assert distance(pts[i], pts[i + 1], MetricMode.TORUS) <= math.sqrt(d) / 2 + 1e-12


class TestCellGrid:
    def test_empty_grid(self):
        grid = grid_build(np.zeros((0, 2)), 0.25)
        assert grid.n == 0
        assert grid.buckets == {}

    def test_single_point_bucket(self):
        for mode in MetricMode:
            grid = grid_build(np.array([[0.5, 0.5]]), 0.25, mode)
            assert list(grid.buckets.keys()) == [(2, 2)]

    def test_rejects_bad_side(self):
        pts = np.array([[0.1, 0.2]])
        for side in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                grid_build(pts, side)

    def test_single_vertex_has_no_neighbors(self):
        grid = grid_build(np.array([[0.5, 0.5]]), 0.25)
        assert grid_neighbors(grid, 0).size == 0

    def test_same_cell_vertices_see_each_other(self):
        grid = grid_build(np.array([[0.51, 0.52], [0.52, 0.51]]), 0.25)
        assert grid_neighbors(grid, 0).tolist() == [1]
        assert grid_neighbors(grid, 1).tolist() == [0]

    def test_unknown_vertex(self):
        grid = grid_build(np.array([[0.5, 0.5]]), 0.25)
        with pytest.raises(KeyError):
            grid_neighbors(grid, 3)

    def test_every_vertex_in_exactly_one_bucket(self):
        gen = np.random.default_rng(11)
        grid = grid_build(gen.random((300, 2)), 0.2)
        all_members = np.concatenate(list(grid.buckets.values()))
        assert sorted(all_members.tolist()) == list(range(300))

    @pytest.mark.parametrize("mode", list(MetricMode))
    def test_neighbors_cover_radius_512(self, mode):
        gen = np.random.default_rng(7)
        pts = gen.random((512, 2))
        side = 0.11
        grid = grid_build(pts, side, mode)
        for v in range(512):
            nbrs = set(grid_neighbors(grid, v).tolist())
            d = np.sqrt(sq_distances(pts, np.broadcast_to(pts[v], pts.shape), mode))
            close = {u for u in np.flatnonzero(d <= side).tolist() if u != v}
            assert close <= nbrs

    def test_grid_completeness_100_random_configs(self):
        # no pair within the query radius may ever be missed
        gen = np.random.default_rng(123)
        for trial in range(100):
            n = int(gen.integers(2, 120))
            d = int(gen.integers(2, 4))
            side = float(gen.uniform(0.05, 1.0))
            mode = MetricMode.TORUS if trial % 2 == 0 else MetricMode.CUBE
            pts = gen.random((n, d))
            grid = grid_build(pts, side, mode)
            cand = set()
            for u, v in grid.candidate_pairs():
                cand.update(
                    (min(a, b), max(a, b)) for a, b in zip(u.tolist(), v.tolist())
                )
            iu, iv = np.triu_indices(n, k=1)
            ss = sq_distances(pts[iu], pts[iv], mode)
            within = ss <= side * side
            true_pairs = set(zip(iu[within].tolist(), iv[within].tolist()))
            assert true_pairs <= cand, f"trial {trial} missed pairs"
            for v in range(n):
                nbrs = set(grid_neighbors(grid, v).tolist())
                mine = {b if a == v else a for a, b in true_pairs if v in (a, b)}
                assert mine <= nbrs

    def test_candidate_pairs_unique(self):
        gen = np.random.default_rng(5)
        for mode in MetricMode:
            pts = gen.random((200, 2))
            grid = grid_build(pts, 0.3, mode)
            seen = []
            for u, v in grid.candidate_pairs():
                seen.extend(zip(np.minimum(u, v).tolist(), np.maximum(u, v).tolist()))
            assert len(seen) == len(set(seen))

    def test_torus_coarse_grid_falls_back_to_all_pairs(self):
        gen = np.random.default_rng(9)
        pts = gen.random((40, 2))
        grid = grid_build(pts, 0.45, MetricMode.TORUS)  # 2 cells per axis
        pairs = set()
        for u, v in grid.candidate_pairs():
            pairs.update(zip(np.minimum(u, v).tolist(), np.maximum(u, v).tolist()))
        assert len(pairs) == 40 * 39 // 2
