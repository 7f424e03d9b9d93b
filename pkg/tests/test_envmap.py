import itertools

import numpy as np
import pytest

from rendezplan.envmap import (
    GridMap,
    RasterMap,
    cluster_map,
    distance_to_forbidden,
    distances_to_forbidden,
    grid_from_json,
    grid_to_json,
    is_feasible,
    kmeans,
    read_csv_grid,
    read_pgm,
    write_grid_pgm,
)
from rendezplan.errors import MapInputError


def two_tone_raster(h=8, w=8, lo=0.1, hi=0.9):
    pixels = np.full((h, w), hi)
    pixels[:, : w // 2] = lo
    return RasterMap(pixels=pixels, cell_size=10.0)


def brute_force_distance(grid, p):
    """Independent scan over all Forbidden cell centers."""
    rows, cols = np.nonzero(~grid.occupancy)
    if len(rows) == 0:
        return float("inf")
    best = min(
        np.linalg.norm(np.asarray(p, float) - grid.cell_center(r, c))
        for r, c in zip(rows, cols)
    )
    return max(0.0, best - 0.5 * grid.cell_size * np.sqrt(2.0))


class TestClustering:
    def test_two_tone_exact_partition(self):
        raster = two_tone_raster()
        grid = cluster_map(raster, k=2, seed=0)
        # dark half is water, bright half is land, no misassignments
        assert grid.occupancy[:, :4].all()
        assert not grid.occupancy[:, 4:].any()

    def test_four_point_clusters_match_exhaustive_optimum(self):
        # Oracle: minimize total squared error over every 2-partition.
        values = np.array([0.0, 1.0, 9.0, 10.0])

        def sse(groups):
            return sum(((np.array(g) - np.mean(g)) ** 2).sum() for g in groups if g)

        best_cost, best_partition = min(
            (
                (sse([[v for v, m in zip(values, mask) if m], [v for v, m in zip(values, mask) if not m]]),
                 tuple(mask))
                for mask in itertools.product([0, 1], repeat=4)
                if 0 < sum(mask) < 4
            ),
            key=lambda t: t[0],
        )
        assert best_cost == pytest.approx(1.0)
        assert best_partition in ((1, 1, 0, 0), (0, 0, 1, 1))

        labels, centers, objective = kmeans(values.reshape(-1, 1), 2, np.random.default_rng(7))
        assert labels[0] == labels[1] and labels[2] == labels[3] and labels[0] != labels[2]
        assert sorted(centers.ravel()) == pytest.approx([0.5, 9.5])
        assert objective[-1] == pytest.approx(best_cost)

    def test_k1_center_is_mean(self):
        values = np.array([2.0, 4.0, 9.0]).reshape(-1, 1)
        labels, centers, _ = kmeans(values, 1, np.random.default_rng(0))
        assert (labels == 0).all()
        assert centers[0, 0] == pytest.approx(5.0)

    def test_objective_non_increasing(self):
        rng = np.random.default_rng(3)
        features = rng.random((400, 2))
        for seed in range(5):
            _, _, objective = kmeans(features, 4, np.random.default_rng(seed))
            assert all(b <= a + 1e-9 for a, b in zip(objective, objective[1:]))

    def test_label_idempotence(self):
        rng = np.random.default_rng(11)
        raster = RasterMap(pixels=rng.random((16, 16)))
        a = cluster_map(raster, k=2, seed=5)
        b = cluster_map(raster, k=2, seed=5)
        assert np.array_equal(a.occupancy, b.occupancy)

    def test_water_seed_overrides_heuristic(self):
        raster = two_tone_raster()
        grid = cluster_map(raster, k=2, seed=0, water_seed=(0, 7))  # bright side
        assert grid.occupancy[:, 4:].all()
        assert not grid.occupancy[:, :4].any()

    def test_bad_k_raises(self):
        with pytest.raises(MapInputError):
            kmeans(np.zeros((3, 1)), 0, np.random.default_rng(0))
        with pytest.raises(MapInputError):
            kmeans(np.zeros((3, 1)), 4, np.random.default_rng(0))


class TestFeasibility:
    def grid(self):
        occ = np.ones((10, 10), bool)
        occ[5, 5] = False
        return GridMap(occupancy=occ, cell_size=10.0, origin=(0.0, 0.0))

    def test_inside_water(self):
        assert is_feasible(self.grid(), np.array([12.0, 12.0, 5.0]))

    def test_forbidden_cell(self):
        assert not is_feasible(self.grid(), np.array([55.0, 55.0, 5.0]))

    def test_outside_extent_is_forbidden(self):
        g = self.grid()
        assert not is_feasible(g, np.array([-1.0, 5.0, 5.0]))
        assert not is_feasible(g, np.array([100.0, 5.0, 5.0]))  # boundary floors out

    def test_depth_limits(self):
        g = self.grid()
        assert is_feasible(g, np.array([12.0, 12.0, 0.0]))
        assert is_feasible(g, np.array([12.0, 12.0, 1000.0]))
        assert not is_feasible(g, np.array([12.0, 12.0, -0.1]))
        assert not is_feasible(g, np.array([12.0, 12.0, 1000.1]))

    def test_boundary_floors_into_higher_cell(self):
        occ = np.ones((4, 4), bool)
        occ[0, 2] = False
        g = GridMap(occupancy=occ, cell_size=10.0)
        assert is_feasible(g, np.array([19.999, 5.0, 0.0]))
        assert not is_feasible(g, np.array([20.0, 5.0, 0.0]))

    def test_world_cell_roundtrip_within_cell_size(self):
        g = self.grid()
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = rng.random(2) * 100.0
            r, c = g.world_to_cell(p)
            assert np.linalg.norm(p - g.cell_center(r, c)) < g.cell_size


class TestDistance:
    def test_single_forbidden_cell(self):
        # One Forbidden cell centered at world (100, 100), cell size 10.
        occ = np.ones((21, 21), bool)
        occ[10, 10] = False
        g = GridMap(occupancy=occ, cell_size=10.0, origin=(-5.0, -5.0))
        assert g.cell_center(10, 10) == pytest.approx([100.0, 100.0])
        d = distance_to_forbidden(g, np.array([160.0, 100.0]))
        expected = 52.928932188134524  # 60 - half cell diagonal
        assert d == pytest.approx(expected, abs=1e-9)
        assert abs(d - brute_force_distance(g, [160.0, 100.0])) < g.cell_size

    def test_inside_forbidden_cell_is_zero(self):
        occ = np.ones((4, 4), bool)
        occ[2, 2] = False
        g = GridMap(occupancy=occ, cell_size=10.0)
        assert distance_to_forbidden(g, np.array([25.0, 25.0])) == 0.0

    def test_all_feasible_is_inf(self):
        g = GridMap(occupancy=np.ones((4, 4), bool), cell_size=10.0)
        assert distance_to_forbidden(g, np.array([5.0, 5.0])) == float("inf")

    def test_never_negative(self):
        occ = np.ones((4, 4), bool)
        occ[1, 1] = False
        g = GridMap(occupancy=occ, cell_size=10.0)
        # adjacent to the forbidden cell: raw distance under half a diagonal
        assert distance_to_forbidden(g, np.array([20.5, 15.0])) >= 0.0

    def test_agrees_with_brute_force(self):
        rng = np.random.default_rng(17)
        occ = rng.random((32, 32)) > 0.1
        g = GridMap(occupancy=occ, cell_size=10.0)
        diag = g.cell_size * np.sqrt(2.0)
        pts = rng.random((50, 2)) * 320.0
        fast = distances_to_forbidden(g, pts)
        for p, d in zip(pts, fast):
            assert d == pytest.approx(distance_to_forbidden(g, p), abs=1e-9)
            assert abs(d - brute_force_distance(g, p)) <= diag

    def test_batch_matches_scalar_outside_extent(self):
        occ = np.ones((8, 8), bool)
        occ[4, 4] = False
        g = GridMap(occupancy=occ, cell_size=10.0)
        pts = np.array([[-30.0, 40.0], [120.0, 40.0], [45.0, 45.0]])
        batch = distances_to_forbidden(g, pts)
        for p, d in zip(pts, batch):
            assert d == pytest.approx(distance_to_forbidden(g, p), abs=1e-9)


class TestIO:
    def test_pgm_ascii_roundtrip(self, tmp_path):
        path = tmp_path / "map.pgm"
        path.write_text("P2\n# chart\n3 2\n255\n0 128 255\n255 0 128\n")
        raster = read_pgm(str(path))
        assert raster.pixels.shape == (2, 3)
        assert raster.pixels[0, 2] == pytest.approx(1.0)
        assert raster.pixels[0, 1] == pytest.approx(128 / 255)

    def test_pgm_binary(self, tmp_path):
        path = tmp_path / "map5.pgm"
        path.write_bytes(b"P5\n3 2\n255\n" + bytes([0, 128, 255, 255, 0, 128]))
        raster = read_pgm(str(path))
        assert raster.pixels.shape == (2, 3)
        assert raster.pixels[1, 0] == pytest.approx(1.0)

    def test_pgm_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_text("P7\n1 1\n255\n0\n")
        with pytest.raises(MapInputError):
            read_pgm(str(path))

    def test_csv_grid(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("0.1,0.9\n0.2,0.8\n")
        raster = read_csv_grid(str(path))
        assert raster.pixels.shape == (2, 2)
        assert raster.pixels[1, 1] == pytest.approx(0.8)

    def test_grid_json_roundtrip(self):
        rng = np.random.default_rng(5)
        occ = rng.random((12, 7)) > 0.4
        g = GridMap(occupancy=occ, cell_size=5.0, origin=(3.0, -2.0), depth_limit=500.0)
        back = grid_from_json(grid_to_json(g))
        assert np.array_equal(back.occupancy, g.occupancy)
        assert back.cell_size == g.cell_size
        assert back.origin == g.origin
        assert back.depth_limit == g.depth_limit

    def test_grid_pgm_export(self, tmp_path):
        occ = np.array([[True, False], [False, True]])
        g = GridMap(occupancy=occ, cell_size=10.0)
        path = tmp_path / "occ.pgm"
        write_grid_pgm(g, str(path))
        back = read_pgm(str(path))
        assert np.array_equal(back.pixels > 0.5, occ)
