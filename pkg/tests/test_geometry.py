import math

import numpy as np
import pytest
from scipy import ndimage

from helpers import brute_force_buffer, make_occ, oracle_collision_map, \
    random_occupancy
from poisson_safety.errors import DegenerateShape, OutOfDomain
from poisson_safety.geometry import (FootprintShape, Kernel, buffer_safe_set,
                                     collision_check, rasterize_footprint)


class TestFootprintShape:
    def test_degenerate_shapes(self):
        with pytest.raises(DegenerateShape):
            FootprintShape.ellipse(0.0, 0.1).validate()
        with pytest.raises(DegenerateShape):
            FootprintShape.polygon([(0, 0), (1, 0)]).validate()
        with pytest.raises(DegenerateShape):
            # bow-tie: self-intersecting
            FootprintShape.polygon(
                [(-1, -1), (1, 1), (1, -1), (-1, 1)]).validate()
        with pytest.raises(DegenerateShape):
            # origin outside
            FootprintShape.polygon([(1, 1), (2, 1), (2, 2), (1, 2)]).validate()

    def test_json_round_trip(self):
        for shape in (FootprintShape.ellipse(0.3, 0.12),
                      FootprintShape.rectangle(0.6, 0.2)):
            assert FootprintShape.from_json(shape.to_json()) == shape
        with pytest.raises(DegenerateShape):
            FootprintShape.from_json({"kind": "blob"})

    def test_bounding_radius(self):
        assert FootprintShape.ellipse(0.3, 0.1).bounding_radius() == 0.3
        assert FootprintShape.rectangle(0.6, 0.2).bounding_radius() \
            == pytest.approx(math.hypot(0.3, 0.1))


class TestRasterize:
    def test_disk_heading_invariant(self):
        shape = FootprintShape.disk(0.25)
        base = rasterize_footprint(shape, 0.0, 0.1)
        for th in np.linspace(0.1, 2 * math.pi, 7):
            k = rasterize_footprint(shape, th, 0.1)
            assert np.array_equal(k.cells, base.cells)
            assert k.anchor == base.anchor

    def test_disk_matches_distance_threshold(self):
        # set iff center distance <= r + resolution / 2, exactly
        shape = FootprintShape.disk(0.25)
        k = rasterize_footprint(shape, 0.0, 0.1)
        offs = k.offsets()
        d = np.hypot(offs[:, 0], offs[:, 1]) * 0.1
        assert np.all(d <= 0.25 + 0.05 + 1e-12)
        # and no eligible offset is missing
        limit = (0.25 + 0.05) / 0.1
        half = 5
        ii, jj = np.meshgrid(np.arange(-half, half + 1),
                             np.arange(-half, half + 1), indexing="ij")
        want = ii ** 2 + jj ** 2 <= limit ** 2
        got = np.zeros_like(want)
        ax, ay = k.anchor
        got[offs[:, 0] + half, offs[:, 1] + half] = True
        assert np.array_equal(got, want)

    def test_rectangle_half_turn_symmetry(self):
        shape = FootprintShape.rectangle(0.6, 0.2)
        k0 = rasterize_footprint(shape, 0.0, 0.05)
        k1 = rasterize_footprint(shape, math.pi, 0.05)
        assert np.array_equal(k0.cells, k1.cells)

    def test_rectangle_quarter_turn_swaps_axes(self):
        shape = FootprintShape.rectangle(0.6, 0.2)
        k0 = rasterize_footprint(shape, 0.0, 0.1)
        k9 = rasterize_footprint(shape, math.pi / 2, 0.1)
        assert k0.cells.shape == (7, 3)
        assert k9.cells.shape == (3, 7)

    def test_rejects_bad_resolution(self):
        with pytest.raises(ValueError):
            rasterize_footprint(FootprintShape.disk(0.1), 0.0, 0.0)

    def test_kernel_validation(self):
        with pytest.raises(ValueError):
            Kernel(np.zeros((3, 3), dtype=bool), (1, 1), 0.1)
        with pytest.raises(ValueError):
            Kernel(np.ones((3, 3), dtype=bool), (3, 1), 0.1)


class TestBufferSafeSet:
    def test_point_kernel_identity(self):
        rng = np.random.default_rng(0)
        occ = random_occupancy(rng, 32, 32, 0.1)
        k = Kernel(np.ones((1, 1), dtype=bool), (0, 0), 0.1)
        out = buffer_safe_set(occ, k)
        assert np.array_equal(out.cells, occ.cells)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        shape = FootprintShape.rectangle(0.6, 0.2)
        for th in (0.0, 0.7, 2.0):
            occ = random_occupancy(rng, 24, 24, 0.1, density=(0.05, 0.15))
            k = rasterize_footprint(shape, th, 0.1)
            out = buffer_safe_set(occ, k)
            ref = brute_force_buffer(occ.cells, k)
            assert np.array_equal(out.cells, ref)

    def test_single_cell_disk_threshold(self):
        cells = np.zeros((33, 33), dtype=bool)
        cells[16, 16] = True
        occ = make_occ(33, 33, 0.1, cells)
        # r chosen so no lattice offset lands exactly on the threshold
        # (ties there depend on the last floating bit of r + res/2)
        k = rasterize_footprint(FootprintShape.disk(0.33), 0.0, 0.1)
        out = buffer_safe_set(occ, k)
        # distance-transform threshold oracle: occupied iff the Euclidean
        # distance to the nearest occupied cell (center or border ring) is
        # within r + resolution / 2
        d = ndimage.distance_transform_edt(occ.free) * 0.1
        want = d <= 0.33 + 0.05
        assert np.array_equal(out.cells, want)

    def test_narrow_free_space_erased(self):
        cells = np.ones((21, 21), dtype=bool)
        cells[9:12, 1:-1] = False    # 3-cell-wide slot
        occ = make_occ(21, 21, 0.1, cells)
        k = rasterize_footprint(FootprintShape.disk(0.35), 0.0, 0.1)
        out = buffer_safe_set(occ, k)
        assert out.cells.all()

    def test_monotone_in_kernel(self):
        rng = np.random.default_rng(2)
        occ = random_occupancy(rng, 32, 32, 0.1)
        small = rasterize_footprint(FootprintShape.disk(0.15), 0.0, 0.1)
        big = rasterize_footprint(FootprintShape.disk(0.35), 0.0, 0.1)
        free_small = buffer_safe_set(occ, small).free
        free_big = buffer_safe_set(occ, big).free
        assert np.all(free_big <= free_small)   # big-free subset of small-free

    def test_resolution_mismatch(self):
        occ = make_occ(9, 9, 0.1)
        k = rasterize_footprint(FootprintShape.disk(0.2), 0.0, 0.05)
        with pytest.raises(ValueError):
            buffer_safe_set(occ, k)


class TestCollisionCheck:
    def test_trivials(self):
        occ = make_occ(33, 33, 0.1)
        shape = FootprintShape.disk(0.2)
        assert not collision_check(occ, shape, (1.6, 1.6, 0.0))
        cells = occ.cells.copy()
        cells[16, 16] = True
        occ2 = make_occ(33, 33, 0.1, cells)
        assert collision_check(occ2, shape, (1.6, 1.6, 0.0))

    def test_wall_clearance_threshold(self):
        # wall at x >= 2.0 (cell centers), rectangle nose at x + 0.3
        cells = np.zeros((41, 41), dtype=bool)
        cells[20:, :] = True
        occ = make_occ(41, 41, 0.1, cells)
        shape = FootprintShape.rectangle(0.6, 0.2)
        # occupied cell squares reach down to x = 1.95
        assert not collision_check(occ, shape, (1.60, 2.0, 0.0))
        assert collision_check(occ, shape, (1.72, 2.0, 0.0))

    def test_out_of_domain(self):
        occ = make_occ(9, 9, 0.1)
        with pytest.raises(OutOfDomain):
            collision_check(occ, FootprintShape.disk(0.1), (-1.0, 0.1, 0.0))


class TestSoundness:
    def test_buffered_free_implies_no_collision(self):
        # randomized grids, all 16 headings, every buffered-free pose
        rng = np.random.default_rng(3)
        shape = FootprintShape.rectangle(0.6, 0.2)
        for _ in range(6):
            occ = random_occupancy(rng, 48, 48, 0.05)
            for j in range(16):
                th = j * 2 * math.pi / 16
                k = rasterize_footprint(shape, th, 0.05)
                buffered = buffer_safe_set(occ, k)
                oracle = oracle_collision_map(occ, shape, th)
                unsound = buffered.free & oracle
                assert not unsound.any()

    def test_oracle_map_agrees_with_pointwise_oracle(self):
        # ties the vectorized map to collision_check on sampled poses
        rng = np.random.default_rng(4)
        shape = FootprintShape.rectangle(0.6, 0.2)
        occ = random_occupancy(rng, 48, 48, 0.05)
        th = 0.7
        omap = oracle_collision_map(occ, shape, th)
        spec = occ.spec
        for _ in range(40):
            i = int(rng.integers(7, 41))
            j = int(rng.integers(7, 41))
            x, y = spec.grid_to_world(i, j)
            assert omap[i, j] == collision_check(occ, shape, (x, y, th))

    def test_anti_conservatism_bound(self):
        # no collision-free pose sits deeper than 1.5 cells inside the
        # buffered occupied region
        rng = np.random.default_rng(5)
        shape = FootprintShape.rectangle(0.6, 0.2)
        for _ in range(3):
            occ = random_occupancy(rng, 48, 48, 0.05)
            for th in (0.0, 0.9):
                k = rasterize_footprint(shape, th, 0.05)
                buffered = buffer_safe_set(occ, k)
                oracle = oracle_collision_map(occ, shape, th)
                # depth (in cells) of each cell inside the buffered set
                depth = ndimage.distance_transform_cdt(
                    buffered.cells, metric="chessboard")
                deep = (depth > 1.5) & ~oracle
                deep[0, :] = deep[-1, :] = False
                deep[:, 0] = deep[:, -1] = False
                assert not deep.any()
