import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellvec import geo

# evaluated independently before the implementation existed
MERCATOR_X_AT_180 = 20037508.342789244  # R * pi
MERCATOR_Y_AT_LIMIT = 20037508.34278071  # R * ln(tan(pi/4 + phi/2)) at 85.0511287798
ONE_DEGREE_ARC_M = 111194.92664455873  # 2 * pi * 6371000 / 360

GRID = geo.GridSpec(30.0)

uint32 = st.integers(min_value=0, max_value=2**32 - 1)


def morton_oracle(ix, iy):
    # independent bit-by-bit interleave
    out = 0
    for k in range(32):
        out |= ((ix >> k) & 1) << (2 * k)
        out |= ((iy >> k) & 1) << (2 * k + 1)
    return out


class TestProject:
    def test_origin_is_fixed_point(self):
        assert geo.project(0.0, 0.0) == (0.0, 0.0)

    def test_antimeridian(self):
        x, y = geo.project(180.0, 0.0)
        assert x == pytest.approx(MERCATOR_X_AT_180, abs=1e-6)
        assert y == 0.0

    def test_latitude_limit(self):
        x, y = geo.project(0.0, 85.0511287798)
        assert x == 0.0
        assert y == pytest.approx(MERCATOR_Y_AT_LIMIT, abs=1e-2)

    @pytest.mark.parametrize("lon,lat", [(0.0, 86.0), (0.0, -90.0), (181.0, 0.0), (0.0, float("nan"))])
    def test_out_of_range_raises(self, lon, lat):
        with pytest.raises(ValueError):
            geo.project(lon, lat)

    def test_round_trip_within_1e9_degrees(self):
        rng = np.random.default_rng(11)
        lon = rng.uniform(-180.0, 180.0, 10_000)
        lat = rng.uniform(-85.05, 85.05, 10_000)
        lon2, lat2 = geo.unproject(*geo.project(lon, lat))
        assert np.abs(lon2 - lon).max() < 1e-9
        assert np.abs(lat2 - lat).max() < 1e-9


class TestMorton:
    @pytest.mark.parametrize("ix,iy,code", [(0, 0, 0), (1, 1, 3), (5, 3, 27)])
    def test_known_codes(self, ix, iy, code):
        assert geo.morton_encode(ix, iy) == code
        assert geo.morton_decode(code) == (ix, iy)

    @given(uint32, uint32)
    def test_matches_bit_oracle(self, ix, iy):
        assert geo.morton_encode(ix, iy) == morton_oracle(ix, iy)

    @given(uint32, uint32)
    def test_decode_inverts_encode(self, ix, iy):
        assert geo.morton_decode(geo.morton_encode(ix, iy)) == (ix, iy)

    def test_vectorized_round_trip(self):
        rng = np.random.default_rng(5)
        ix = rng.integers(0, 2**32, 1000, dtype=np.uint64)
        iy = rng.integers(0, 2**32, 1000, dtype=np.uint64)
        dx, dy = geo.morton_decode(geo.morton_encode(ix, iy))
        assert np.array_equal(dx, ix) and np.array_equal(dy, iy)

    def test_x_step_touches_even_bits_only(self):
        rng = np.random.default_rng(6)
        ix = rng.integers(0, 2**32 - 1, 5000, dtype=np.uint64)
        iy = rng.integers(0, 2**32, 5000, dtype=np.uint64)
        diff = geo.morton_encode(ix, iy) ^ geo.morton_encode(ix + np.uint64(1), iy)
        assert np.all((diff & np.uint64(0xAAAAAAAAAAAAAAAA)) == 0)


class TestCells:
    @pytest.mark.parametrize("x,y,expected", [
        (0.0, 0.0, (0, 0)),
        (-0.5, -0.5, (-1, -1)),
        (45.0, 29.999, (1, 0)),
    ])
    def test_floor_indexing(self, x, y, expected):
        assert geo.cell_indices(geo.cell_of(x, y, GRID)) == expected

    def test_out_of_extent_raises(self):
        with pytest.raises(ValueError):
            geo.cell_of(2.1e7, 0.0, GRID)

    def test_centroid_of_origin_cell(self):
        code = geo.cell_of(0.0, 0.0, GRID)
        lon, lat = geo.cell_centroid(code, GRID)
        assert (lon, lat) == pytest.approx(geo.unproject(15.0, 15.0))

    def test_centroid_of_negative_cell(self):
        code = geo.cell_of(-0.5, -0.5, GRID)
        assert geo.cell_centroid(code, GRID) == pytest.approx(geo.unproject(-15.0, -15.0))

    @given(st.floats(-2e7, 2e7), st.floats(-1.9e7, 1.9e7))
    @settings(max_examples=200)
    def test_centroid_round_trips_to_same_cell(self, x, y):
        code = geo.cell_of(x, y, GRID)
        lon, lat = geo.cell_centroid(code, GRID)
        assert geo.cell_of(*geo.project(lon, lat), GRID) == code

    def test_cell_size_must_be_positive(self):
        with pytest.raises(ValueError):
            geo.GridSpec(0.0)


class TestDistance:
    def test_identity(self):
        assert geo.distance_m(23.7, 37.9, 23.7, 37.9) == 0.0

    def test_one_degree_of_latitude(self):
        assert geo.distance_m(0.0, 0.0, 0.0, 1.0) == pytest.approx(ONE_DEGREE_ARC_M, abs=1e-2)

    @given(st.floats(-179.0, 179.0), st.floats(-80.0, 80.0),
           st.floats(-179.0, 179.0), st.floats(-80.0, 80.0))
    def test_symmetry(self, lon1, lat1, lon2, lat2):
        assert geo.distance_m(lon1, lat1, lon2, lat2) == geo.distance_m(lon2, lat2, lon1, lat1)

    def test_triangle_inequality_on_sampled_triples(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            lon = rng.uniform(-179, 179, 3)
            lat = rng.uniform(-80, 80, 3)
            ab = geo.distance_m(lon[0], lat[0], lon[1], lat[1])
            bc = geo.distance_m(lon[1], lat[1], lon[2], lat[2])
            ac = geo.distance_m(lon[0], lat[0], lon[2], lat[2])
            assert ac <= ab + bc + 1e-6

    def test_plane_distance(self):
        assert geo.plane_distance_m(0.0, 0.0, 3.0, 4.0) == 5.0
