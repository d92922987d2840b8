import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carcensus.geo import (
    CameraPlan, ConstantRoadOracle, GpsPoint, PolylineRoadOracle, R_EARTH, filter_near_road,
    generate_grid, haversine_m, merge_points, read_points, rotations, unwarp, write_points,
)


def test_gps_point_ranges():
    GpsPoint(90.0, -180.0)
    with pytest.raises(ValueError):
        GpsPoint(91.0, 0.0)
    with pytest.raises(ValueError):
        GpsPoint(0.0, 180.0)


def test_grid_counts():
    assert len(generate_grid(GpsPoint(37.0, -122.0), 20000, 25)) == 641_601
    assert len(generate_grid(GpsPoint(37.0, -122.0), 25, 25)) == 4
    assert len(generate_grid(GpsPoint(0.0, 0.0), 100, 25)) == 25


def test_grid_centroid_and_steps():
    c = GpsPoint(45.0, 10.0)
    g = generate_grid(c, 1000, 25)
    assert abs(g[:, 0].mean() - c.lat) < 1e-9 and abs(g[:, 1].mean() - c.lon) < 1e-9
    n = 41
    assert g[1, 1] - g[0, 1] == pytest.approx(math.degrees(25 / (R_EARTH * math.cos(math.radians(45)))))
    assert g[n, 0] - g[0, 0] == pytest.approx(math.degrees(25 / R_EARTH))
    # rows south to north, points west to east within a row
    assert np.all(np.diff(g[:n, 1]) > 0) and np.all(np.diff(g[::n, 0]) > 0)


@pytest.mark.parametrize("side,spacing", [(0, 25), (100, 0), (100, 30), (-100, 25)])
def test_grid_rejects_bad_sizes(side, spacing):
    with pytest.raises(ValueError):
        generate_grid(GpsPoint(0, 0), side, spacing)


def test_grid_rejects_pole():
    with pytest.raises(ValueError, match="pole"):
        generate_grid(GpsPoint(89.5, 0), 100, 25)


@settings(max_examples=30, deadline=None)
@given(st.floats(-60, 60), st.floats(-180, 179.99))
def test_central_row_spacing(lat, lon):
    g = generate_grid(GpsPoint(lat, lon), 2000, 25)
    n = 81
    row = g[40 * n:41 * n]
    d = haversine_m(row[:-1, 0], row[:-1, 1], row[1:, 0], row[1:, 1])
    assert np.max(np.abs(d - 25) / 25) < 1e-3


def test_grid_wraps_antimeridian():
    g = generate_grid(GpsPoint(0.0, 179.9999), 200, 25)
    assert np.all((g[:, 1] >= -180) & (g[:, 1] < 180))


def test_filter_constant_oracles():
    pts = generate_grid(GpsPoint(10, 10), 100, 25)
    assert np.array_equal(filter_near_road(pts, ConstantRoadOracle(0)).kept, pts)
    assert np.array_equal(filter_near_road(pts, ConstantRoadOracle(12.5)).kept, pts)
    assert len(filter_near_road(pts, ConstantRoadOracle(12.6)).kept) == 0


def test_filter_strip_around_a_parallel():
    c = GpsPoint(40.0, -100.0)
    pts = generate_grid(c, 500, 5)
    road = PolylineRoadOracle([[c.lat, -101.0, c.lat, -99.0]])
    kept = filter_near_road(pts, road).kept
    north_m = np.radians(pts[:, 0] - c.lat) * R_EARTH
    expected = pts[np.abs(north_m) <= 12.5 + 1e-6]
    assert np.array_equal(kept, expected)
    assert len(np.unique(np.round(expected[:, 0], 9))) == 5  # rows at -10, -5, 0, 5, 10 m


def test_scalar_oracle_errors_are_reported_in_order():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])

    def flaky(lat, lon):
        if lat == 1.0:
            raise TimeoutError("service down")
        if lat == 3.0:
            return float("nan")
        return 5.0 if lat == 0.0 else 50.0

    res = filter_near_road(pts, flaky, max_workers=3)
    assert res.kept.tolist() == [[0.0, 0.0]]
    assert [e[0] for e in res.errors] == [1, 3]
    assert "service down" in res.errors[0][3]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 40), min_size=1, max_size=30), st.floats(0, 20), st.floats(0, 20))
def test_filter_monotone_in_distance(dists, d1, extra):
    pts = np.column_stack([np.arange(len(dists), dtype=float), np.zeros(len(dists))])
    lookup = dict(zip(pts[:, 0].tolist(), dists))
    oracle = lambda lat, lon: lookup[lat]
    small = {tuple(p) for p in filter_near_road(pts, oracle, d1).kept.tolist()}
    large = {tuple(p) for p in filter_near_road(pts, oracle, d1 + extra).kept.tolist()}
    assert small <= large


def test_polyline_distance_matches_haversine():
    road = PolylineRoadOracle([[0.0, 0.0, 0.0, 1.0]])
    d = road(0.001, 0.5)
    assert d == pytest.approx(haversine_m(0.001, 0.5, 0.0, 0.5), rel=1e-6)
    # beyond the end the nearest point is the endpoint
    assert road(0.0, 1.001) == pytest.approx(haversine_m(0.0, 1.001, 0.0, 1.0), rel=1e-6)


def test_merge_points_dedups():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[1.00000001, 2.0], [5.0, 6.0], [5.0, 6.0]])
    assert merge_points(a, b).tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]


def test_rotations():
    plan = rotations(GpsPoint(1, 2))
    assert plan.headings == (0, 60, 120, 180, 240, 300)
    assert plan.overlap_deg == 30
    assert (plan.image_width, plan.image_height, plan.hfov) == (860, 573, 90)
    with pytest.raises(ValueError):
        CameraPlan(GpsPoint(0, 0), (0, 60, 120, 180, 240, 360))


def test_unwarp_optical_axis():
    x, y, clamped = unwarp(3600, 1800, 120.0, 430, 286.5)
    assert (x, y, clamped) == (1200.0, 900.0, False)


def test_unwarp_half_width_ray_is_45_degrees():
    x, y, _ = unwarp(3600, 1800, 0.0, 860, 286.5)
    assert x == pytest.approx(450.0, abs=1e-9)
    x, y, _ = unwarp(3600, 1800, 0.0, 0, 286.5)
    assert x == pytest.approx(3600 - 450.0, abs=1e-9)
    assert y == pytest.approx(900.0)


def test_unwarp_corner_matches_trigonometry():
    W, H = 4096, 2048
    x, y, _ = unwarp(W, H, 30.0, 860, 0)
    f = 430.0
    yaw = 30.0 + math.degrees(math.atan2(430, f))
    pitch = math.degrees(math.atan2(286.5, math.hypot(430, f)))
    assert x == pytest.approx(yaw / 360 * W, abs=1e-9)
    assert y == pytest.approx((90 - pitch) / 180 * H, abs=1e-9)


def test_unwarp_mirror_symmetry_and_injectivity():
    u = np.linspace(0, 860, 87)
    v = np.linspace(0, 573, 58)
    U, V = np.meshgrid(u, v)
    x, y, _ = unwarp(3600, 1800, 180.0, U.ravel(), V.ravel())
    xm, ym, _ = unwarp(3600, 1800, 180.0, 860 - U.ravel(), V.ravel())
    np.testing.assert_allclose(x - 1800, 1800 - xm, atol=1e-9)
    np.testing.assert_allclose(y, ym, atol=1e-9)
    assert len({(round(a, 6), round(b, 6)) for a, b in zip(x, y)}) == U.size


def test_unwarp_errors():
    with pytest.raises(ValueError):
        unwarp(0, 100, 0, 1, 1)
    with pytest.raises(ValueError):
        unwarp(100, 50, 0, 900, 1)


def test_points_csv_round_trip(tmp_path):
    pts = np.array([[37.123456789, -122.987654321], [0.0, 0.0]])
    write_points(tmp_path / "p.csv", pts)
    text = (tmp_path / "p.csv").read_text()
    assert text.splitlines()[1] == "37.1234568,-122.9876543"
    np.testing.assert_allclose(read_points(tmp_path / "p.csv"), pts, atol=5e-8)
