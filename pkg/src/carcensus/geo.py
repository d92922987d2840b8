"""Image-acquisition planning: GPS grids, road filtering, camera headings, unwarping.

Points are handled as ``(N, 2)`` float arrays of ``[lat, lon]`` degrees.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from carcensus import constants as C
from carcensus._io import DataError, read_csv, write_csv

R_EARTH = C.EARTH_RADIUS_M


@dataclass(frozen=True)
class GpsPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180)")


@dataclass(frozen=True)
class CameraPlan:
    point: GpsPoint
    headings: tuple
    image_width: int = C.IMAGE_WIDTH
    image_height: int = C.IMAGE_HEIGHT
    hfov: float = C.HFOV_DEG

    def __post_init__(self):
        mod = {h % 360.0 for h in self.headings}
        if len(self.headings) != 6 or len(mod) != 6:
            raise ValueError("a camera plan needs 6 headings distinct modulo 360")

    @property
    def overlap_deg(self):
        """Angular overlap between neighbouring views."""
        h = sorted(self.headings)
        step = min(b - a for a, b in zip(h, h[1:] + [h[0] + 360.0]))
        return self.hfov - step


def wrap_lon(lon):
    return (np.asarray(lon, dtype=float) + 180.0) % 360.0 - 180.0


def haversine_m(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dlat = p2 - p1
    dlon = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dlat / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlon / 2) ** 2
    return 2 * R_EARTH * np.arcsin(np.sqrt(a))


def generate_grid(center, side_m=C.GRID_SIDE_M, spacing_m=C.GRID_SPACING_M):
    """Square grid of points around ``center`` on a locally flat earth.

    Rows run south to north and points within a row west to east; there are
    ``(side_m / spacing_m + 1) ** 2`` points.
    """
    if not (side_m > 0 and spacing_m > 0):
        raise ValueError("side and spacing must be positive")
    ratio = side_m / spacing_m
    steps = round(ratio)
    if abs(ratio - steps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"side {side_m} m is not a multiple of spacing {spacing_m} m")
    if abs(center.lat) > 89.0:
        raise ValueError("grid center within 1 degree of a pole")
    offsets = (np.arange(steps + 1) - steps / 2.0) * spacing_m
    dlat = np.degrees(offsets / R_EARTH)
    dlon = np.degrees(offsets / (R_EARTH * math.cos(math.radians(center.lat))))
    lat = np.repeat(center.lat + dlat, steps + 1)
    lon = np.tile(center.lon + dlon, steps + 1)
    return np.column_stack([lat, wrap_lon(lon)])


class ConstantRoadOracle:
    """Reports the same road distance for every point."""

    def __init__(self, distance_m):
        self.distance_m = float(distance_m)

    def __call__(self, lat, lon):
        return self.distance_m

    def distances(self, points):
        return np.full(len(points), self.distance_m)


class PolylineRoadOracle:
    """Distance to the nearest of a set of straight road segments.

    Uses a local equirectangular projection around each query point, which
    is accurate to well under a meter at street scale.
    """

    def __init__(self, segments):
        seg = np.asarray(segments, dtype=float).reshape(-1, 4)
        if len(seg) == 0:
            raise ValueError("no road segments")
        self.segments = seg

    @classmethod
    def from_csv(cls, path):
        segs = []
        for lineno, row in read_csv(path, ("lat1", "lon1", "lat2", "lon2")):
            try:
                segs.append([float(row[k]) for k in ("lat1", "lon1", "lat2", "lon2")])
            except ValueError as exc:
                raise DataError(str(exc), path, lineno) from None
        return cls(segs)

    def __call__(self, lat, lon):
        return float(self.distances(np.array([[lat, lon]]))[0])

    def distances(self, points, chunk=4096):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.empty(len(pts))
        s = self.segments
        for start in range(0, len(pts), chunk):
            p = pts[start:start + chunk]
            lat0 = np.radians(p[:, :1])
            kx = R_EARTH * np.cos(lat0) * math.pi / 180.0
            ky = R_EARTH * math.pi / 180.0
            ax = (s[None, :, 1] - p[:, 1:2]) * kx
            ay = (s[None, :, 0] - p[:, 0:1]) * ky
            bx = (s[None, :, 3] - p[:, 1:2]) * kx
            by = (s[None, :, 2] - p[:, 0:1]) * ky
            dx, dy = bx - ax, by - ay
            L2 = dx * dx + dy * dy
            with np.errstate(invalid="ignore", divide="ignore"):
                t = np.where(L2 > 0, -(ax * dx + ay * dy) / L2, 0.0)
            t = np.clip(t, 0.0, 1.0)
            cx, cy = ax + t * dx, ay + t * dy
            out[start:start + chunk] = np.sqrt(cx * cx + cy * cy).min(axis=1)
        return out


@dataclass(frozen=True)
class RoadFilterResult:
    kept: np.ndarray
    errors: list  # (index, lat, lon, message)


def filter_near_road(points, road_oracle, max_dist=C.MAX_ROAD_DIST_M, max_workers=8):
    """Keep points whose road distance is at most ``max_dist``, in input order.

    ``road_oracle(lat, lon)`` returns meters; oracles exposing a vectorized
    ``distances(points)`` are used in one call. Points on which the oracle
    raises or returns a non-finite value go to ``errors``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    errors = []
    if hasattr(road_oracle, "distances"):
        dist = np.asarray(road_oracle.distances(pts), dtype=float)
    else:
        def query(p):
            try:
                return float(road_oracle(p[0], p[1])), None
            except Exception as exc:  # oracle failures are reported per point
                return math.nan, f"{type(exc).__name__}: {exc}"

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(query, pts.tolist()))
        dist = np.array([d for d, _ in results])
        for i, (_, msg) in enumerate(results):
            if msg is not None:
                errors.append((i, pts[i, 0], pts[i, 1], msg))
    bad = ~np.isfinite(dist)
    flagged = {e[0] for e in errors}
    for i in np.flatnonzero(bad):
        if i not in flagged:
            errors.append((int(i), pts[i, 0], pts[i, 1], "oracle returned a non-finite distance"))
    errors.sort(key=lambda e: e[0])
    keep = ~bad & (np.where(bad, np.inf, dist) <= max_dist)
    return RoadFilterResult(pts[keep], errors)


def merge_points(points, extra, decimals=7):
    """Append ``extra`` points not already present at 7-decimal precision."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    extra = np.asarray(extra, dtype=float).reshape(-1, 2)
    seen = {tuple(p) for p in np.round(pts, decimals).tolist()}
    add = []
    for p, key in zip(extra, np.round(extra, decimals).tolist()):
        if tuple(key) not in seen:
            seen.add(tuple(key))
            add.append(p)
    return np.vstack([pts, np.array(add).reshape(-1, 2)])


def rotations(point):
    return CameraPlan(point, C.HEADINGS_DEG)


def unwarp(pano_width, pano_height, heading_deg, u, v, out_width=C.IMAGE_WIDTH,
           out_height=C.IMAGE_HEIGHT, hfov=C.HFOV_DEG):
    """Map output pixel ``(u, v)`` of a rectilinear view to panorama pixel ``(x, y)``.

    The view looks along ``heading_deg`` at zero pitch. Panorama column 0 is
    yaw 0 and row 0 is pitch +90. Returns ``(x, y, clamped)``; ``clamped`` is
    True when the ray falls outside the panorama's vertical range. Accepts
    arrays for ``u`` and ``v``.
    """
    if pano_width <= 0 or pano_height <= 0:
        raise ValueError("panorama dimensions must be positive")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > out_width) | (v < 0) | (v > out_height)):
        raise ValueError("pixel outside the output frame")
    f = (out_width / 2.0) / math.tan(math.radians(hfov) / 2.0)
    px = u - out_width / 2.0
    py = v - out_height / 2.0
    yaw = heading_deg + np.degrees(np.arctan2(px, f))
    pitch = np.degrees(np.arctan2(-py, np.hypot(px, f)))
    x = np.mod(yaw, 360.0) / 360.0 * pano_width
    y = (90.0 - pitch) / 180.0 * pano_height
    clamped = (y < 0) | (y > pano_height)
    y = np.clip(y, 0.0, pano_height)
    if x.ndim == 0:
        return float(x), float(y), bool(clamped)
    return x, y, clamped


def write_points(path, points):
    write_csv(path, ("lat", "lon"), [(f"{lat:.7f}", f"{lon:.7f}") for lat, lon in np.asarray(points).reshape(-1, 2)])


def read_points(path):
    rows = []
    for lineno, row in read_csv(path, ("lat", "lon")):
        try:
            rows.append((float(row["lat"]), float(row["lon"])))
        except ValueError as exc:
            raise DataError(str(exc), path, lineno) from None
    return np.array(rows, dtype=float).reshape(-1, 2)
