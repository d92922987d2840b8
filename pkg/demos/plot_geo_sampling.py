"""
Planning where to take street-level images
==========================================

Lay a square grid over a city, keep points near a (toy) road network, and
map a few output pixels of one camera view back into the panorama.
"""

import numpy as np

from carcensus.geo import GpsPoint, PolylineRoadOracle, filter_near_road, generate_grid, rotations, unwarp

center = GpsPoint(43.0731, -89.4012)
grid = generate_grid(center, side_m=2000, spacing_m=25)
print(f"{len(grid)} grid points")

# a plus-shaped pair of streets through the center
roads = PolylineRoadOracle([
    [center.lat, center.lon - 0.02, center.lat, center.lon + 0.02],
    [center.lat - 0.02, center.lon, center.lat + 0.02, center.lon],
])
for d in (5.0, 12.5, 30.0):
    print(f"  within {d:4.1f} m of a road: {len(filter_near_road(grid, roads, d).kept)}")

plan = rotations(center)
print(f"headings {plan.headings}, neighbouring views overlap by {plan.overlap_deg:.0f} deg")

W, H = 13312, 6656
for u, v in ((430, 286.5), (0, 286.5), (860, 286.5), (860, 0), (430, 573)):
    x, y, _ = unwarp(W, H, 60.0, u, v)
    print(f"  view pixel ({u:5.1f}, {v:5.1f}) -> panorama ({x:8.1f}, {y:7.1f}), "
          f"yaw {x / W * 360:6.2f}, pitch {90 - y / H * 180:6.2f}")
