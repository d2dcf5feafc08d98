"""Region classification and defensive-pressure rule."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tmdp.errors import RejectedInputError
from tmdp.state_model import CourtRegion, classify_pressure, classify_region
from tmdp.state_model.geometry import DEFAULT_GEOMETRY, PRESSURE_THRESHOLD_FT

G = DEFAULT_GEOMETRY
HX, HY = G.hoop_x, G.hoop_y


def at_hoop_distance(dist: float, angle: float = 0.0) -> tuple[float, float]:
    return HX + dist * math.cos(angle), HY + dist * math.sin(angle)


class TestRegions:
    def test_hoop_center_is_rim(self):
        assert classify_region(HX, HY) is CourtRegion.RIM

    def test_rim_boundary_six_feet(self):
        x, y = at_hoop_distance(5.9)
        assert classify_region(x, y) is CourtRegion.RIM
        x, y = at_hoop_distance(6.1)
        assert classify_region(x, y) is CourtRegion.PAINT

    def test_paint_within_key_outside_rim(self):
        # Far corner of the key, inside the key box, > 6 ft from the hoop.
        assert classify_region(18.5, HY + 7.5) is CourtRegion.PAINT

    def test_midrange_outside_key_inside_arc(self):
        assert classify_region(HX + 15.0, HY + 12.0) is CourtRegion.MID_RANGE

    def test_on_the_line_is_midrange(self):
        x, y = at_hoop_distance(G.arc_radius, angle=0.3)
        assert classify_region(x, y) is CourtRegion.MID_RANGE

    def test_corner_three(self):
        assert classify_region(4.0, 1.5) is CourtRegion.CORNER_3
        assert classify_region(4.0, 48.5) is CourtRegion.CORNER_3

    def test_arc_three_30ft_limit(self):
        x, y = at_hoop_distance(29.0, angle=0.25)
        assert classify_region(x, y) is CourtRegion.ARC_3
        x, y = at_hoop_distance(31.0, angle=0.25)
        assert classify_region(x, y) is CourtRegion.BACKCOURT

    def test_far_halfcourt_is_backcourt(self):
        assert classify_region(80.0, 25.0) is CourtRegion.BACKCOURT

    def test_out_of_bounds_rejected(self):
        with pytest.raises(RejectedInputError):
            classify_region(-0.5, 25.0)
        with pytest.raises(RejectedInputError):
            classify_region(10.0, 51.0)

    def test_partition_total_and_stable(self):
        """Every point gets exactly one region; tiny interior nudges never flip it."""
        rng = np.random.default_rng(20240211)
        xs = rng.uniform(0.0, G.court_length, size=100_000)
        ys = rng.uniform(0.0, G.court_width, size=100_000)
        counts = {r: 0 for r in CourtRegion}
        for x, y in zip(xs[:100_000], ys[:100_000]):
            counts[classify_region(float(x), float(y))] += 1
        assert sum(counts.values()) == 100_000
        assert all(v > 0 for v in counts.values())

        eps = 1e-10
        for x, y in zip(xs[:2000], ys[:2000]):
            x, y = float(x), float(y)
            base = classify_region(x, y)
            for dx, dy in ((eps, 0), (-eps, 0), (0, eps), (0, -eps)):
                px = min(max(x + dx, 0.0), G.court_length)
                py = min(max(y + dy, 0.0), G.court_width)
                if _near_any_boundary(x, y):
                    continue
                assert classify_region(px, py) is base

    def test_precedence_rim_over_paint(self):
        # Points within 6 ft are rim even though they sit inside the key.
        assert classify_region(HX + 5.0, HY) is CourtRegion.RIM


def _near_any_boundary(x: float, y: float, tol: float = 1e-6) -> bool:
    d = math.hypot(x - HX, y - HY)
    near = (
        abs(d - G.rim_radius) < tol
        or abs(d - G.arc_radius) < tol
        or abs(d - G.arc3_outer) < tol
        or abs(x - G.key_length) < tol
        or abs(abs(y - HY) - G.key_half_width) < tol
        or abs(x - G.corner_break_x) < tol
        or abs(abs(y - HY) - G.corner_offset) < tol
        or x < tol
        or y < tol
        or G.court_length - x < tol
        or G.court_width - y < tol
    )
    return near


class TestPressure:
    @pytest.mark.parametrize(
        "region,dist,expected",
        [
            (CourtRegion.RIM, 2.9, True),
            (CourtRegion.RIM, 3.0, False),
            (CourtRegion.PAINT, 3.4, True),
            (CourtRegion.PAINT, 3.5, False),
            (CourtRegion.MID_RANGE, 3.9, True),
            (CourtRegion.CORNER_3, 4.9, True),
            (CourtRegion.ARC_3, 4.9, True),
            (CourtRegion.ARC_3, 5.0, False),
            (CourtRegion.BACKCOURT, 4.9, True),
        ],
    )
    def test_thresholds(self, region, dist, expected):
        assert classify_pressure(region, dist) is expected

    def test_negative_distance_rejected(self):
        with pytest.raises(RejectedInputError):
            classify_pressure(CourtRegion.RIM, -0.1)

    def test_threshold_table_complete(self):
        assert set(PRESSURE_THRESHOLD_FT) == set(CourtRegion)
