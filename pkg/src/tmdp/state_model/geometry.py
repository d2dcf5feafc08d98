"""Court geometry: region classification and defensive-pressure rule.

Coordinates are in feet in a half-court frame: x runs along the court length
from the offensive baseline (0) toward the far baseline (94), y runs across
the width (0..50). The hoop center sits at (5.25, 25). The corner-3 break
distance from the baseline is not a published model constant; we use the
standard NBA value of 14 ft, configurable below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from tmdp.errors import RejectedInputError
from tmdp.state_model.states import CourtRegion


@dataclass(frozen=True)
class CourtGeometry:
    court_length: float = 94.0
    court_width: float = 50.0
    hoop_x: float = 5.25
    hoop_y: float = 25.0
    rim_radius: float = 6.0
    key_length: float = 19.0   # baseline to free-throw line
    key_half_width: float = 8.0
    arc_radius: float = 23.75
    corner_offset: float = 22.0   # lateral distance from hoop center to corner-3 line
    corner_break_x: float = 14.0  # straight corner-3 segment ends here (standard NBA)
    arc3_outer: float = 30.0      # beyond this hoop distance everything is backcourt

    def hoop_distance(self, x: float, y: float) -> float:
        return math.hypot(x - self.hoop_x, y - self.hoop_y)


DEFAULT_GEOMETRY = CourtGeometry()

# Nearest-defender distance below which a state is contested, by region.
# Backcourt has no published threshold; it shares the 3-point-region value.
PRESSURE_THRESHOLD_FT: dict[CourtRegion, float] = {
    CourtRegion.RIM: 3.0,
    CourtRegion.PAINT: 3.5,
    CourtRegion.MID_RANGE: 4.0,
    CourtRegion.CORNER_3: 5.0,
    CourtRegion.ARC_3: 5.0,
    CourtRegion.BACKCOURT: 5.0,
}


def classify_region(
    x: float, y: float, geometry: CourtGeometry = DEFAULT_GEOMETRY
) -> CourtRegion:
    """Classify a court point into exactly one region.

    Regions are tested in precedence order rim, paint, mid-range, corner 3,
    arc 3, backcourt. "Within" boundaries (rim radius, key, 3-point line,
    30 ft arc limit) are inclusive, so a point exactly on the 3-point line
    classifies as mid-range.
    """
    if not (0.0 <= x <= geometry.court_length and 0.0 <= y <= geometry.court_width):
        raise RejectedInputError(f"coordinates outside court bounds: ({x}, {y})")
    dist = geometry.hoop_distance(x, y)
    if dist <= geometry.rim_radius:
        return CourtRegion.RIM
    in_key = x <= geometry.key_length and abs(y - geometry.hoop_y) <= geometry.key_half_width
    if in_key:
        return CourtRegion.PAINT
    in_corner_zone = x <= geometry.corner_break_x
    if in_corner_zone:
        inside_line = abs(y - geometry.hoop_y) <= geometry.corner_offset
    else:
        inside_line = dist <= geometry.arc_radius
    if inside_line:
        return CourtRegion.MID_RANGE
    if in_corner_zone:
        return CourtRegion.CORNER_3
    if dist <= geometry.arc3_outer:
        return CourtRegion.ARC_3
    return CourtRegion.BACKCOURT


def classify_pressure(region: CourtRegion, defender_distance: float) -> bool:
    """True (contested) iff the nearest defender is strictly inside the threshold."""
    if defender_distance < 0:
        raise RejectedInputError(f"negative defender distance: {defender_distance}")
    return defender_distance < PRESSURE_THRESHOLD_FT[region]
