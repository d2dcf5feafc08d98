"""State/action space, court geometry, and ball-event ingestion."""

from tmdp.state_model.geometry import CourtGeometry, classify_pressure, classify_region
from tmdp.state_model.states import (
    ClockSlice,
    CourtRegion,
    Player,
    StateId,
    StateSpace,
    Terminal,
    clock_slice,
    shot_value,
    slice_bounds,
)
from tmdp.state_model.events import Action, BallEvent, EpisodeRecord, EventKind, Step
from tmdp.state_model.ingest import IngestResult, ingest_events, serialize_episodes

__all__ = [
    "Action",
    "BallEvent",
    "ClockSlice",
    "CourtGeometry",
    "CourtRegion",
    "EpisodeRecord",
    "EventKind",
    "IngestResult",
    "Player",
    "StateId",
    "StateSpace",
    "Step",
    "Terminal",
    "classify_pressure",
    "classify_region",
    "clock_slice",
    "ingest_events",
    "serialize_episodes",
    "shot_value",
    "slice_bounds",
]
