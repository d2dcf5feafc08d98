"""Play and season simulation with full count bookkeeping and calibration."""

from tmdp.play_simulator.calibration import CalibrationReport, calibration_report
from tmdp.play_simulator.counts import CountTensor
from tmdp.play_simulator.lapses import LapseDistribution
from tmdp.play_simulator.simulate import (
    PlayStart,
    iter_seasons,
    simulate_play,
    simulate_season,
)
from tmdp.play_simulator.tensors import (
    DrawTensorBundle,
    MdpTensors,
    PosteriorTensorBundle,
    TransformedTensorBundle,
    TruthTensorBundle,
)

__all__ = [
    "CalibrationReport",
    "CountTensor",
    "DrawTensorBundle",
    "LapseDistribution",
    "MdpTensors",
    "PlayStart",
    "PosteriorTensorBundle",
    "TransformedTensorBundle",
    "TruthTensorBundle",
    "calibration_report",
    "iter_seasons",
    "simulate_play",
    "simulate_season",
]
