"""MCMC machinery: adaptive sampler, diagnostics, draws, two-stage fitting."""

from tmdp.inference_engine.diagnostics import DiagnosticsReport, diagnostics
from tmdp.inference_engine.draws import PosteriorDrawSet
from tmdp.inference_engine.sampler import GenericTarget, ParamLayout, sample

__all__ = [
    "DiagnosticsReport",
    "GenericTarget",
    "ParamLayout",
    "PolicyLadder",
    "PosteriorDrawSet",
    "TwoStageResult",
    "diagnostics",
    "fit_policy",
    "fit_reward",
    "fit_tpt_two_stage",
    "policy_ladder",
    "sample",
]

_LAZY = {
    "fit_policy": "tmdp.inference_engine.fits",
    "fit_reward": "tmdp.inference_engine.fits",
    "PolicyLadder": "tmdp.inference_engine.ladder",
    "policy_ladder": "tmdp.inference_engine.ladder",
    "TwoStageResult": "tmdp.inference_engine.two_stage",
    "fit_tpt_two_stage": "tmdp.inference_engine.two_stage",
}


def __getattr__(name: str):
    # The fit layers pull in the simulator (for the two-stage interlude),
    # which itself persists draw sets; importing them lazily keeps the
    # package import graph acyclic.
    if name in _LAZY:
        import importlib

        return getattr(importlib.import_module(_LAZY[name]), name)
    raise AttributeError(f"module 'tmdp.inference_engine' has no attribute {name!r}")
