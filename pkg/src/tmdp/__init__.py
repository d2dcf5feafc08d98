"""tmdp: estimation and simulation engine for shot-clock-dependent basketball plays.

Subpackages:
    state_model       -- state/action space, court geometry, event ingestion
    chain_algebra     -- absorbing-chain math and count-preserving averaging
    hier_models       -- hierarchical Bayesian policy/transition/reward models
    inference_engine  -- adaptive MCMC, diagnostics, two-stage tensor fitting
    play_simulator    -- play/season simulation and calibration reports
    policy_lab        -- policy alterations and paired counterfactual comparison
    service_cli       -- synthetic data, run store, CLI, and HTTP service
"""

__version__ = "0.1.0"
