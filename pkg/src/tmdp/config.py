"""Human-readable model configuration document (YAML)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from tmdp.errors import ConfigError


@dataclass
class McmcConfig:
    chains: int = 2
    iterations: int = 1400
    burn_in: int = 400
    seed: int = 0
    target_accept: float = 0.3


@dataclass
class ModelConfig:
    """Hyperprior constants, geometry knobs, clustering sizes, MCMC defaults."""

    # Diffuse gamma hyperprior on every scale (standard deviation) parameter;
    # correlations are uniform on (rho_lo, rho_hi).
    sd_hyper_shape: float = 2.0
    sd_hyper_rate: float = 0.1
    rho_lo: float = -1.0
    rho_hi: float = 1.0

    # Shot-group clustering sizes (volume x propensity).
    cluster_volume_k: int = 3
    cluster_propensity_k: int = 6

    # Corner-3 break: straight corner segment length from the baseline (ft).
    # Not a published model constant; standard NBA floor value.
    corner_break_x: float = 14.0

    # Two-stage tensor fit: interlude corpus size ("six games worth of plays").
    two_stage: bool = True
    interlude_plays: int = 1000

    # Optional restriction of the modeled region set (names from CourtRegion).
    regions: list[str] | None = None

    # Optional shot-group assignment CSV (player_id,volume_cluster,propensity_cluster,h).
    shot_groups_csv: str | None = None

    mcmc: McmcConfig = field(default_factory=McmcConfig)
    mcmc_overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def mcmc_for(self, model: str) -> McmcConfig:
        base = asdict(self.mcmc)
        base.update(self.mcmc_overrides.get(model, {}))
        return McmcConfig(**base)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ModelConfig":
        doc = dict(doc)
        mcmc = doc.pop("mcmc", None)
        cfg = cls(**{k: v for k, v in doc.items() if k in cls.__dataclass_fields__ and k != "mcmc"})
        if mcmc:
            cfg.mcmc = McmcConfig(**mcmc)
        return cfg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelConfig":
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} did not parse to a mapping")
        return cls.from_dict(doc)
