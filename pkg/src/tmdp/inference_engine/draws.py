"""Posterior draw sets and their lossless persistence pair."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from tmdp import binio
from tmdp.errors import RejectedInputError


@dataclass
class PosteriorDrawSet:
    """Ordered MCMC draws of one model's full parameter vector.

    draws has shape (chains, kept_iterations, dim); merging across chains is
    deterministic by (chain id, iteration). Replayable from (seed, config).
    """

    model_tag: str
    draws: np.ndarray
    block_names: tuple[str, ...]
    block_sizes: tuple[int, ...]
    burn_in: int
    seed: int
    config: dict[str, Any]
    acceptance: np.ndarray
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.draws.ndim != 3:
            raise RejectedInputError("draws must be (chains, iterations, dim)")
        if sum(self.block_sizes) != self.draws.shape[2]:
            raise RejectedInputError("block sizes do not tile the parameter vector")

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_kept(self) -> int:
        return self.draws.shape[1]

    @property
    def dim(self) -> int:
        return self.draws.shape[2]

    def stacked(self) -> np.ndarray:
        """All draws merged by (chain id, iteration)."""
        return self.draws.reshape(-1, self.dim)

    def block_slice(self, name: str) -> slice:
        offset = 0
        for bname, size in zip(self.block_names, self.block_sizes):
            if bname == name:
                return slice(offset, offset + size)
            offset += size
        raise RejectedInputError(f"unknown block: {name}")

    def param_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for bname, size in zip(self.block_names, self.block_sizes):
            if size == 1:
                names.append(bname)
            else:
                names.extend(f"{bname}[{i}]" for i in range(size))
        return tuple(names)

    def posterior_mean(self) -> np.ndarray:
        return self.stacked().mean(axis=0)

    # -- persistence: draws_<model>.bin + manifest_<model>.json --------------

    def manifest(self) -> dict[str, Any]:
        return {
            "model_tag": self.model_tag,
            "seed": self.seed,
            "burn_in": self.burn_in,
            "config": self.config,
            "chains": self.n_chains,
            "kept_iterations": self.n_kept,
            "dim": self.dim,
            "blocks": [
                {"name": n, "size": s} for n, s in zip(self.block_names, self.block_sizes)
            ],
            "extra": self.extra,
        }

    def save(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        bin_path = out / f"draws_{self.model_tag}.bin"
        manifest_path = out / f"manifest_{self.model_tag}.json"
        binio.write_blob(
            bin_path,
            meta=self.manifest(),
            arrays={"draws": self.draws, "acceptance": self.acceptance},
        )
        binio.dump_json(self.manifest(), manifest_path)
        return bin_path, manifest_path

    @classmethod
    def load(cls, out_dir: str | Path, model_tag: str) -> "PosteriorDrawSet":
        bin_path = Path(out_dir) / f"draws_{model_tag}.bin"
        meta, arrays = binio.read_blob(bin_path)
        return cls(
            model_tag=meta["model_tag"],
            draws=arrays["draws"],
            block_names=tuple(b["name"] for b in meta["blocks"]),
            block_sizes=tuple(b["size"] for b in meta["blocks"]),
            burn_in=meta["burn_in"],
            seed=meta["seed"],
            config=meta["config"],
            acceptance=arrays["acceptance"],
            extra=meta.get("extra", {}),
        )
