"""Policy alterations: rule predicates applied to posterior tensor draws.

Rules scale probabilities (not logits): shot rules map p to clip(factor*p)
into [0, 1], transition rules scale targeted destination entries and then
renormalize the row. Every posterior draw is transformed identically. A
factor of exactly 1.0 is a no-op, keeping identity alterations bit-exact.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from tmdp.errors import ConfigError
from tmdp.play_simulator.tensors import DrawTensorBundle, MdpTensors, TransformedTensorBundle
from tmdp.state_model.states import N_SLICES, CourtRegion, StateSpace

logger = logging.getLogger(__name__)

KIND_SHOT = "scale_shot_prob"
KIND_TRANSITION = "scale_transition_prob"
_PRESSURE_NAMES = {"open": False, "contested": True}


@dataclass(frozen=True)
class StatePredicate:
    players: tuple[str, ...] | None = None
    regions: tuple[str, ...] | None = None
    pressure: tuple[str, ...] | None = None

    def matches(self, state) -> bool:
        if self.players is not None and state.player_id not in self.players:
            return False
        if self.regions is not None and state.region.value not in self.regions:
            return False
        if self.pressure is not None:
            wanted = {_PRESSURE_NAMES[p] for p in self.pressure}
            if state.contested not in wanted:
                return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {
            "players": list(self.players) if self.players is not None else None,
            "regions": list(self.regions) if self.regions is not None else None,
            "pressure": list(self.pressure) if self.pressure is not None else None,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any] | None) -> "StatePredicate":
        if doc is None:
            return cls()
        for p in doc.get("pressure") or ():
            if p not in _PRESSURE_NAMES:
                raise ConfigError(f"unknown pressure label: {p}")
        for r in doc.get("regions") or ():
            CourtRegion(r)
        return cls(
            players=tuple(doc["players"]) if doc.get("players") is not None else None,
            regions=tuple(doc["regions"]) if doc.get("regions") is not None else None,
            pressure=tuple(doc["pressure"]) if doc.get("pressure") is not None else None,
        )


@dataclass(frozen=True)
class AlterationRule:
    kind: str
    factor: float
    target: StatePredicate = field(default_factory=StatePredicate)
    slices: tuple[int, ...] | None = None
    dest: StatePredicate | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_SHOT, KIND_TRANSITION):
            raise ConfigError(f"unknown rule kind: {self.kind}")
        if not self.factor > 0:
            raise ConfigError(f"factor must be positive: {self.factor}")
        if self.slices is not None:
            bad = [t for t in self.slices if not 1 <= t <= N_SLICES]
            if bad:
                raise ConfigError(f"slice indices outside 1..8: {bad}")

    def slice_mask(self) -> np.ndarray:
        mask = np.zeros(N_SLICES, dtype=bool)
        if self.slices is None:
            mask[:] = True
        else:
            for t in self.slices:
                mask[t - 1] = True
        return mask

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "players": list(self.target.players) if self.target.players is not None else None,
            "regions": list(self.target.regions) if self.target.regions is not None else None,
            "pressure": list(self.target.pressure) if self.target.pressure is not None else None,
            "slices": list(self.slices) if self.slices is not None else None,
            "kind": self.kind,
            "factor": self.factor,
        }
        if self.dest is not None:
            doc["dest"] = self.dest.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "AlterationRule":
        return cls(
            kind=doc.get("kind", KIND_SHOT),
            factor=float(doc.get("factor", 1.0)),
            target=StatePredicate.from_json(
                {k: doc.get(k) for k in ("players", "regions", "pressure")}
            ),
            slices=tuple(int(t) for t in doc["slices"]) if doc.get("slices") is not None else None,
            dest=StatePredicate.from_json(doc["dest"]) if doc.get("dest") is not None else None,
        )


@dataclass(frozen=True)
class PolicyAlteration:
    rules: tuple[AlterationRule, ...]

    def to_json(self) -> dict[str, Any]:
        return {"rules": [r.to_json() for r in self.rules]}

    def canonical_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "PolicyAlteration":
        if "rules" not in doc or not isinstance(doc["rules"], list):
            raise ConfigError("alteration document needs a 'rules' list")
        return cls(tuple(AlterationRule.from_json(r) for r in doc["rules"]))

    @classmethod
    def load(cls, path: str | Path) -> "PolicyAlteration":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.canonical_text(), encoding="utf-8")


def slices_for_remaining_above(seconds: float) -> tuple[int, ...]:
    """Slices containing any instant with more than `seconds` remaining.

    A threshold inside a slice includes that slice (its upper part
    qualifies), so "more than 10 seconds" yields slices 1-5. Pass explicit
    slice sets to rules when a different boundary convention is wanted.
    """
    out = []
    for idx in range(1, N_SLICES + 1):
        hi = 24.0 - 3.0 * (idx - 1)
        if hi > seconds:
            out.append(idx)
    return tuple(out)


@dataclass
class RuleApplication:
    rule_index: int
    targeted_states: int
    clipped_cells: int


@dataclass
class AlterationApplication:
    """Per-rule accounting of one alteration applied to a draw bundle."""

    rules: list[RuleApplication]

    @property
    def total_clipped(self) -> int:
        return sum(r.clipped_cells for r in self.rules)

    def to_json(self) -> dict[str, Any]:
        return {
            "rules": [
                {
                    "rule_index": r.rule_index,
                    "targeted_states": r.targeted_states,
                    "clipped_cells": r.clipped_cells,
                }
                for r in self.rules
            ],
            "total_clipped": self.total_clipped,
        }


def resolve_targets(
    alteration: PolicyAlteration, space: StateSpace
) -> list[tuple[np.ndarray, np.ndarray | None]]:
    """State (and destination) index sets per rule; empty targets are errors."""
    resolved = []
    for k, rule in enumerate(alteration.rules):
        idx = np.array(
            [i for i, s in enumerate(space.states) if rule.target.matches(s)], dtype=np.intp
        )
        if idx.size == 0:
            raise ConfigError(f"rule {k} matches no states")
        dest_idx = None
        if rule.kind == KIND_TRANSITION:
            dest_pred = rule.dest or StatePredicate()
            dest_idx = np.array(
                [i for i, s in enumerate(space.states) if dest_pred.matches(s)], dtype=np.intp
            )
            if dest_idx.size == 0:
                raise ConfigError(f"rule {k} destination predicate matches no states")
        resolved.append((idx, dest_idx))
    return resolved


def _apply_to_tensors(
    tensors: MdpTensors,
    alteration: PolicyAlteration,
    resolved: list[tuple[np.ndarray, np.ndarray | None]],
    stats: list[RuleApplication] | None,
) -> MdpTensors:
    out = tensors.copy()
    for k, rule in enumerate(alteration.rules):
        states, dests = resolved[k]
        if rule.factor == 1.0:
            continue
        smask = rule.slice_mask()
        if rule.kind == KIND_SHOT:
            block = out.policy_p[np.ix_(states, np.flatnonzero(smask))]
            scaled = rule.factor * block
            clipped = int((scaled > 1.0).sum())
            out.policy_p[np.ix_(states, np.flatnonzero(smask))] = np.clip(scaled, 0.0, 1.0)
            if stats is not None and clipped:
                stats[k].clipped_cells += clipped
        else:
            t_idx = np.flatnonzero(smask)
            rows = out.trans_p[np.ix_(t_idx, states)]
            rows[:, :, dests] *= rule.factor
            rows /= rows.sum(axis=2, keepdims=True)
            out.trans_p[np.ix_(t_idx, states)] = rows
    return out


def apply_alteration(
    bundle: DrawTensorBundle, alteration: PolicyAlteration
) -> tuple[TransformedTensorBundle, AlterationApplication]:
    """Transform every draw of a bundle identically.

    Shot-rule cells pushed above 1 are clipped and counted; transition rows
    are renormalized after scaling so they stay stochastic.
    """
    space = bundle.space
    resolved = resolve_targets(alteration, space)
    stats = [
        RuleApplication(rule_index=k, targeted_states=int(len(resolved[k][0])), clipped_cells=0)
        for k in range(len(alteration.rules))
    ]
    triples = [
        _apply_to_tensors(bundle.get(i), alteration, resolved, stats)
        for i in range(bundle.n_draws)
    ]
    application = AlterationApplication(rules=stats)
    if application.total_clipped:
        logger.warning(
            "alteration clipped %d shot-probability cells above 1.0",
            application.total_clipped,
        )
    return TransformedTensorBundle(space, triples), application
