"""Run registry: directory-backed manifests with a strict status lifecycle."""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from tmdp import binio
from tmdp.errors import StorageError

STATUSES = ("pending", "running", "done", "failed")
_TRANSITIONS = {
    "pending": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class RunManifest:
    run_id: str
    kind: str                   # fit | simulate | compare | generate | ingest | cluster
    config: dict[str, Any]
    seed: int | None
    status: str = "pending"
    input_digests: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    error: str | None = None
    created_at: float = 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "status": self.status,
            "input_digests": self.input_digests,
            "outputs": self.outputs,
            "error": self.error,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "RunManifest":
        return cls(**doc)


class RunRegistry:
    """Single-writer registry of runs under <root>/runs/<id>/manifest.json.

    Manifests are re-read from storage on construction, so the registry
    survives process restarts. Completed runs are immutable.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        try:
            self.runs_dir.mkdir(parents=True, exist_ok=True)
            probe = self.runs_dir / ".writable"
            probe.write_text("ok")
            probe.unlink()
        except OSError as err:
            raise StorageError(f"run store not writable at {self.root}: {err}") from err
        self._lock = threading.Lock()
        self._runs: dict[str, RunManifest] = {}
        for manifest_path in sorted(self.runs_dir.glob("*/manifest.json")):
            try:
                doc = json.loads(manifest_path.read_text(encoding="utf-8"))
                self._runs[doc["run_id"]] = RunManifest.from_json(doc)
            except (OSError, KeyError, ValueError):
                continue

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def create(self, kind: str, config: dict[str, Any], seed: int | None = None) -> RunManifest:
        run_id = uuid.uuid4().hex[:12]
        manifest = RunManifest(
            run_id=run_id, kind=kind, config=config, seed=seed, created_at=time.time()
        )
        with self._lock:
            self._runs[run_id] = manifest
            self.run_dir(run_id).mkdir(parents=True, exist_ok=True)
            self._write(manifest)
        return manifest

    def _write(self, manifest: RunManifest) -> None:
        path = self.run_dir(manifest.run_id) / "manifest.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(binio.canonical_json(manifest.to_json()), encoding="utf-8")
        tmp.replace(path)

    def transition(self, run_id: str, status: str, outputs: list[str] | None = None,
                   error: str | None = None) -> RunManifest:
        if status not in STATUSES:
            raise StorageError(f"unknown status: {status}")
        with self._lock:
            manifest = self._runs.get(run_id)
            if manifest is None:
                raise StorageError(f"unknown run: {run_id}")
            if status not in _TRANSITIONS[manifest.status]:
                raise StorageError(
                    f"illegal transition {manifest.status} -> {status} for {run_id}"
                )
            manifest.status = status
            if outputs:
                manifest.outputs = list(outputs)
            if error:
                manifest.error = error
            self._write(manifest)
            return manifest

    def get(self, run_id: str) -> RunManifest | None:
        with self._lock:
            return self._runs.get(run_id)

    def list(self) -> list[RunManifest]:
        with self._lock:
            return sorted(self._runs.values(), key=lambda m: m.created_at)
