"""Run registry lifecycle and persistence."""

from __future__ import annotations

import pytest

from tmdp.errors import StorageError
from tmdp.service_cli.store import RunRegistry


class TestLifecycle:
    def test_create_and_transition(self, tmp_path):
        reg = RunRegistry(tmp_path)
        m = reg.create("simulate", {"seed": 3}, seed=3)
        assert m.status == "pending"
        reg.transition(m.run_id, "running")
        reg.transition(m.run_id, "done", outputs=["sims/"])
        assert reg.get(m.run_id).status == "done"
        assert reg.get(m.run_id).outputs == ["sims/"]

    def test_illegal_transitions_rejected(self, tmp_path):
        reg = RunRegistry(tmp_path)
        m = reg.create("fit", {})
        with pytest.raises(StorageError):
            reg.transition(m.run_id, "done")  # skipping running
        reg.transition(m.run_id, "running")
        reg.transition(m.run_id, "failed", error="boom")
        with pytest.raises(StorageError):
            reg.transition(m.run_id, "running")  # completed runs are immutable

    def test_unknown_run(self, tmp_path):
        reg = RunRegistry(tmp_path)
        with pytest.raises(StorageError):
            reg.transition("nope", "running")
        assert reg.get("nope") is None

    def test_registry_survives_restart(self, tmp_path):
        reg = RunRegistry(tmp_path)
        m1 = reg.create("generate", {"preset": "tiny"})
        reg.transition(m1.run_id, "running")
        reg.transition(m1.run_id, "done", outputs=["x"])
        m2 = reg.create("compare", {})
        # Fresh registry over the same root sees both manifests.
        reg2 = RunRegistry(tmp_path)
        assert reg2.get(m1.run_id).status == "done"
        assert reg2.get(m2.run_id).status == "pending"
        assert len(reg2.list()) == 2

    def test_unwritable_root_raises(self, tmp_path):
        # A path under a regular file can never become a directory.
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        with pytest.raises(StorageError):
            RunRegistry(blocker / "store")
