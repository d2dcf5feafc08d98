"""HTTP service: pydantic request/response models over the pipeline layer.

Long-running operations (fit, simulate, compare, generate, ingest) are
enqueued on an in-process worker pool and polled through /runs/{id}. All
artifacts are written through the same pipeline functions the CLI uses, so
a run's files are byte-identical to the equivalent CLI invocation.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Literal

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from tmdp import binio
from tmdp.errors import ConfigError, StorageError, TmdpError
from tmdp.policy_lab.alterations import PolicyAlteration, resolve_targets
from tmdp.service_cli import pipeline
from tmdp.service_cli.store import RunRegistry
from tmdp.state_model.states import StateSpace

API_VERSION = "1"


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = API_VERSION


class StateSpaceResponse(BaseModel):
    players: list[dict[str, Any]]
    regions: list[str]
    pressures: list[str] = ["open", "contested"]
    slices: list[int] = Field(default_factory=lambda: list(range(1, 9)))
    n_states: int


class GenerateRequest(BaseModel):
    out: str
    preset: str = "desk"
    n_plays: int | None = None
    seed: int | None = None
    emit_truth_draws: int = 0


class IngestRequest(BaseModel):
    events: str
    out: str


class FitRequest(BaseModel):
    model: Literal["policy", "transition", "reward"]
    events: str  # ingested directory
    out: str
    config: str | None = None
    seed: int | None = None


class SimulateRequest(BaseModel):
    draws: str
    starts: str
    lapses: str
    out: str
    replicates: int = 300
    seed: int
    freeze_draw: int | None = None


class AlterationRule(BaseModel):
    players: list[str] | None = None
    regions: list[str] | None = None
    pressure: list[str] | None = None
    slices: list[int] | None = None
    kind: Literal["scale_shot_prob", "scale_transition_prob"] = "scale_shot_prob"
    factor: float = 1.0
    dest: dict[str, Any] | None = None


class AlterationRequest(BaseModel):
    rules: list[AlterationRule]


class AlterationResponse(BaseModel):
    alteration_id: str
    path: str
    targeted_states: list[int] | None = None


class CompareRequest(BaseModel):
    draws: str
    starts: str
    lapses: str
    replicates: int = 300
    seed: int
    alteration_id: str | None = None
    alteration_path: str | None = None
    report: str | None = None


class RunResponse(BaseModel):
    run_id: str
    kind: str
    status: str
    outputs: list[str] = []
    error: str | None = None


class RunAccepted(BaseModel):
    run_id: str
    status: str


def _error(code: str, message: str, status: int = 400) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(store_root: str | Path, workers: int = 2) -> FastAPI:
    registry = RunRegistry(store_root)
    root = Path(store_root)
    executor = ThreadPoolExecutor(max_workers=max(workers, 1))

    app = FastAPI(
        title="tmdp service",
        version=API_VERSION,
        description="Estimation, simulation, and counterfactual comparison of "
                    "shot-clock-dependent basketball play processes.",
    )

    @app.exception_handler(HTTPException)
    async def http_error_handler(request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {
            "code": "error", "message": str(exc.detail)
        }
        return JSONResponse(status_code=exc.status_code, content={"error": detail})

    def resolve(path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else root / p

    def enqueue(kind: str, config: dict[str, Any], seed: int | None,
                job: Callable[[], dict[str, Any]], outputs: list[str]) -> RunAccepted:
        manifest = registry.create(kind, config, seed)

        def work() -> None:
            registry.transition(manifest.run_id, "running")
            try:
                job()
                registry.transition(manifest.run_id, "done", outputs=outputs)
            except Exception as err:  # noqa: BLE001 - job boundary
                registry.transition(manifest.run_id, "failed", error=str(err))

        executor.submit(work)
        return RunAccepted(run_id=manifest.run_id, status="pending")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse()

    @app.get("/state-space", response_model=StateSpaceResponse)
    def state_space() -> StateSpaceResponse:
        candidates = sorted(root.glob("**/state_space.json"))
        if not candidates:
            raise _error("state_space_not_found", "no state_space.json in the store", 404)
        doc = json.loads(candidates[0].read_text(encoding="utf-8"))
        space = StateSpace.from_json(doc)
        return StateSpaceResponse(
            players=doc["players"], regions=doc["regions"], n_states=space.n_states
        )

    @app.post("/ingest", response_model=RunAccepted, status_code=202)
    def ingest(req: IngestRequest) -> RunAccepted:
        events = resolve(req.events)
        if not events.exists():
            raise _error("events_not_found", f"no event log at {req.events}", 404)
        out = resolve(req.out)
        return enqueue(
            "ingest", req.model_dump(), None,
            lambda: pipeline.run_ingest(events, out),
            [str(out)],
        )

    @app.post("/fit", response_model=RunAccepted, status_code=202)
    def fit(req: FitRequest) -> RunAccepted:
        ingest_dir = resolve(req.events)
        if not ingest_dir.exists():
            raise _error("ingest_not_found", f"no ingested corpus at {req.events}", 404)
        out = resolve(req.out)
        cfg = resolve(req.config) if req.config else None
        return enqueue(
            "fit", req.model_dump(), req.seed,
            lambda: pipeline.run_fit(req.model, ingest_dir, out, cfg, req.seed),
            [str(out)],
        )

    @app.post("/generate", response_model=RunAccepted, status_code=202)
    def generate(req: GenerateRequest) -> RunAccepted:
        out = resolve(req.out)
        return enqueue(
            "generate", req.model_dump(), req.seed,
            lambda: pipeline.run_generate(
                out, preset=req.preset, n_plays=req.n_plays, seed=req.seed,
                emit_truth_draws=req.emit_truth_draws,
            ),
            [str(out)],
        )

    @app.post("/simulate", response_model=RunAccepted, status_code=202)
    def simulate(req: SimulateRequest) -> RunAccepted:
        draws = resolve(req.draws)
        if not (draws / "draws_policy.bin").exists():
            raise _error("draws_not_found", f"no draw sets under {req.draws}", 404)
        starts = resolve(req.starts)
        lapses = resolve(req.lapses)
        for p, code in ((starts, "starts_not_found"), (lapses, "lapses_not_found")):
            if not p.exists():
                raise _error(code, f"missing input: {p}", 404)
        out = resolve(req.out)
        return enqueue(
            "simulate", req.model_dump(), req.seed,
            lambda: pipeline.run_simulate(
                draws, starts, lapses, out, req.replicates, req.seed, req.freeze_draw
            ),
            [str(out)],
        )

    @app.post("/alterations", response_model=AlterationResponse)
    def alterations(req: AlterationRequest) -> AlterationResponse:
        doc = {"rules": [r.model_dump() for r in req.rules]}
        try:
            alteration = PolicyAlteration.from_json(doc)
        except (ConfigError, ValueError) as err:
            raise _error("invalid_alteration", str(err), 422) from err
        targeted = None
        candidates = sorted(root.glob("**/state_space.json"))
        if candidates:
            space = StateSpace.from_json(
                json.loads(candidates[0].read_text(encoding="utf-8"))
            )
            try:
                targeted = [len(t[0]) for t in resolve_targets(alteration, space)]
            except ConfigError as err:
                raise _error("empty_target", str(err), 422) from err
        text = alteration.canonical_text()
        alteration_id = hashlib.sha256(text.encode()).hexdigest()[:12]
        alt_dir = root / "alterations"
        alt_dir.mkdir(parents=True, exist_ok=True)
        path = alt_dir / f"{alteration_id}.json"
        path.write_text(text, encoding="utf-8")
        return AlterationResponse(
            alteration_id=alteration_id,
            path=str(path.relative_to(root)),
            targeted_states=targeted,
        )

    @app.post("/compare", response_model=RunAccepted, status_code=202)
    def compare(req: CompareRequest) -> RunAccepted:
        draws = resolve(req.draws)
        if not (draws / "draws_policy.bin").exists():
            raise _error("draws_not_found", f"no draw sets under {req.draws}", 404)
        if req.alteration_id:
            alt_path = root / "alterations" / f"{req.alteration_id}.json"
        elif req.alteration_path:
            alt_path = resolve(req.alteration_path)
        else:
            raise _error("missing_alteration", "need alteration_id or alteration_path", 422)
        if not alt_path.exists():
            raise _error("alteration_not_found", f"no alteration at {alt_path}", 404)
        starts = resolve(req.starts)
        lapses = resolve(req.lapses)
        for p, code in ((starts, "starts_not_found"), (lapses, "lapses_not_found")):
            if not p.exists():
                raise _error(code, f"missing input: {p}", 404)
        manifest = registry.create("compare", req.model_dump(), req.seed)
        report_path = (
            resolve(req.report) if req.report
            else registry.run_dir(manifest.run_id) / "report.json"
        )

        def work() -> None:
            registry.transition(manifest.run_id, "running")
            try:
                pipeline.run_compare(
                    draws, alt_path, starts, lapses, report_path, req.replicates, req.seed
                )
                registry.transition(manifest.run_id, "done", outputs=[str(report_path)])
            except Exception as err:  # noqa: BLE001 - job boundary
                registry.transition(manifest.run_id, "failed", error=str(err))

        executor.submit(work)
        return RunAccepted(run_id=manifest.run_id, status="pending")

    @app.get("/runs/{run_id}", response_model=RunResponse)
    def get_run(run_id: str) -> RunResponse:
        manifest = registry.get(run_id)
        if manifest is None:
            raise _error("run_not_found", f"unknown run: {run_id}", 404)
        return RunResponse(
            run_id=manifest.run_id,
            kind=manifest.kind,
            status=manifest.status,
            outputs=manifest.outputs,
            error=manifest.error,
        )

    @app.get("/reports/{run_id}")
    def get_report(run_id: str) -> Any:
        manifest = registry.get(run_id)
        if manifest is None:
            raise _error("run_not_found", f"unknown run: {run_id}", 404)
        if manifest.kind != "compare":
            raise _error("not_a_compare_run", f"run {run_id} is a {manifest.kind} run", 400)
        if manifest.status != "done":
            raise _error("report_not_ready", f"run {run_id} is {manifest.status}", 409)
        return json.loads(Path(manifest.outputs[0]).read_text(encoding="utf-8"))

    @app.get("/draws")
    def list_draws() -> Any:
        found = []
        for manifest_path in sorted(root.glob("**/manifest_*.json")):
            doc = json.loads(manifest_path.read_text(encoding="utf-8"))
            found.append(
                {
                    "path": str(manifest_path.parent.relative_to(root)),
                    "model_tag": doc.get("model_tag"),
                    "chains": doc.get("chains"),
                    "kept_iterations": doc.get("kept_iterations"),
                    "dim": doc.get("dim"),
                    "seed": doc.get("seed"),
                }
            )
        return {"draw_sets": found}

    return app


def dump_openapi(path: str | Path) -> None:
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(tmp, workers=1)
        binio.dump_json(app.openapi(), path)


if __name__ == "__main__":
    import sys

    dump_openapi(sys.argv[1] if len(sys.argv) > 1 else "api/openapi.json")
