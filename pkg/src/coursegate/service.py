"""HTTP facade over registry, curriculum, workflow, and executor operations.

Persistence is the canonical archive itself: every mutation writes
data_dir/repository.json, and finished run records live under
data_dir/runs/<id>/record.json next to their artifacts. Restarting a service
on the same directory therefore reproduces every GET response.
"""

from __future__ import annotations

import json
import os
import socket
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import canonical
from .curriculum import (
    aggregate,
    build_graph,
    check_track,
    constraints_from_dict,
    plan_track,
    track_from_dict,
    track_to_dict,
)
from .errors import (
    BadRequestError,
    CourseGateError,
    DataDirUnwritableError,
    PortInUseError,
    UnknownRunError,
)
from .executor import ExecutorService, Policy, resource_from_dict
from .meta import module_from_dict, module_to_dict, ScaleLevel
from .registry import Registry, SearchQuery, validate_meta
from .workflow import validate_workflow, workflow_from_dict, workflow_to_dict

_STATUS_BY_CODE = {
    "UNKNOWN_MODULE": 404,
    "UNKNOWN_WORKFLOW": 404,
    "UNKNOWN_RUN": 404,
    "UNKNOWN_NODE": 404,
    "NOT_FOUND": 404,
    "DUPLICATE_ID": 409,
    "VALIDATION_FAILED": 422,
    "STARS_OUT_OF_RANGE": 422,
    "INVALID_WORKFLOW": 422,
    "UNSATISFIABLE": 422,
    "UNRESOLVED_PREREQ": 422,
    "CYCLE_DETECTED": 422,
    "BROKEN_DEPENDENCY": 422,
    "MISSING_INPUT": 422,
    "BAD_PARAMETER": 422,
    "EMPTY_POOL": 422,
    "ADAPTER_MISSING": 422,
    "MALFORMED_ARCHIVE": 400,
    "UNSUPPORTED_VERSION": 400,
    "MALFORMED_MODULE": 400,
    "MALFORMED_WORKFLOW": 400,
    "MALFORMED_TRACK": 400,
    "MALFORMED_POOL": 400,
    "BAD_REQUEST": 400,
}

_MEDIA_BY_KIND = {
    "trajectory-table": "text/csv; charset=utf-8",
    "plot-data": "text/csv; charset=utf-8",
    "histogram": "text/csv; charset=utf-8",
    "frame-list": "text/plain; charset=utf-8",
    "video": "text/plain; charset=utf-8",
}


def canonical_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=canonical.dump_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


class ServiceState:
    """Registry plus executor wired to a data directory."""

    def __init__(self, data_dir: Path | str, worker_limit: int = 4) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.registry = Registry()
        self._persist_lock = threading.Lock()
        self._run_history: dict[str, dict[str, Any]] = {}
        self.executor = ExecutorService(
            store_root=self.data_dir,
            worker_limit=worker_limit,
            on_finalized=self._persist_run,
        )
        self._load()

    @property
    def repository_path(self) -> Path:
        return self.data_dir / "repository.json"

    def _load(self) -> None:
        if self.repository_path.is_file():
            self.registry.import_archive(self.repository_path.read_bytes())
        runs_dir = self.data_dir / "runs"
        if runs_dir.is_dir():
            for record_path in sorted(runs_dir.glob("*/record.json")):
                try:
                    record = json.loads(record_path.read_text("utf-8"))
                except (OSError, ValueError):
                    continue
                if isinstance(record, dict) and isinstance(record.get("run_id"), str):
                    self._run_history[record["run_id"]] = record

    def persist_registry(self) -> None:
        with self._persist_lock:
            self.repository_path.write_bytes(self.registry.export_archive())

    def _persist_run(self, record) -> None:
        payload = record.to_dict()
        run_dir = self.data_dir / "runs" / record.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "record.json").write_text(
            json.dumps(payload, sort_keys=True), "utf-8"
        )
        self._run_history[record.run_id] = payload

    def run_record(self, run_id: str) -> dict[str, Any]:
        if self.executor.has_run(run_id):
            return self.executor.status(run_id).to_dict()
        record = self._run_history.get(run_id)
        if record is None:
            raise UnknownRunError(f"unknown run {run_id!r}")
        return record

    def artifact(self, run_id: str, node: str, port: str) -> tuple[str, bytes]:
        record = self.run_record(run_id)
        for artifact in record.get("artifacts", []):
            if artifact.get("node") == node and artifact.get("port") == port:
                path = self.data_dir / "runs" / run_id / node / port
                if path.is_file():
                    return artifact.get("kind", ""), path.read_bytes()
                _, data = self.executor.artifact_bytes(run_id, node, port)
                return artifact.get("kind", ""), data
        raise UnknownRunError(f"run {run_id} has no artifact at {node}/{port}")


def _expect_object(payload: Any) -> Mapping[str, Any]:
    if not isinstance(payload, Mapping):
        raise BadRequestError("request body must be a JSON object")
    return payload


async def _body_json(request: Request) -> Any:
    raw = await request.body()
    try:
        return canonical.loads(raw)
    except ValueError as exc:
        raise BadRequestError(f"request body is not valid JSON: {exc}") from exc


def create_app(
    data_dir: Path | str,
    worker_limit: int = 4,
    ui_dir: Path | str | None = None,
) -> FastAPI:
    state = ServiceState(data_dir, worker_limit=worker_limit)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        state.persist_registry()

    app = FastAPI(title="coursegate", version="0.1.0", lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(CourseGateError)
    async def handle_gate_error(request: Request, exc: CourseGateError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.get("/v1/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    # -- modules ---------------------------------------------------------

    @app.get("/v1/modules")
    def list_modules() -> Response:
        return canonical_response([module_to_dict(m) for m in state.registry.list_modules()])

    @app.post("/v1/modules")
    async def register_module(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        meta = module_from_dict(payload)
        module_id = state.registry.register_module(meta)
        state.persist_registry()
        return canonical_response({"id": module_id}, status_code=201)

    @app.get("/v1/modules/search")
    def search_modules(
        keyword: list[str] | None = None,
        category_prefix: str | None = None,
        scale: str | None = None,
        language: str | None = None,
        max_complexity: int | None = None,
    ) -> Response:
        scale_value = None
        if scale is not None:
            try:
                scale_value = ScaleLevel(scale.casefold())
            except ValueError as exc:
                raise BadRequestError(f"unknown scale {scale!r}") from exc
        query = SearchQuery(
            keywords=tuple(keyword or ()),
            category_prefix=category_prefix,
            scale=scale_value,
            language=language,
            max_complexity=max_complexity,
        )
        return canonical_response(
            [module_to_dict(m) for m in state.registry.search_modules(query)]
        )

    @app.get("/v1/modules/{module_id}")
    def get_module(module_id: str) -> Response:
        return canonical_response(module_to_dict(state.registry.get_module(module_id)))

    @app.post("/v1/modules/{module_id}/ratings")
    async def rate_module(module_id: str, request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        stars = payload.get("stars")
        if isinstance(stars, bool) or not isinstance(stars, int):
            raise BadRequestError("field 'stars' must be an integer")
        rating = state.registry.rate_module(module_id, stars)
        state.persist_registry()
        mean = rating.mean
        return canonical_response(
            {
                "count": rating.count,
                "sum": rating.sum,
                "mean": None if mean is None else float(mean),
            }
        )

    @app.post("/v1/modules/{module_id}/validate")
    def validate_module(module_id: str) -> Response:
        meta = state.registry.get_module(module_id)
        report = validate_meta(meta, state.registry.module_ids())
        return canonical_response(report.to_dict())

    # -- repository ------------------------------------------------------

    @app.get("/v1/repo/export")
    def export_repo() -> Response:
        return Response(
            content=state.registry.export_archive(), media_type="application/json"
        )

    @app.post("/v1/repo/import")
    async def import_repo(request: Request) -> Response:
        raw = await request.body()
        report = state.registry.import_archive(raw)
        state.persist_registry()
        return canonical_response(report.to_dict())

    # -- tracks ----------------------------------------------------------

    def _graph(payload: Mapping[str, Any]):
        modules = state.registry.list_modules()
        return build_graph(modules)

    @app.post("/v1/tracks/check")
    async def tracks_check(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        track = track_from_dict(payload.get("track", payload))
        constraints = constraints_from_dict(payload.get("constraints"))
        findings = check_track(track, _graph(payload), constraints)
        return canonical_response({"findings": [f.to_dict() for f in findings]})

    @app.post("/v1/tracks/plan")
    async def tracks_plan(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        target = payload.get("target")
        if not isinstance(target, str):
            raise BadRequestError("field 'target' must be a module id")
        constraints = constraints_from_dict(payload.get("constraints"))
        track = plan_track(target, _graph(payload), constraints)
        return canonical_response(track_to_dict(track))

    @app.post("/v1/tracks/aggregate")
    async def tracks_aggregate(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        track = track_from_dict(payload.get("track", payload))
        totals = aggregate(track, state.registry.modules_by_id())
        return canonical_response(totals.to_dict())

    # -- workflows ---------------------------------------------------------

    @app.get("/v1/workflows")
    def list_workflows() -> Response:
        return canonical_response(
            [workflow_to_dict(w) for w in state.registry.list_workflows()]
        )

    @app.post("/v1/workflows")
    async def register_workflow(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        wf = workflow_from_dict(payload)
        workflow_id = state.registry.register_workflow(wf)
        state.persist_registry()
        return canonical_response({"id": workflow_id}, status_code=201)

    @app.get("/v1/workflows/{workflow_id}")
    def get_workflow(workflow_id: str) -> Response:
        return canonical_response(
            workflow_to_dict(state.registry.get_workflow(workflow_id))
        )

    @app.post("/v1/workflows/{workflow_id}/validate")
    def validate_stored_workflow(workflow_id: str) -> Response:
        wf = state.registry.get_workflow(workflow_id)
        findings = validate_workflow(wf)
        return canonical_response({"findings": [f.to_dict() for f in findings]})

    # -- runs --------------------------------------------------------------

    @app.post("/v1/runs")
    async def submit_run(request: Request) -> Response:
        payload = _expect_object(await _body_json(request))
        if "workflow" in payload:
            wf = workflow_from_dict(_expect_object(payload["workflow"]))
        elif isinstance(payload.get("workflow_id"), str):
            wf = state.registry.get_workflow(payload["workflow_id"])
        else:
            raise BadRequestError("provide 'workflow' inline or a 'workflow_id'")
        pool_raw = payload.get("pool")
        pool = None
        if pool_raw is not None:
            if not isinstance(pool_raw, list):
                raise BadRequestError("field 'pool' must be a list of resources")
            pool = [resource_from_dict(item) for item in pool_raw]
        policy_raw = payload.get("policy", Policy.ROUND_ROBIN.value)
        try:
            policy = Policy(policy_raw)
        except ValueError as exc:
            raise BadRequestError(f"unknown policy {policy_raw!r}") from exc
        seed = payload.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise BadRequestError("field 'seed' must be an integer")
        inputs_raw = payload.get("inputs")
        inputs = None
        if inputs_raw is not None:
            inputs = _expect_object(inputs_raw)
            if any(not isinstance(v, str) for v in inputs.values()):
                raise BadRequestError("inputs must map 'node:port' keys to strings")
        run_id = state.executor.submit(wf, pool=pool, policy=policy, seed=seed, inputs=inputs)
        return canonical_response({"run_id": run_id, "status": "running"}, status_code=202)

    @app.get("/v1/runs/{run_id}")
    def run_status(run_id: str) -> JSONResponse:
        return JSONResponse(content=state.run_record(run_id))

    @app.post("/v1/runs/{run_id}/cancel")
    def cancel_run(run_id: str) -> JSONResponse:
        if state.executor.has_run(run_id):
            record = state.executor.cancel(run_id)
            return JSONResponse(content={"run_id": run_id, "status": record.status.value})
        record_dict = state.run_record(run_id)
        return JSONResponse(content={"run_id": run_id, "status": record_dict.get("status")})

    @app.get("/v1/runs/{run_id}/artifacts/{node}/{port}")
    def get_artifact(run_id: str, node: str, port: str) -> Response:
        kind, data = state.artifact(run_id, node, port)
        return Response(
            content=data,
            media_type=_MEDIA_BY_KIND.get(kind, "application/octet-stream"),
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _check_port_free(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUseError(f"port {port} on {host} is already in use") from exc
    finally:
        probe.close()


def _check_writable(data_dir: Path) -> None:
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
        probe = data_dir / ".write-probe"
        probe.write_text("ok", "utf-8")
        probe.unlink()
    except OSError as exc:
        raise DataDirUnwritableError(f"cannot write to {data_dir}: {exc}") from exc


def serve(
    port: int | None = None,
    data_dir: Path | str | None = None,
    host: str = "127.0.0.1",
    worker_limit: int = 4,
    ui_dir: Path | str | None = None,
) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    if port is None:
        port = int(os.environ.get("COURSEGATE_PORT", "8080"))
    if data_dir is None:
        data_dir = os.environ.get("COURSEGATE_DATA_DIR", "coursegate-data")
    resolved = Path(data_dir)
    _check_writable(resolved)
    _check_port_free(host, port)
    app = create_app(resolved, worker_limit=worker_limit, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
