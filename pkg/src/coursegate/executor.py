"""Workflow execution on simulated distributed-computing resources.

Scheduling runs in logical time: a node costs (steps parameter or 1) times
the speed factor of its resource, and concurrency is bounded by per-resource
slots. Events carry a (time, sequence) stamp, strictly ordered by processing
order, so dependency and slot invariants are exact and independent of the
worker-thread count. Adapters must be deterministic, which makes artifact
bytes a function of (workflow, plan, inputs, seed) alone.
"""

from __future__ import annotations

import hashlib
import heapq
import threading
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import canonical
from .adapters import AdapterInput, ToolAdapter, builtin_adapters, node_seed
from .errors import (
    AdapterMissingError,
    BadRequestError,
    EmptyPoolError,
    MalformedPoolError,
    MissingInputError,
    UnknownRunError,
)
from .workflow import Workflow, topo_layers, validate_workflow


class ResourceKind(str, Enum):
    PC = "pc"
    CLUSTER = "cluster"
    SERVICE_GRID = "service_grid"
    DESKTOP_GRID = "desktop_grid"
    CLOUD = "cloud"


@dataclass(frozen=True)
class Resource:
    """A simulated execution target with limited concurrency."""

    id: str
    kind: ResourceKind
    slots: int
    speed_factor: Fraction

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise MalformedPoolError(f"resource {self.id!r} needs at least one slot")
        if self.speed_factor <= 0:
            raise MalformedPoolError(f"resource {self.id!r} needs a positive speed factor")


def resource_from_dict(raw: Mapping[str, Any]) -> Resource:
    if not isinstance(raw, Mapping):
        raise MalformedPoolError("pool entries must be objects")
    rid = raw.get("id")
    if not isinstance(rid, str) or not rid:
        raise MalformedPoolError("resource id must be a non-empty string")
    try:
        kind = ResourceKind(str(raw.get("kind", "pc")))
    except ValueError as exc:
        raise MalformedPoolError(f"unknown resource kind {raw.get('kind')!r}") from exc
    slots = raw.get("slots", 1)
    if isinstance(slots, bool) or not isinstance(slots, int):
        raise MalformedPoolError(f"slots of {rid!r} must be an integer")
    speed_raw = raw.get("speed_factor", 1)
    if isinstance(speed_raw, bool) or not isinstance(speed_raw, (int, float, str)) and not hasattr(speed_raw, "as_integer_ratio"):
        raise MalformedPoolError(f"speed_factor of {rid!r} must be a number")
    try:
        speed = Fraction(str(speed_raw))
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedPoolError(f"speed_factor of {rid!r} is not a number") from exc
    return Resource(rid, kind, slots, speed)


def pool_from_json(data: bytes | str) -> list[Resource]:
    try:
        parsed = canonical.loads(data)
    except ValueError as exc:
        raise MalformedPoolError(f"pool is not valid JSON: {exc}") from exc
    if not isinstance(parsed, list):
        raise MalformedPoolError("pool must be a JSON list")
    return [resource_from_dict(item) for item in parsed]


def default_pool() -> list[Resource]:
    return [Resource("local-pc", ResourceKind.PC, slots=2, speed_factor=Fraction(1))]


class Policy(str, Enum):
    ROUND_ROBIN = "round_robin"
    FASTEST_FIT = "fastest_fit"


@dataclass(frozen=True)
class ExecutionPlan:
    workflow_id: str
    assignment: dict[str, str]
    layers: tuple[tuple[str, ...], ...]
    resources: tuple[Resource, ...]

    def resource_of(self, node_id: str) -> Resource:
        rid = self.assignment[node_id]
        return next(r for r in self.resources if r.id == rid)


def plan_execution(
    wf: Workflow, pool: Sequence[Resource], policy: Policy | str = Policy.ROUND_ROBIN
) -> ExecutionPlan:
    """Assign every node to a resource; deterministic for a given input.

    round_robin walks nodes in topological-lexicographic order (the layer
    concatenation) cycling through the pool sorted by id. fastest_fit puts
    everything on the lowest speed factor, ties broken by resource id.
    """
    policy = Policy(policy)
    if not pool:
        raise EmptyPoolError("resource pool is empty")
    ids = {r.id for r in pool}
    if len(ids) != len(pool):
        raise MalformedPoolError("resource ids must be unique")
    layers = tuple(tuple(layer) for layer in topo_layers(wf))
    ordered_nodes = [node_id for layer in layers for node_id in layer]
    assignment: dict[str, str] = {}
    if policy is Policy.ROUND_ROBIN:
        rotation = sorted(pool, key=lambda r: r.id)
        for i, node_id in enumerate(ordered_nodes):
            assignment[node_id] = rotation[i % len(rotation)].id
    else:
        fastest = min(pool, key=lambda r: (r.speed_factor, r.id))
        for node_id in ordered_nodes:
            assignment[node_id] = fastest.id
    return ExecutionPlan(wf.id, assignment, layers, tuple(pool))


@dataclass(frozen=True, order=True)
class LogicalStamp:
    """Simulated time plus a global sequence number; totally ordered."""

    time: Fraction
    seq: int

    def to_json(self) -> list[Any]:
        return [float(self.time), self.seq]


class NodeStatus(str, Enum):
    PENDING = "pending"
    QUEUED = "queued"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    DEP_FAILED = "failed_by_dependency"
    CANCELLED = "cancelled"


class RunStatus(str, Enum):
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    CANCELLED = "cancelled"


@dataclass(frozen=True)
class Artifact:
    """Content-addressed output of one node port."""

    id: str
    kind: str
    node: str
    port: str
    size: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind,
            "node": self.node,
            "port": self.port,
            "size": self.size,
        }


def artifact_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ArtifactStore:
    """Run-scoped artifact tree: runs/<run>/<node>/<port>; ids are content hashes."""

    def __init__(self, root: Path | str | None = None) -> None:
        self.root = Path(root) if root is not None else None
        self._memory: dict[tuple[str, str, str], tuple[Artifact, bytes]] = {}
        self._lock = threading.Lock()

    def put(self, run_id: str, node: str, port: str, kind: str, data: bytes) -> Artifact:
        artifact = Artifact(artifact_id(data), kind, node, port, len(data))
        with self._lock:
            self._memory[(run_id, node, port)] = (artifact, data)
        if self.root is not None:
            path = self.root / "runs" / run_id / node / port
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        return artifact

    def get_bytes(self, run_id: str, node: str, port: str) -> bytes:
        with self._lock:
            entry = self._memory.get((run_id, node, port))
        if entry is not None:
            return entry[1]
        if self.root is not None:
            path = self.root / "runs" / run_id / node / port
            if path.is_file():
                return path.read_bytes()
        raise UnknownRunError(f"no artifact stored for {run_id}/{node}/{port}")

    def get_artifact(self, run_id: str, node: str, port: str) -> Artifact:
        with self._lock:
            entry = self._memory.get((run_id, node, port))
        if entry is None:
            raise UnknownRunError(f"no artifact stored for {run_id}/{node}/{port}")
        return entry[0]


@dataclass
class NodeRun:
    status: NodeStatus = NodeStatus.PENDING
    resource: str | None = None
    queued: LogicalStamp | None = None
    started: LogicalStamp | None = None
    finished: LogicalStamp | None = None
    failure: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "resource": self.resource,
            "queued": self.queued.to_json() if self.queued else None,
            "started": self.started.to_json() if self.started else None,
            "finished": self.finished.to_json() if self.finished else None,
            "failure": self.failure,
        }


@dataclass(frozen=True)
class ExecutionRecord:
    """Immutable snapshot of one run; final once status leaves running."""

    run_id: str
    workflow_id: str
    seed: int
    status: RunStatus
    nodes: dict[str, NodeRun]
    artifacts: tuple[Artifact, ...]
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "workflow_id": self.workflow_id,
            "seed": self.seed,
            "status": self.status.value,
            "nodes": {nid: run.to_dict() for nid, run in sorted(self.nodes.items())},
            "artifacts": [a.to_dict() for a in self.artifacts],
            "error": self.error,
        }


class RunState:
    """Mutable run bookkeeping shared between the engine and status readers."""

    def __init__(self, run_id: str, wf: Workflow, plan: ExecutionPlan, seed: int) -> None:
        self.run_id = run_id
        self.workflow = wf
        self.plan = plan
        self.seed = seed
        self.lock = threading.Lock()
        self.cancel_event = threading.Event()
        self.status = RunStatus.RUNNING
        self.nodes: dict[str, NodeRun] = {n.id: NodeRun() for n in wf.nodes}
        self.artifacts: list[Artifact] = []
        self.error: str | None = None
        self.done = threading.Event()

    def snapshot(self) -> ExecutionRecord:
        with self.lock:
            nodes = {nid: replace(run) for nid, run in self.nodes.items()}
            return ExecutionRecord(
                self.run_id,
                self.workflow.id,
                self.seed,
                self.status,
                nodes,
                tuple(sorted(self.artifacts, key=lambda a: (a.node, a.port))),
                self.error,
            )


def _normalize_inputs(
    inputs: Mapping[Any, bytes | str] | None,
) -> dict[tuple[str, str], bytes]:
    normalized: dict[tuple[str, str], bytes] = {}
    if not inputs:
        return normalized
    for key, value in inputs.items():
        if isinstance(key, str):
            if ":" not in key:
                raise BadRequestError(f"input key {key!r} must look like 'node:port'")
            node, port = key.split(":", 1)
        else:
            node, port = key
        data = value.encode("utf-8") if isinstance(value, str) else bytes(value)
        normalized[(node, port)] = data
    return normalized


def _node_cost(parameters: Mapping[str, str], speed_factor: Fraction) -> Fraction:
    raw = parameters.get("steps")
    steps = Fraction(1)
    if raw is not None:
        try:
            steps = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            steps = Fraction(1)
        if steps <= 0:
            steps = Fraction(1)
    return steps * speed_factor


def execute(
    wf: Workflow,
    plan: ExecutionPlan,
    *,
    inputs: Mapping[Any, bytes | str] | None = None,
    seed: int = 0,
    adapters: Mapping[str, ToolAdapter] | None = None,
    store: ArtifactStore | None = None,
    worker_limit: int = 4,
    state: RunState | None = None,
) -> ExecutionRecord:
    """Run a planned workflow to completion and return its record.

    Nodes start once every predecessor succeeded and their resource has a
    free slot; independent nodes overlap up to the slot and worker limits.
    A node failure marks everything downstream failed_by_dependency while
    independent branches keep running. Cancelling stops queued nodes from
    starting; running nodes finish.
    """
    errors = [f for f in validate_workflow(wf) if f.severity == "error"]
    if errors:
        from .errors import InvalidWorkflowError

        raise InvalidWorkflowError(
            "workflow is invalid", details=[f.to_dict() for f in errors]
        )
    if set(plan.assignment) != {n.id for n in wf.nodes}:
        raise BadRequestError("plan assignment does not cover the workflow's nodes")

    adapters = dict(adapters) if adapters is not None else builtin_adapters()
    missing = sorted({n.tool for n in wf.nodes if n.tool not in adapters})
    if missing:
        raise AdapterMissingError(
            f"no adapter registered for tool(s): {', '.join(missing)}", details=missing
        )

    supplied = _normalize_inputs(inputs)
    linked: set[tuple[str, str]] = {
        (link.target.node, link.target.port) for link in wf.links
    }
    unmet = [
        f"{node.id}:{port.name}"
        for node in wf.nodes
        for port in node.in_ports
        if (node.id, port.name) not in linked and (node.id, port.name) not in supplied
    ]
    if unmet:
        raise MissingInputError(
            f"unconnected in-port(s) need supplied inputs: {', '.join(sorted(unmet))}",
            details=sorted(unmet),
        )

    if store is None:
        store = ArtifactStore()
    if state is None:
        state = RunState(uuid.uuid4().hex[:12], wf, plan, seed)

    nodes_by_id = {n.id: n for n in wf.nodes}
    preds: dict[str, set[str]] = {n.id: set() for n in wf.nodes}
    succs: dict[str, set[str]] = {n.id: set() for n in wf.nodes}
    for link in wf.links:
        preds[link.target.node].add(link.source.node)
        succs[link.source.node].add(link.target.node)

    free_slots = {r.id: r.slots for r in plan.resources}
    outputs: dict[tuple[str, str], bytes] = {}
    futures: dict[str, Future[Mapping[str, bytes]]] = {}
    finish_heap: list[tuple[Fraction, str]] = []
    seq_counter = 0
    clock = Fraction(0)

    def stamp() -> LogicalStamp:
        nonlocal seq_counter
        seq_counter += 1
        return LogicalStamp(clock, seq_counter)

    def set_queued(node_id: str) -> None:
        with state.lock:
            run = state.nodes[node_id]
            run.status = NodeStatus.QUEUED
            run.queued = stamp()

    def downstream_of(node_id: str) -> set[str]:
        result: set[str] = set()
        frontier = [node_id]
        while frontier:
            current = frontier.pop()
            for nxt in succs[current]:
                if nxt not in result:
                    result.add(nxt)
                    frontier.append(nxt)
        return result

    def adapter_inputs(node_id: str) -> tuple[AdapterInput, ...]:
        node = nodes_by_id[node_id]
        gathered: list[AdapterInput] = []
        for port in node.in_ports:
            data = outputs.get((node_id, port.name))
            if data is None:
                data = supplied[(node_id, port.name)]
            gathered.append(AdapterInput(port.name, port.payload_kind, data))
        return tuple(gathered)

    # Source nodes are queued at time zero; dependents queue as parents finish.
    for node_id in sorted(preds):
        if not preds[node_id]:
            set_queued(node_id)

    remaining_preds = {nid: set(parents) for nid, parents in preds.items()}

    with ThreadPoolExecutor(max_workers=max(1, worker_limit)) as pool_executor:
        while True:
            cancelled = state.cancel_event.is_set()

            if not cancelled:
                with state.lock:
                    startable = sorted(
                        nid
                        for nid, run in state.nodes.items()
                        if run.status is NodeStatus.QUEUED
                    )
                for node_id in startable:
                    resource = plan.resource_of(node_id)
                    if free_slots[resource.id] <= 0:
                        continue
                    free_slots[resource.id] -= 1
                    node = nodes_by_id[node_id]
                    ins = adapter_inputs(node_id)
                    adapter = adapters[node.tool]
                    with state.lock:
                        run = state.nodes[node_id]
                        run.status = NodeStatus.RUNNING
                        run.resource = resource.id
                        run.started = stamp()
                    futures[node_id] = pool_executor.submit(
                        adapter.run, node, ins, node_seed(seed, node_id)
                    )
                    finish_time = clock + _node_cost(node.parameters, resource.speed_factor)
                    heapq.heappush(finish_heap, (finish_time, node_id))
            else:
                with state.lock:
                    for run in state.nodes.values():
                        if run.status in (NodeStatus.PENDING, NodeStatus.QUEUED):
                            run.status = NodeStatus.CANCELLED

            if not finish_heap:
                break

            finish_time, node_id = heapq.heappop(finish_heap)
            clock = finish_time
            node = nodes_by_id[node_id]
            failure: str | None = None
            produced: Mapping[str, bytes] = {}
            try:
                produced = futures.pop(node_id).result()
            except Exception as exc:  # adapter failures are recorded, not raised
                failure = f"ADAPTER_FAILURE: {exc}"

            if failure is None:
                expected = {p.name: p.payload_kind for p in node.out_ports}
                if set(produced) != set(expected):
                    failure = (
                        "ADAPTER_FAILURE: outputs do not match declared out-ports "
                        f"(got {sorted(produced)}, want {sorted(expected)})"
                    )

            resource_id = plan.assignment[node_id]
            free_slots[resource_id] += 1

            if failure is None:
                stored: list[Artifact] = []
                for port_name, data in sorted(produced.items()):
                    artifact = store.put(
                        state.run_id, node_id, port_name, expected[port_name], data
                    )
                    stored.append(artifact)
                for link in wf.links:
                    if link.source.node == node_id:
                        outputs[(link.target.node, link.target.port)] = produced[
                            link.source.port
                        ]
                with state.lock:
                    run = state.nodes[node_id]
                    run.status = NodeStatus.SUCCEEDED
                    run.finished = stamp()
                    state.artifacts.extend(stored)
                for dependent in sorted(succs[node_id]):
                    remaining_preds[dependent].discard(node_id)
                    if (
                        not remaining_preds[dependent]
                        and state.nodes[dependent].status is NodeStatus.PENDING
                    ):
                        set_queued(dependent)
            else:
                with state.lock:
                    run = state.nodes[node_id]
                    run.status = NodeStatus.FAILED
                    run.finished = stamp()
                    run.failure = failure
                for downstream in sorted(downstream_of(node_id)):
                    with state.lock:
                        run = state.nodes[downstream]
                        if run.status in (NodeStatus.PENDING, NodeStatus.QUEUED):
                            run.status = NodeStatus.DEP_FAILED
                            run.failure = f"upstream node {node_id!r} failed"
                            run.finished = stamp()

    # Cancellation that actually prevented work wins; otherwise any failure
    # makes the run failed; otherwise it succeeded.
    with state.lock:
        statuses = {run.status for run in state.nodes.values()}
        if NodeStatus.CANCELLED in statuses:
            state.status = RunStatus.CANCELLED
        elif NodeStatus.FAILED in statuses or NodeStatus.DEP_FAILED in statuses:
            state.status = RunStatus.FAILED
        else:
            state.status = RunStatus.SUCCEEDED
    state.done.set()
    return state.snapshot()


class ExecutorService:
    """Background run management: submit returns immediately with a run id."""

    def __init__(
        self,
        store_root: Path | str | None = None,
        adapters: Mapping[str, ToolAdapter] | None = None,
        worker_limit: int = 4,
        on_finalized: Callable[[ExecutionRecord], None] | None = None,
    ) -> None:
        self.store = ArtifactStore(store_root)
        self.adapters = dict(adapters) if adapters is not None else builtin_adapters()
        self.worker_limit = worker_limit
        self.on_finalized = on_finalized
        self._runs: dict[str, RunState] = {}
        self._threads: dict[str, threading.Thread] = {}
        self._lock = threading.Lock()

    def submit(
        self,
        wf: Workflow,
        pool: Sequence[Resource] | None = None,
        policy: Policy | str = Policy.ROUND_ROBIN,
        seed: int = 0,
        inputs: Mapping[Any, bytes | str] | None = None,
    ) -> str:
        resources = list(pool) if pool else default_pool()
        plan = plan_execution(wf, resources, policy)
        run_id = uuid.uuid4().hex[:12]
        state = RunState(run_id, wf, plan, seed)

        # Fail fast on missing adapters and inputs before exposing the run.
        missing = sorted({n.tool for n in wf.nodes if n.tool not in self.adapters})
        if missing:
            raise AdapterMissingError(
                f"no adapter registered for tool(s): {', '.join(missing)}", details=missing
            )
        normalized = _normalize_inputs(inputs)
        linked = {(link.target.node, link.target.port) for link in wf.links}
        unmet = sorted(
            f"{node.id}:{port.name}"
            for node in wf.nodes
            for port in node.in_ports
            if (node.id, port.name) not in linked and (node.id, port.name) not in normalized
        )
        if unmet:
            raise MissingInputError(
                f"unconnected in-port(s) need supplied inputs: {', '.join(unmet)}",
                details=unmet,
            )

        def runner() -> None:
            try:
                execute(
                    wf,
                    plan,
                    inputs=inputs,
                    seed=seed,
                    adapters=self.adapters,
                    store=self.store,
                    worker_limit=self.worker_limit,
                    state=state,
                )
            except Exception as exc:
                with state.lock:
                    state.status = RunStatus.FAILED
                    state.error = str(exc)
                    for run in state.nodes.values():
                        if run.status in (NodeStatus.PENDING, NodeStatus.QUEUED):
                            run.status = NodeStatus.CANCELLED
                state.done.set()
            finally:
                if self.on_finalized is not None:
                    try:
                        self.on_finalized(state.snapshot())
                    except Exception:
                        pass

        thread = threading.Thread(target=runner, name=f"run-{run_id}", daemon=True)
        with self._lock:
            self._runs[run_id] = state
            self._threads[run_id] = thread
        thread.start()
        return run_id

    def _state(self, run_id: str) -> RunState:
        with self._lock:
            state = self._runs.get(run_id)
        if state is None:
            raise UnknownRunError(f"unknown run {run_id!r}")
        return state

    def has_run(self, run_id: str) -> bool:
        with self._lock:
            return run_id in self._runs

    def status(self, run_id: str) -> ExecutionRecord:
        return self._state(run_id).snapshot()

    def cancel(self, run_id: str) -> ExecutionRecord:
        state = self._state(run_id)
        state.cancel_event.set()
        return state.snapshot()

    def wait(self, run_id: str, timeout: float | None = None) -> ExecutionRecord:
        state = self._state(run_id)
        if not state.done.wait(timeout):
            raise TimeoutError(f"run {run_id} did not finish within {timeout}s")
        return state.snapshot()

    def artifact_bytes(self, run_id: str, node: str, port: str) -> tuple[Artifact, bytes]:
        state = self._state(run_id)
        with state.lock:
            artifact = next(
                (a for a in state.artifacts if a.node == node and a.port == port), None
            )
        if artifact is None:
            raise UnknownRunError(f"run {run_id} has no artifact at {node}/{port}")
        return artifact, self.store.get_bytes(run_id, node, port)
