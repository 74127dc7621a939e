"""Crate workflows: DAGs of tool nodes with typed ports and connecting links."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from . import canonical
from .errors import (
    BrokenDependencyError,
    InvalidWorkflowError,
    MalformedWorkflowError,
    UnknownNodeError,
)

TOKEN_RE = re.compile(r"[a-z0-9][a-z0-9_-]*")
MAX_SCRIPT_BYTES = 1 << 20


def is_valid_token(text: str) -> bool:
    return bool(text) and TOKEN_RE.fullmatch(text) is not None


class PortDirection(str, Enum):
    IN = "in"
    OUT = "out"


class ScriptRole(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class Port:
    name: str
    direction: PortDirection
    payload_kind: str


@dataclass(frozen=True)
class ScriptBinding:
    content: str
    role: ScriptRole = ScriptRole.INPUT


@dataclass(frozen=True)
class CrateNode:
    """One tool binding: ports, an optional attached script, and parameters."""

    id: str
    tool: str
    in_ports: tuple[Port, ...] = ()
    out_ports: tuple[Port, ...] = ()
    script: ScriptBinding | None = None
    parameters: dict[str, str] = field(default_factory=dict)

    def in_port(self, name: str) -> Port | None:
        return next((p for p in self.in_ports if p.name == name), None)

    def out_port(self, name: str) -> Port | None:
        return next((p for p in self.out_ports if p.name == name), None)


@dataclass(frozen=True)
class Endpoint:
    node: str
    port: str


@dataclass(frozen=True)
class Link:
    source: Endpoint
    target: Endpoint


@dataclass(frozen=True)
class Workflow:
    """An immutable DAG of crate nodes; edits return modified copies."""

    id: str
    title: str
    nodes: tuple[CrateNode, ...] = ()
    links: tuple[Link, ...] = ()
    owning_module: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def node(self, node_id: str) -> CrateNode | None:
        return next((n for n in self.nodes if n.id == node_id), None)

    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)


@dataclass(frozen=True)
class WorkflowFinding:
    severity: str
    code: str
    message: str
    node: str | None = None
    port: str | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }
        if self.node is not None:
            payload["node"] = self.node
        if self.port is not None:
            payload["port"] = self.port
        return payload


def _error(code: str, message: str, **kw: Any) -> WorkflowFinding:
    return WorkflowFinding("error", code, message, **kw)


def _warning(code: str, message: str, **kw: Any) -> WorkflowFinding:
    return WorkflowFinding("warning", code, message, **kw)


def _valid_link_edges(wf: Workflow) -> list[tuple[str, str]]:
    """Edges (source node, target node) for links whose endpoints resolve."""
    edges = []
    for link in wf.links:
        src = wf.node(link.source.node)
        dst = wf.node(link.target.node)
        if src is None or dst is None:
            continue
        if src.out_port(link.source.port) is None or dst.in_port(link.target.port) is None:
            continue
        edges.append((link.source.node, link.target.node))
    return edges


def _find_cycle_nodes(node_ids: Sequence[str], edges: Iterable[tuple[str, str]]) -> bool:
    succs: dict[str, set[str]] = {n: set() for n in node_ids}
    indegree = {n: 0 for n in node_ids}
    for a, b in edges:
        if b not in succs[a]:
            succs[a].add(b)
            indegree[b] += 1
    queue = [n for n in node_ids if indegree[n] == 0]
    visited = 0
    while queue:
        node = queue.pop()
        visited += 1
        for nxt in succs[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                queue.append(nxt)
    return visited != len(node_ids)


def validate_workflow(
    wf: Workflow, known_tools: Iterable[str] | None = None
) -> list[WorkflowFinding]:
    """Structural validation; an empty list means the workflow is executable.

    Unknown tools are warnings so that archives carrying foreign crates still
    validate structurally.
    """
    findings: list[WorkflowFinding] = []
    if known_tools is None:
        from .adapters import builtin_adapters  # local import to avoid a cycle

        known_tools = builtin_adapters().keys()
    known = set(known_tools)

    seen_nodes: set[str] = set()
    for node in wf.nodes:
        if node.id in seen_nodes:
            findings.append(_error("DUPLICATE_NODE", f"duplicate node id {node.id!r}", node=node.id))
        seen_nodes.add(node.id)
        if not is_valid_token(node.id):
            findings.append(_error("INVALID_TOKEN", f"node id {node.id!r} is not a token", node=node.id))
        if not node.tool or not is_valid_token(node.tool):
            findings.append(_error("INVALID_TOKEN", f"tool name {node.tool!r} is not a token", node=node.id))
        elif node.tool not in known:
            findings.append(
                _warning("UNKNOWN_TOOL", f"tool {node.tool!r} has no registered adapter", node=node.id)
            )
        for ports in (node.in_ports, node.out_ports):
            names: set[str] = set()
            for port in ports:
                if not is_valid_token(port.name):
                    findings.append(
                        _error("INVALID_TOKEN", f"port name {port.name!r} is not a token",
                               node=node.id, port=port.name)
                    )
                if port.name in names:
                    findings.append(
                        _error("DUPLICATE_PORT",
                               f"node {node.id!r} declares port {port.name!r} twice",
                               node=node.id, port=port.name)
                    )
                names.add(port.name)
        if node.script is not None and len(node.script.content.encode("utf-8")) > MAX_SCRIPT_BYTES:
            findings.append(
                _error("SCRIPT_TOO_LARGE", f"script on node {node.id!r} exceeds 1 MiB", node=node.id)
            )

    incoming_seen: set[tuple[str, str]] = set()
    for link in wf.links:
        src_node = wf.node(link.source.node)
        dst_node = wf.node(link.target.node)
        src_port = src_node.out_port(link.source.port) if src_node else None
        dst_port = dst_node.in_port(link.target.port) if dst_node else None
        if src_port is None:
            findings.append(
                _error("DANGLING_ENDPOINT",
                       f"link source {link.source.node}.{link.source.port} does not exist",
                       node=link.source.node, port=link.source.port)
            )
        if dst_port is None:
            findings.append(
                _error("DANGLING_ENDPOINT",
                       f"link target {link.target.node}.{link.target.port} does not exist",
                       node=link.target.node, port=link.target.port)
            )
        if src_port is not None and dst_port is not None:
            if src_port.payload_kind != dst_port.payload_kind:
                findings.append(
                    _error("PORT_KIND_MISMATCH",
                           f"link {link.source.node}.{link.source.port} -> "
                           f"{link.target.node}.{link.target.port} carries "
                           f"{src_port.payload_kind!r} into {dst_port.payload_kind!r}",
                           node=link.target.node, port=link.target.port)
                )
        if dst_port is not None:
            key = (link.target.node, link.target.port)
            if key in incoming_seen:
                findings.append(
                    _error("DUPLICATE_INPUT_LINK",
                           f"in-port {link.target.node}.{link.target.port} has more than one producer",
                           node=link.target.node, port=link.target.port)
                )
            incoming_seen.add(key)

    if len(seen_nodes) == len(wf.nodes):
        if _find_cycle_nodes(wf.node_ids(), _valid_link_edges(wf)):
            findings.append(_error("CYCLE", "link graph contains a cycle"))
    return findings


def _require_valid(wf: Workflow) -> None:
    findings = validate_workflow(wf)
    errors = [f for f in findings if f.severity == "error"]
    if errors:
        raise InvalidWorkflowError(
            f"workflow {wf.id!r} is invalid: {errors[0].message}",
            details=[f.to_dict() for f in errors],
        )


def predecessors(wf: Workflow) -> dict[str, set[str]]:
    preds: dict[str, set[str]] = {n.id: set() for n in wf.nodes}
    for link in wf.links:
        preds[link.target.node].add(link.source.node)
    return preds


def topo_layers(wf: Workflow) -> list[list[str]]:
    """Group nodes by longest incoming path length; layers sorted by id."""
    _require_valid(wf)
    preds = predecessors(wf)
    depth: dict[str, int] = {}

    def node_depth(node_id: str) -> int:
        cached = depth.get(node_id)
        if cached is not None:
            return cached
        parents = preds[node_id]
        value = 0 if not parents else 1 + max(node_depth(p) for p in parents)
        depth[node_id] = value
        return value

    for node in wf.nodes:
        node_depth(node.id)
    if not depth:
        return []
    layers: list[list[str]] = [[] for _ in range(max(depth.values()) + 1)]
    for node_id in sorted(depth):
        layers[depth[node_id]].append(node_id)
    return layers


def derive_subset(wf: Workflow, keep: Iterable[str]) -> Workflow:
    """Induced subgraph on the kept nodes; node definitions are preserved.

    Fails if a kept node's in-port was fed by a dropped node, naming the
    orphaned in-port.
    """
    kept = set(keep)
    node_ids = set(wf.node_ids())
    unknown = sorted(kept - node_ids)
    if unknown:
        raise UnknownNodeError(f"unknown node(s): {', '.join(unknown)}", details=unknown)
    orphaned = sorted(
        f"{link.target.node}.{link.target.port}"
        for link in wf.links
        if link.target.node in kept and link.source.node not in kept
    )
    if orphaned:
        raise BrokenDependencyError(
            f"dropped producers feed kept in-port(s): {', '.join(orphaned)}",
            details=orphaned,
        )
    nodes = tuple(n for n in wf.nodes if n.id in kept)
    links = tuple(
        l for l in wf.links if l.source.node in kept and l.target.node in kept
    )
    return replace(wf, nodes=nodes, links=links)


def _with_node(wf: Workflow, node_id: str, updated: CrateNode) -> Workflow:
    if wf.node(node_id) is None:
        raise UnknownNodeError(f"unknown node {node_id!r}")
    nodes = tuple(updated if n.id == node_id else n for n in wf.nodes)
    return replace(wf, nodes=nodes)


def set_parameters(wf: Workflow, node_id: str, parameters: Mapping[str, str]) -> Workflow:
    node = wf.node(node_id)
    if node is None:
        raise UnknownNodeError(f"unknown node {node_id!r}")
    return _with_node(wf, node_id, replace(node, parameters=dict(parameters)))


def attach_script(wf: Workflow, node_id: str, script: ScriptBinding | None) -> Workflow:
    node = wf.node(node_id)
    if node is None:
        raise UnknownNodeError(f"unknown node {node_id!r}")
    return _with_node(wf, node_id, replace(node, script=script))


KNOWN_WORKFLOW_KEYS = frozenset({"id", "title", "nodes", "links", "owning_module"})


def _port_list_to_dicts(ports: tuple[Port, ...]) -> list[dict[str, str]]:
    return [
        {"name": p.name, "payload_kind": p.payload_kind}
        for p in sorted(ports, key=lambda p: p.name)
    ]


def workflow_to_dict(wf: Workflow) -> dict[str, Any]:
    """Canonical JSON object: nodes sorted by id, links sorted by endpoints."""
    nodes = []
    for node in sorted(wf.nodes, key=lambda n: n.id):
        entry: dict[str, Any] = {
            "id": node.id,
            "tool": node.tool,
            "in_ports": _port_list_to_dicts(node.in_ports),
            "out_ports": _port_list_to_dicts(node.out_ports),
            "parameters": dict(node.parameters),
        }
        if node.script is not None:
            entry["script"] = {"content": node.script.content, "role": node.script.role.value}
        nodes.append(entry)
    links = sorted(
        (
            {
                "from": {"node": l.source.node, "port": l.source.port},
                "to": {"node": l.target.node, "port": l.target.port},
            }
            for l in wf.links
        ),
        key=lambda d: (d["from"]["node"], d["from"]["port"], d["to"]["node"], d["to"]["port"]),
    )
    payload: dict[str, Any] = {"id": wf.id, "title": wf.title, "nodes": nodes, "links": links}
    if wf.owning_module is not None:
        payload["owning_module"] = wf.owning_module
    for key, value in wf.extra.items():
        if key not in KNOWN_WORKFLOW_KEYS:
            payload[key] = value
    return payload


def _parse_ports(raw: Any, direction: PortDirection, node_id: str) -> tuple[Port, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise MalformedWorkflowError(f"ports of node {node_id!r} must be a list")
    ports = []
    for item in raw:
        if (
            not isinstance(item, Mapping)
            or not isinstance(item.get("name"), str)
            or not isinstance(item.get("payload_kind"), str)
        ):
            raise MalformedWorkflowError(
                f"port entries of node {node_id!r} need string name and payload_kind"
            )
        ports.append(Port(item["name"], direction, item["payload_kind"]))
    return tuple(ports)


def _parse_node(raw: Any) -> CrateNode:
    if not isinstance(raw, Mapping):
        raise MalformedWorkflowError("node entries must be objects")
    node_id = raw.get("id")
    tool = raw.get("tool")
    if not isinstance(node_id, str) or not isinstance(tool, str):
        raise MalformedWorkflowError("node id and tool must be strings")
    params_raw = raw.get("parameters", {})
    if not isinstance(params_raw, Mapping) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in params_raw.items()
    ):
        raise MalformedWorkflowError(f"parameters of node {node_id!r} must map strings to strings")
    script = None
    script_raw = raw.get("script")
    if script_raw is not None:
        if not isinstance(script_raw, Mapping) or not isinstance(script_raw.get("content"), str):
            raise MalformedWorkflowError(f"script of node {node_id!r} must carry string content")
        role_raw = script_raw.get("role", ScriptRole.INPUT.value)
        try:
            role = ScriptRole(role_raw)
        except ValueError as exc:
            raise MalformedWorkflowError(f"unknown script role {role_raw!r}") from exc
        script = ScriptBinding(script_raw["content"], role)
    return CrateNode(
        id=node_id,
        tool=tool,
        in_ports=_parse_ports(raw.get("in_ports"), PortDirection.IN, node_id),
        out_ports=_parse_ports(raw.get("out_ports"), PortDirection.OUT, node_id),
        script=script,
        parameters=dict(params_raw),
    )


def _parse_endpoint(raw: Any, side: str) -> Endpoint:
    if (
        not isinstance(raw, Mapping)
        or not isinstance(raw.get("node"), str)
        or not isinstance(raw.get("port"), str)
    ):
        raise MalformedWorkflowError(f"link endpoint {side!r} needs string node and port")
    return Endpoint(raw["node"], raw["port"])


def workflow_from_dict(data: Mapping[str, Any]) -> Workflow:
    if not isinstance(data, Mapping):
        raise MalformedWorkflowError("workflow must be a JSON object")
    wf_id = data.get("id")
    title = data.get("title", "")
    if not isinstance(wf_id, str) or not isinstance(title, str):
        raise MalformedWorkflowError("workflow id and title must be strings")
    nodes_raw = data.get("nodes", [])
    links_raw = data.get("links", [])
    if not isinstance(nodes_raw, list) or not isinstance(links_raw, list):
        raise MalformedWorkflowError("nodes and links must be lists")
    owning = data.get("owning_module")
    if owning is not None and not isinstance(owning, str):
        raise MalformedWorkflowError("owning_module must be a string")
    links = []
    for raw in links_raw:
        if not isinstance(raw, Mapping):
            raise MalformedWorkflowError("link entries must be objects")
        links.append(Link(_parse_endpoint(raw.get("from"), "from"), _parse_endpoint(raw.get("to"), "to")))
    extra = {k: v for k, v in data.items() if k not in KNOWN_WORKFLOW_KEYS}
    return Workflow(
        id=wf_id,
        title=title,
        nodes=tuple(_parse_node(raw) for raw in nodes_raw),
        links=tuple(links),
        owning_module=owning,
        extra=extra,
    )


def serialize_workflow(wf: Workflow) -> bytes:
    return canonical.dump_bytes(workflow_to_dict(wf))


def deserialize_workflow(data: bytes | str) -> Workflow:
    try:
        parsed = canonical.loads(data)
    except ValueError as exc:
        raise MalformedWorkflowError(f"not valid JSON: {exc}") from exc
    return workflow_from_dict(parsed)


def structurally_equal(a: Workflow, b: Workflow) -> bool:
    """Equality of nodes and links, ignoring workflow identity fields."""

    def shape(wf: Workflow) -> dict[str, Any]:
        payload = workflow_to_dict(wf)
        payload.pop("id", None)
        payload.pop("title", None)
        payload.pop("owning_module", None)
        return payload

    return shape(a) == shape(b)
