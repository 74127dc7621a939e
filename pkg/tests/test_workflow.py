from __future__ import annotations

import random

import pytest

from coursegate.errors import (
    BrokenDependencyError,
    InvalidWorkflowError,
    MalformedWorkflowError,
    UnknownNodeError,
)
from coursegate.fixtures import (
    pipeline_md_diffraction,
    pipeline_md_plot,
    pipeline_md_video,
)
from coursegate.workflow import (
    CrateNode,
    Endpoint,
    Link,
    Port,
    PortDirection,
    ScriptBinding,
    Workflow,
    attach_script,
    derive_subset,
    deserialize_workflow,
    serialize_workflow,
    set_parameters,
    structurally_equal,
    topo_layers,
    validate_workflow,
    workflow_to_dict,
)

IN = PortDirection.IN
OUT = PortDirection.OUT


def node(node_id: str, tool: str = "lammps-stub", ins=(), outs=(), **kw) -> CrateNode:
    return CrateNode(
        id=node_id,
        tool=tool,
        in_ports=tuple(Port(n, IN, k) for n, k in ins),
        out_ports=tuple(Port(n, OUT, k) for n, k in outs),
        **kw,
    )


def link(a, ap, b, bp) -> Link:
    return Link(Endpoint(a, ap), Endpoint(b, bp))


def chain_workflow() -> Workflow:
    return Workflow(
        id="chain",
        title="two-step chain",
        nodes=(
            node("first", outs=(("out", "trajectory-table"),)),
            node("second", tool="r-stub", ins=(("table", "trajectory-table"),),
                 outs=(("plot", "plot-data"),)),
        ),
        links=(link("first", "out", "second", "table"),),
    )


def error_codes(findings):
    return [f.code for f in findings if f.severity == "error"]


def test_sample_pipelines_validate_cleanly():
    for wf in (pipeline_md_plot(), pipeline_md_video(), pipeline_md_diffraction()):
        assert validate_workflow(wf) == []


def test_kind_mismatch_detected():
    wf = Workflow(
        id="bad",
        title="kind clash",
        nodes=(
            node("a", outs=(("out", "video"),)),
            node("b", ins=(("hist", "histogram"),)),
        ),
        links=(link("a", "out", "b", "hist"),),
    )
    assert error_codes(validate_workflow(wf)) == ["PORT_KIND_MISMATCH"]


def test_self_link_is_a_cycle():
    wf = Workflow(
        id="selfie",
        title="self loop",
        nodes=(
            node("a", ins=(("in", "trajectory-table"),), outs=(("out", "trajectory-table"),)),
        ),
        links=(link("a", "out", "a", "in"),),
    )
    assert "CYCLE" in error_codes(validate_workflow(wf))


def test_dangling_endpoint_detected():
    wf = Workflow(
        id="dangle",
        title="missing target",
        nodes=(node("a", outs=(("out", "video"),)),),
        links=(link("a", "out", "ghost", "in"),),
    )
    assert "DANGLING_ENDPOINT" in error_codes(validate_workflow(wf))


def test_duplicate_input_link_detected():
    wf = Workflow(
        id="fanin",
        title="two producers",
        nodes=(
            node("a", outs=(("out", "video"),)),
            node("b", outs=(("out", "video"),)),
            node("c", ins=(("in", "video"),)),
        ),
        links=(link("a", "out", "c", "in"), link("b", "out", "c", "in")),
    )
    assert "DUPLICATE_INPUT_LINK" in error_codes(validate_workflow(wf))


def test_unknown_tool_is_only_a_warning():
    wf = Workflow(id="foreign", title="foreign tool", nodes=(node("a", tool="gaussian"),))
    findings = validate_workflow(wf)
    assert [f.severity for f in findings] == ["warning"]
    assert findings[0].code == "UNKNOWN_TOOL"
    assert validate_workflow(wf, known_tools={"gaussian"}) == []


def test_duplicate_node_detected():
    wf = Workflow(id="dup", title="dup", nodes=(node("a"), node("a")))
    assert "DUPLICATE_NODE" in error_codes(validate_workflow(wf))


def test_topo_layers_chain():
    assert topo_layers(chain_workflow()) == [["first"], ["second"]]


def test_topo_layers_video_pipeline():
    assert topo_layers(pipeline_md_video()) == [["lammps"], ["atomeye", "r"], ["ffmpeg"]]


def test_topo_layers_singleton():
    wf = Workflow(id="solo", title="one node", nodes=(node("only"),))
    assert topo_layers(wf) == [["only"]]


def test_topo_layers_rejects_invalid():
    wf = Workflow(id="dup", title="dup", nodes=(node("a"), node("a")))
    with pytest.raises(InvalidWorkflowError):
        topo_layers(wf)


def test_subset_of_diffraction_pipeline_is_plot_pipeline():
    subset = derive_subset(pipeline_md_diffraction(), {"lammps", "r"})
    assert structurally_equal(subset, pipeline_md_plot())


def test_subset_keeping_all_nodes_is_identity():
    wf = pipeline_md_diffraction()
    subset = derive_subset(wf, set(wf.node_ids()))
    assert subset == wf


def test_subset_orphaned_input_rejected():
    with pytest.raises(BrokenDependencyError) as exc_info:
        derive_subset(pipeline_md_plot(), {"r"})
    assert "r.table" in exc_info.value.details


def test_subset_unknown_node_rejected():
    with pytest.raises(UnknownNodeError):
        derive_subset(pipeline_md_plot(), {"lammps", "ghost"})


def test_subsets_never_introduce_cycles():
    rng = random.Random(5)
    wf = pipeline_md_diffraction()
    all_ids = list(wf.node_ids())
    for _ in range(20):
        keep = {n for n in all_ids if rng.random() < 0.7}
        try:
            subset = derive_subset(wf, keep)
        except BrokenDependencyError:
            continue
        assert "CYCLE" not in error_codes(validate_workflow(subset))


def test_set_parameters_returns_updated_copy():
    wf = pipeline_md_plot()
    updated = set_parameters(wf, "lammps", {"strain_rate": "0.01", "steps": "10"})
    assert updated.node("lammps").parameters == {"strain_rate": "0.01", "steps": "10"}
    assert wf.node("lammps").parameters["steps"] == "400"
    assert updated.node("r") == wf.node("r")
    assert updated.links == wf.links


def test_set_parameters_empty_map():
    wf = set_parameters(pipeline_md_plot(), "lammps", {})
    assert wf.node("lammps").parameters == {}


def test_set_parameters_unknown_node():
    with pytest.raises(UnknownNodeError):
        set_parameters(pipeline_md_plot(), "ghost", {})


def test_attach_script_is_idempotent():
    script = ScriptBinding("select: step,total_energy\n")
    wf1 = attach_script(pipeline_md_plot(), "r", script)
    wf2 = attach_script(wf1, "r", script)
    assert wf1 == wf2
    assert wf1.node("r").script == script


def test_serialization_round_trip_is_byte_stable():
    for wf in (pipeline_md_plot(), pipeline_md_video(), pipeline_md_diffraction()):
        data = serialize_workflow(wf)
        again = deserialize_workflow(data)
        assert serialize_workflow(again) == data
        assert structurally_equal(again, wf)


def test_deserialize_rejects_truncated_bytes():
    data = serialize_workflow(pipeline_md_plot())
    with pytest.raises(MalformedWorkflowError):
        deserialize_workflow(data[: len(data) // 2])


def test_deserialize_rejects_wrong_shapes():
    with pytest.raises(MalformedWorkflowError):
        deserialize_workflow(b'{"id": 3}')
    with pytest.raises(MalformedWorkflowError):
        deserialize_workflow(b'{"id":"x","title":"y","nodes":[{"id":"n"}]}')


def test_empty_workflow_round_trips():
    wf = Workflow(id="empty", title="nothing")
    assert deserialize_workflow(serialize_workflow(wf)) == wf


def test_workflow_extra_fields_preserved():
    data = workflow_to_dict(pipeline_md_plot())
    data["x-origin"] = "elsewhere"
    wf = deserialize_workflow(serialize_workflow(deserialize_workflow(
        __import__("json").dumps(data).encode()
    )))
    assert wf.extra == {"x-origin": "elsewhere"}


def random_dag_workflow(rng: random.Random, max_nodes: int = 12) -> Workflow:
    size = rng.randint(1, max_nodes)
    nodes = []
    links = []
    for i in range(size):
        ins = []
        for j in range(i):
            if rng.random() < 0.3:
                port_name = f"in{j}"
                ins.append((port_name, "blob"))
                links.append(link(f"n{j:02d}", "out", f"n{i:02d}", port_name))
        nodes.append(
            node(
                f"n{i:02d}",
                tool="hash-stub",
                ins=tuple(ins),
                outs=(("out", "blob"),),
                parameters={"steps": str(rng.randint(1, 5))},
            )
        )
    return Workflow(id="random", title="random dag", nodes=tuple(nodes), links=tuple(links))


def test_random_workflows_round_trip():
    rng = random.Random(99)
    for _ in range(50):
        wf = random_dag_workflow(rng)
        assert "CYCLE" not in error_codes(validate_workflow(wf))
        data = serialize_workflow(wf)
        again = deserialize_workflow(data)
        assert serialize_workflow(again) == data
        assert structurally_equal(again, wf)


def test_every_accepted_workflow_has_a_topological_order():
    # layer concatenation places every node after all of its predecessors
    rng = random.Random(17)
    for _ in range(30):
        wf = random_dag_workflow(rng)
        assert validate_workflow(wf, known_tools={"hash-stub"}) == []
        order = [n for layer in topo_layers(wf) for n in layer]
        assert sorted(order) == sorted(wf.node_ids())
        position = {n: i for i, n in enumerate(order)}
        for lk in wf.links:
            assert position[lk.source.node] < position[lk.target.node]
        assert topo_layers(wf) == topo_layers(wf)
