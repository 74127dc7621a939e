"""Course-module registry, curriculum planner, and crate-workflow executor."""

from .curriculum import (
    CourseAggregate,
    CourseTrack,
    PrereqGraph,
    TrackConstraints,
    aggregate,
    build_graph,
    check_track,
    classify_scale,
    graph_to_dot,
    list_next,
    plan_track,
)
from .errors import CourseGateError
from .executor import (
    ArtifactStore,
    ExecutionPlan,
    ExecutionRecord,
    ExecutorService,
    Policy,
    Resource,
    ResourceKind,
    execute,
    plan_execution,
)
from .meta import Duration, ModuleKind, ModuleMeta, RatingAggregate, ScaleLevel, WorkloadRange
from .registry import ImportReport, Registry, SearchQuery, ValidationReport, validate_meta
from .workflow import (
    CrateNode,
    Link,
    Port,
    ScriptBinding,
    Workflow,
    attach_script,
    derive_subset,
    deserialize_workflow,
    serialize_workflow,
    set_parameters,
    topo_layers,
    validate_workflow,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactStore",
    "CourseAggregate",
    "CourseGateError",
    "CourseTrack",
    "CrateNode",
    "Duration",
    "ExecutionPlan",
    "ExecutionRecord",
    "ExecutorService",
    "ImportReport",
    "Link",
    "ModuleKind",
    "ModuleMeta",
    "Policy",
    "Port",
    "PrereqGraph",
    "RatingAggregate",
    "Registry",
    "Resource",
    "ResourceKind",
    "ScaleLevel",
    "ScriptBinding",
    "SearchQuery",
    "TrackConstraints",
    "ValidationReport",
    "Workflow",
    "WorkloadRange",
    "aggregate",
    "attach_script",
    "build_graph",
    "check_track",
    "classify_scale",
    "derive_subset",
    "deserialize_workflow",
    "execute",
    "graph_to_dot",
    "list_next",
    "plan_execution",
    "plan_track",
    "serialize_workflow",
    "set_parameters",
    "topo_layers",
    "validate_meta",
    "validate_workflow",
]
