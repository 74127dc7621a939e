"""Bundled demo catalog and pipeline fixtures.

The JSON files under fixtures/ are the single source of truth shared by
tests, documentation, and the CLI examples. The catalog archive carries a
small materials-science module set plus the three pipeline variants built
from the same crate definitions: simulate-and-plot, plus visualization and
video, plus a diffraction-style histogram.
"""

from __future__ import annotations

from importlib import resources

from . import canonical
from .executor import Resource, pool_from_json
from .meta import ModuleMeta, module_from_dict
from .workflow import Workflow, deserialize_workflow

DEFORMATION_MODULE_ID = "md-simulation-of-metal-nanocrystals-under-deformation"
INTRO_MODULE_ID = "md-simulation-of-metal-nanocrystals"

PLOT_PIPELINE_ID = "md-plot"
VIDEO_PIPELINE_ID = "md-video"
DIFFRACTION_PIPELINE_ID = "md-diffraction"


def fixture_bytes(name: str) -> bytes:
    return (resources.files(__package__) / "fixtures" / name).read_bytes()


def catalog_archive() -> bytes:
    return fixture_bytes("catalog.json")


def catalog_modules() -> list[ModuleMeta]:
    payload = canonical.loads(catalog_archive())
    return [module_from_dict(raw, derive_id=False) for raw in payload["modules"]]


def catalog_workflows() -> list[Workflow]:
    payload = canonical.loads(catalog_archive())
    from .workflow import workflow_from_dict

    return [workflow_from_dict(raw) for raw in payload["workflows"]]


def deformation_module() -> ModuleMeta:
    return next(m for m in catalog_modules() if m.id == DEFORMATION_MODULE_ID)


def pipeline_md_plot() -> Workflow:
    return deserialize_workflow(fixture_bytes("md-plot.workflow.json"))


def pipeline_md_video() -> Workflow:
    return deserialize_workflow(fixture_bytes("md-video.workflow.json"))


def pipeline_md_diffraction() -> Workflow:
    return deserialize_workflow(fixture_bytes("md-diffraction.workflow.json"))


def sample_pool() -> list[Resource]:
    return pool_from_json(fixture_bytes("pool.json"))
