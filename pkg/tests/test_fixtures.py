from __future__ import annotations

from coursegate import canonical
from coursegate.curriculum import build_graph, check_track, classify_scale
from coursegate.fixtures import (
    DEFORMATION_MODULE_ID,
    catalog_archive,
    catalog_modules,
    catalog_workflows,
    deformation_module,
    fixture_bytes,
    pipeline_md_diffraction,
    pipeline_md_plot,
    pipeline_md_video,
    sample_pool,
)
from coursegate.meta import module_from_dict
from coursegate.registry import Registry, validate_meta
from coursegate.workflow import serialize_workflow, validate_workflow


def test_catalog_archive_is_canonical_bytes():
    data = catalog_archive()
    assert canonical.dump_bytes(canonical.loads(data)) == data


def test_catalog_modules_all_validate_cleanly():
    modules = catalog_modules()
    known = {m.id for m in modules}
    for module in modules:
        report = validate_meta(module, known)
        assert report.ok, (module.id, [f.to_dict() for f in report.findings])


def test_catalog_scales_match_durations():
    for module in catalog_modules():
        assert classify_scale(module.duration) is module.scale


def test_catalog_graph_has_no_external_refs():
    graph = build_graph(catalog_modules())
    assert graph.external == frozenset()
    assert check_track.__name__  # imported for the graph smoke test


def test_pipeline_files_match_embedded_workflows():
    by_id = {wf.id: wf for wf in catalog_workflows()}
    assert by_id["md-plot"] == pipeline_md_plot()
    assert by_id["md-video"] == pipeline_md_video()
    assert by_id["md-diffraction"] == pipeline_md_diffraction()


def test_pipelines_validate_and_belong_to_the_deformation_module():
    for wf in (pipeline_md_plot(), pipeline_md_video(), pipeline_md_diffraction()):
        assert validate_workflow(wf) == []
        assert wf.owning_module == DEFORMATION_MODULE_ID


def test_pipeline_files_are_canonical():
    for name in ("md-plot", "md-video", "md-diffraction"):
        data = fixture_bytes(f"{name}.workflow.json")
        from coursegate.workflow import deserialize_workflow

        assert serialize_workflow(deserialize_workflow(data)) == data


def test_module_fixture_file_matches_catalog_record():
    raw = canonical.loads(fixture_bytes("md-deformation-module.json"))
    assert module_from_dict(raw, derive_id=False) == deformation_module()


def test_catalog_imports_into_fresh_registry():
    registry = Registry()
    report = registry.import_archive(catalog_archive())
    assert report.added == len(catalog_modules())
    assert report.added_workflows == 3
    assert report.skipped == ()
    assert report.external_refs == ()


def test_sample_pool_matches_plan_example():
    pool = sample_pool()
    assert [r.id for r in pool] == ["cluster-1", "pc-1"]
