from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coursegate import canonical
from coursegate.errors import (
    DuplicateIdError,
    MalformedArchiveError,
    StarsOutOfRangeError,
    UnknownModuleError,
    UnsupportedVersionError,
    ValidationFailedError,
)
from coursegate.fixtures import DEFORMATION_MODULE_ID, catalog_archive
from coursegate.meta import ScaleLevel
from coursegate.registry import Registry, SearchQuery
from helpers import make_module


def seeded_registry() -> Registry:
    registry = Registry(created_at="2026-02-01T00:00:00Z")
    registry.import_archive(catalog_archive())
    return registry


def test_register_and_get():
    registry = Registry()
    module = make_module("fresh-module", keywords=("fresh",))
    assert registry.register_module(module) == "fresh-module"
    assert registry.get_module("fresh-module") == module


def test_register_duplicate_rejected():
    registry = Registry()
    module = make_module("twice")
    registry.register_module(module)
    with pytest.raises(DuplicateIdError):
        registry.register_module(module)


def test_register_invalid_rejected_with_report():
    registry = Registry()
    module = make_module("bad", languages=("Ukrainian",))
    with pytest.raises(ValidationFailedError) as exc_info:
        registry.register_module(module)
    findings = exc_info.value.details["findings"]
    assert any(f["code"] == "MISSING_ENGLISH" for f in findings)
    with pytest.raises(UnknownModuleError):
        registry.get_module("bad")


def test_update_is_the_explicit_overwrite_path():
    registry = Registry()
    registry.register_module(make_module("mod", complexity=1))
    registry.update_module(make_module("mod", complexity=3))
    assert registry.get_module("mod").complexity == 3
    with pytest.raises(UnknownModuleError):
        registry.update_module(make_module("other"))


def test_rating_single_vote():
    registry = Registry()
    registry.register_module(make_module("rated"))
    aggregate = registry.rate_module("rated", 4)
    assert (aggregate.count, aggregate.sum, aggregate.mean) == (1, 4, 4)


def test_rating_sequence_mean():
    registry = Registry()
    registry.register_module(make_module("rated"))
    registry.rate_module("rated", 3)
    aggregate = registry.rate_module("rated", 5)
    assert aggregate.mean == 4


@pytest.mark.parametrize("stars", [0, 6, -1, 2.5, True])
def test_rating_out_of_range(stars):
    registry = Registry()
    registry.register_module(make_module("rated"))
    with pytest.raises(StarsOutOfRangeError):
        registry.rate_module("rated", stars)


def test_rating_unknown_module():
    with pytest.raises(UnknownModuleError):
        Registry().rate_module("ghost", 3)


def test_rating_property_over_vote_sequences():
    rng = random.Random(7)
    registry = Registry()
    registry.register_module(make_module("rated"))
    votes = [rng.randint(1, 5) for _ in range(100)]
    for v in votes:
        aggregate = registry.rate_module("rated", v)
    assert aggregate.count == len(votes)
    assert aggregate.sum == sum(votes)
    assert 1 <= aggregate.mean <= 5


def test_search_keyword_matches_sample_catalog():
    registry = seeded_registry()
    results = registry.search_modules(SearchQuery(keywords=("MD",)))
    assert DEFORMATION_MODULE_ID in [m.id for m in results]


def test_search_empty_query_returns_all():
    registry = seeded_registry()
    assert len(registry.search_modules()) == len(registry.list_modules())


def test_search_category_prefix():
    registry = seeded_registry()
    results = registry.search_modules(SearchQuery(category_prefix="Physics"))
    assert DEFORMATION_MODULE_ID in [m.id for m in results]
    exact = registry.search_modules(
        SearchQuery(category_prefix="Physics:Computational Physics")
    )
    assert DEFORMATION_MODULE_ID in [m.id for m in exact]
    none = registry.search_modules(SearchQuery(category_prefix="Phys"))
    assert none == []


def test_search_keyword_is_case_insensitive_and_covers_title_tokens():
    registry = seeded_registry()
    by_keyword = registry.search_modules(SearchQuery(keywords=("md",)))
    assert DEFORMATION_MODULE_ID in [m.id for m in by_keyword]
    by_title_token = registry.search_modules(SearchQuery(keywords=("deformation",)))
    assert [m.id for m in by_title_token] == [DEFORMATION_MODULE_ID]


def test_search_conjunctive_filters_narrow():
    registry = seeded_registry()
    wide = registry.search_modules(SearchQuery(keywords=("MD",)))
    narrow = registry.search_modules(
        SearchQuery(keywords=("MD",), scale=ScaleLevel.MINI, max_complexity=4)
    )
    assert {m.id for m in narrow} <= {m.id for m in wide}


def test_search_orders_by_mean_then_id():
    registry = Registry()
    registry.register_module(make_module("a-low", rating=(2, 4)))
    registry.register_module(make_module("b-high", rating=(2, 10)))
    registry.register_module(make_module("c-unrated"))
    registry.register_module(make_module("a-unrated"))
    ids = [m.id for m in registry.search_modules()]
    assert ids == ["b-high", "a-low", "a-unrated", "c-unrated"]


def test_export_empty_registry():
    registry = Registry(created_at="2026-02-01T00:00:00Z")
    payload = canonical.loads(registry.export_archive())
    assert payload["modules"] == [] and payload["workflows"] == []
    assert payload["format_version"] == "1.0"


def test_export_is_deterministic_and_insertion_order_free():
    first = Registry(created_at="2026-02-01T00:00:00Z")
    second = Registry(created_at="2026-02-01T00:00:00Z")
    modules = [make_module(f"mod-{i}", keywords=(f"k{i}",)) for i in range(5)]
    for m in modules:
        first.register_module(m)
    for m in reversed(modules):
        second.register_module(m)
    assert first.export_archive() == second.export_archive()
    assert first.export_archive() == first.export_archive()


def test_round_trip_through_fresh_registry_is_byte_identical():
    registry = seeded_registry()
    exported = registry.export_archive()
    fresh = Registry()
    report = fresh.import_archive(exported)
    assert report.added == len(registry.list_modules())
    assert report.skipped == ()
    assert fresh.export_archive() == exported


def test_reimport_skips_everything_as_duplicates():
    registry = seeded_registry()
    report = registry.import_archive(registry.export_archive())
    assert report.added == 0
    assert report.added_workflows == 0
    assert report.skipped and all(reason == "DUPLICATE_ID" for _, reason in report.skipped)


def test_import_records_external_refs():
    archive_payload = canonical.loads(catalog_archive())
    archive_payload["modules"] = [
        m
        for m in archive_payload["modules"]
        if m["id"] != "md-simulation-of-non-metal-solids"
    ]
    archive_payload["workflows"] = []
    registry = Registry()
    report = registry.import_archive(canonical.dump_bytes(archive_payload))
    assert "md-simulation-of-non-metal-solids" in report.external_refs


def test_import_rejects_garbage_and_versions():
    registry = Registry()
    with pytest.raises(MalformedArchiveError):
        registry.import_archive(b"{not json")
    with pytest.raises(MalformedArchiveError):
        registry.import_archive(b"[]")
    with pytest.raises(UnsupportedVersionError):
        registry.import_archive(b'{"format_version":"9.9","modules":[]}')


def test_import_skips_invalid_modules_but_keeps_valid():
    good = make_module("good-module")
    from coursegate.meta import module_to_dict

    bad_payload = module_to_dict(make_module("bad-module", languages=("Ukrainian",)))
    archive = {
        "format_version": "1.0",
        "created_at": "2026-02-01T00:00:00Z",
        "modules": [module_to_dict(good), bad_payload],
        "workflows": [],
    }
    registry = Registry()
    report = registry.import_archive(canonical.dump_bytes(archive))
    assert report.added == 1
    assert ("bad-module", "VALIDATION_FAILED") in report.skipped


def test_registered_modules_always_validate_cleanly():
    registry = seeded_registry()
    known = registry.module_ids()
    from coursegate.registry import validate_meta

    for meta in registry.list_modules():
        assert not validate_meta(meta, known).errors


_slug = st.from_regex(r"[a-z0-9][a-z0-9-]{0,20}", fullmatch=True)


@st.composite
def _random_catalog(draw):
    ids = draw(st.lists(_slug, min_size=1, max_size=6, unique=True))
    modules = []
    for module_id in ids:
        refs = draw(
            st.lists(st.sampled_from(ids + ["external-thing"]), max_size=2)
        )
        refs = tuple(r for r in refs if r != module_id)
        wl_min = draw(st.integers(min_value=1, max_value=6))
        modules.append(
            make_module(
                module_id,
                previous=refs,
                minutes=draw(st.integers(min_value=1, max_value=300_000)),
                workload=(wl_min, wl_min + draw(st.integers(min_value=0, max_value=4))),
                complexity=draw(st.integers(min_value=1, max_value=5)),
                scale=draw(st.sampled_from(list(ScaleLevel))),
                keywords=tuple(draw(st.lists(st.sampled_from(["md", "r", "xrd"]), max_size=2))),
                rating=(2, draw(st.integers(min_value=2, max_value=10))),
                price=str(draw(st.decimals(min_value=0, max_value=100, places=2))),
            )
        )
    return modules


@given(_random_catalog())
@settings(max_examples=40, deadline=None)
def test_round_trip_property(modules):
    registry = Registry(created_at="2026-02-01T00:00:00Z")
    for module in modules:
        registry.register_module(module)
    exported = registry.export_archive()
    fresh = Registry()
    fresh.import_archive(exported)
    assert fresh.export_archive() == exported
