"""Acceptance gate: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

from __future__ import annotations

import random
import time
from contextlib import contextmanager
from fractions import Fraction

from fastapi.testclient import TestClient

from coursegate.adapters import decode_positions, simulate_chain
from coursegate.curriculum import aggregate, build_graph, check_track, classify_scale, plan_track
from coursegate.errors import UnresolvedPrereqError, UnsatisfiableError
from coursegate.executor import ArtifactStore, Policy, execute, plan_execution
from coursegate.fixtures import (
    DEFORMATION_MODULE_ID,
    INTRO_MODULE_ID,
    catalog_archive,
    catalog_modules,
    pipeline_md_diffraction,
    pipeline_md_plot,
    pipeline_md_video,
)
from coursegate.meta import (
    MINUTES_PER_DAY,
    MINUTES_PER_HOUR,
    MINUTES_PER_MONTH,
    Duration,
    ScaleLevel,
)
from coursegate.registry import Registry, validate_meta
from coursegate.service import create_app
from coursegate.workflow import derive_subset, structurally_equal, topo_layers, validate_workflow

from helpers import make_module
from planner_oracle import best_track_by_enumeration, module_cost
from test_executor import TEST_ADAPTERS, check_record_invariants, pc, plan_links
from test_planner import random_catalog
from test_workflow import random_dag_workflow
from verlet_oracle import simulate_chain_reference


@contextmanager
def criterion(name: str, budget_seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    print(f"PASS {name} ({elapsed:.2f}s, budget {budget_seconds}s)")
    assert elapsed < budget_seconds, f"{name} exceeded its {budget_seconds}s budget"


def test_criterion_sample_module_fidelity():
    with criterion("sample-module fidelity", 1.0):
        modules = catalog_modules()
        known = {m.id for m in modules}
        deformation = next(m for m in modules if m.id == DEFORMATION_MODULE_ID)
        report = validate_meta(deformation, known)
        assert report.errors == ()
        assert deformation.scale is ScaleLevel.MINI
        assert classify_scale(Duration.weeks(2)) is ScaleLevel.MINI
        totals = aggregate(
            __import__("coursegate.curriculum", fromlist=["CourseTrack"]).CourseTrack(
                "t", "t", (DEFORMATION_MODULE_ID,)
            ),
            {m.id: m for m in modules},
        )
        assert totals.workload_min_hours == 16
        assert totals.workload_max_hours == 20


def test_criterion_scale_classification_table():
    with criterion("scale classification", 1.0):
        assert classify_scale(10) is ScaleLevel.NANO
        assert classify_scale(30) is ScaleLevel.NANO
        assert classify_scale(1 * MINUTES_PER_HOUR) is ScaleLevel.MICRO
        assert classify_scale(8 * MINUTES_PER_HOUR) is ScaleLevel.MICRO
        assert classify_scale(1 * MINUTES_PER_DAY) is ScaleLevel.MINI
        assert classify_scale(14 * MINUTES_PER_DAY) is ScaleLevel.MINI
        assert classify_scale(1 * MINUTES_PER_MONTH) is ScaleLevel.MACRO
        assert classify_scale(6 * MINUTES_PER_MONTH) is ScaleLevel.MACRO

        rng = random.Random(123)
        samples = sorted(rng.randint(1, 500_000) for _ in range(10_000))
        previous_rank = 0
        for minutes in samples:
            rank = classify_scale(minutes).rank
            assert rank >= previous_rank
            previous_rank = rank


def test_criterion_planner_oracle_equivalence():
    with criterion("planner oracle equivalence (200 random DAGs)", 60.0):
        rng = random.Random(31337)
        agreements = 0
        for _ in range(200):
            size = rng.randint(2, 10)
            modules = random_catalog(rng, size)
            metas = {m.id: m for m in modules}
            graph = build_graph(modules)
            target = rng.choice(sorted(metas))
            oracle = best_track_by_enumeration(target, metas)
            try:
                planned = plan_track(target, graph)
            except (UnsatisfiableError, UnresolvedPrereqError):
                assert oracle is None
                agreements += 1
                continue
            assert oracle is not None
            planned_cost = sum(
                (module_cost(metas[e]) for e in planned.entries), Fraction(0)
            )
            assert planned_cost == oracle[0]
            assert check_track(planned, graph) == []
            agreements += 1
        assert agreements == 200


def test_criterion_pipeline_reproduction():
    with criterion("pipeline fixtures and subsets", 1.0):
        plot = pipeline_md_plot()
        video = pipeline_md_video()
        diffraction = pipeline_md_diffraction()
        for wf in (plot, video, diffraction):
            assert validate_workflow(wf) == []
        assert structurally_equal(derive_subset(diffraction, {"lammps", "r"}), plot)
        assert topo_layers(video) == [["lammps"], ["atomeye", "r"], ["ffmpeg"]]


def test_criterion_executor_determinism_and_safety():
    with criterion("executor determinism and safety (100 runs x {1,4} workers)", 120.0):
        rng = random.Random(777)
        for _ in range(100):
            wf = random_dag_workflow(rng, max_nodes=12)
            pool = [
                pc(f"res-{i}", slots=rng.randint(1, 3), speed=rng.choice(["0.5", "1", "2"]))
                for i in range(rng.randint(1, 4))
            ]
            policy = rng.choice(list(Policy))
            seed = rng.randint(0, 2**63)
            plan = plan_execution(wf, pool, policy)
            artifact_maps = []
            for worker_limit in (1, 4, 4):
                store = ArtifactStore()
                record = execute(
                    wf,
                    plan,
                    seed=seed,
                    adapters=TEST_ADAPTERS,
                    store=store,
                    worker_limit=worker_limit,
                )
                assert record.status.value == "succeeded"
                plan_links[record.run_id] = [
                    (link.source.node, link.target.node) for link in wf.links
                ]
                check_record_invariants(record, plan)
                artifact_maps.append(
                    {
                        (a.node, a.port): store.get_bytes(record.run_id, a.node, a.port)
                        for a in record.artifacts
                    }
                )
            assert artifact_maps[0] == artifact_maps[1] == artifact_maps[2]


def test_criterion_stub_integrator():
    with criterion("harmonic-chain integrator vs brute-force reimplementation", 10.0):
        n, steps, dt, seed = 32, 1000, 0.01, 20260810
        rows = simulate_chain(n, steps, dt, 0.0, 0.1, seed)
        reference = simulate_chain_reference(n, steps, dt, 0.0, 0.1, seed)
        assert len(rows) == steps + 1
        e0 = rows[0].total_energy
        assert e0 > 0
        for row, ref in zip(rows, reference):
            assert abs(row.total_energy - e0) / e0 < 1e-3
            assert abs(row.total_energy - ref.total_energy) < 1e-9
            assert abs(row.mean_force - ref.mean_force) < 1e-9
        # the per-step digest stays faithful to the reference positions
        quantum = 1 / 4096
        final = decode_positions(rows[-1].digest)
        for decoded, exact in zip(final, reference[-1].positions):
            assert abs(decoded - exact) <= quantum / 2 + 1e-12


def test_criterion_round_trips():
    with criterion("archive round trips and service restart durability", 30.0):
        rng = random.Random(90210)
        for _ in range(100):
            registry = Registry(created_at="2026-03-01T00:00:00Z")
            ids = [f"mod-{rng.randint(0, 10**6):06d}-{i}" for i in range(rng.randint(1, 8))]
            for i, module_id in enumerate(ids):
                refs = tuple(
                    rng.choice(ids + ["external-ref"])
                    for _ in range(rng.randint(0, 2))
                )
                registry.register_module(
                    make_module(
                        module_id,
                        previous=tuple(r for r in refs if r != module_id),
                        minutes=rng.randint(1, 300_000),
                        workload=(rng.randint(1, 5), rng.randint(5, 12)),
                        complexity=rng.randint(1, 5),
                        scale=rng.choice(list(ScaleLevel)),
                        rating=(i, i * rng.randint(1, 5)),
                        price=str(rng.randint(0, 500)) + ".50",
                    )
                )
            exported = registry.export_archive()
            fresh = Registry()
            fresh.import_archive(exported)
            assert fresh.export_archive() == exported

        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            data_dir = Path(tmp) / "data"
            with TestClient(create_app(data_dir)) as client:
                client.post("/v1/repo/import", content=catalog_archive())
                client.post(f"/v1/modules/{INTRO_MODULE_ID}/ratings", json={"stars": 4})
                run_id = client.post(
                    "/v1/runs", json={"workflow_id": "md-plot", "seed": 42}
                ).json()["run_id"]
                deadline = time.monotonic() + 20
                while time.monotonic() < deadline:
                    record = client.get(f"/v1/runs/{run_id}").json()
                    if record["status"] != "running":
                        break
                    time.sleep(0.02)
                assert record["status"] == "succeeded"

                def snapshot(c):
                    return {
                        "modules": c.get("/v1/modules").json(),
                        "search": c.get("/v1/modules/search", params={"keyword": "MD"}).json(),
                        "export": c.get("/v1/repo/export").content,
                        "workflows": c.get("/v1/workflows").json(),
                        "run": c.get(f"/v1/runs/{run_id}").json(),
                        "artifact": c.get(
                            f"/v1/runs/{run_id}/artifacts/r/plot"
                        ).content,
                    }

                before = snapshot(client)
            with TestClient(create_app(data_dir)) as client:
                after = snapshot(client)
            assert before == after
