"""Unified command-line interface: one binary for catalog, tracks, workflows, runs."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import canonical
from .curriculum import (
    TrackConstraints,
    aggregate,
    build_graph,
    check_track,
    graph_to_dot,
    plan_track,
    track_from_dict,
    track_to_dict,
)
from .errors import CourseGateError, UnknownRunError
from .executor import ArtifactStore, Policy, default_pool, execute, plan_execution, pool_from_json
from .meta import ScaleLevel, module_from_dict
from .registry import Registry, SearchQuery, validate_meta
from .workflow import derive_subset, deserialize_workflow, topo_layers, validate_workflow

REPOSITORY_FILE = "repository.json"


class CliState:
    def __init__(self, data_dir: Path) -> None:
        self.data_dir = data_dir
        self.registry = Registry()
        path = data_dir / REPOSITORY_FILE
        if path.is_file():
            self.registry.import_archive(path.read_bytes())

    def save(self) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / REPOSITORY_FILE).write_bytes(self.registry.export_archive())


pass_state = click.make_pass_decorator(CliState)


def _fail(exc: CourseGateError) -> None:
    click.echo(f"error [{exc.code}]: {exc.message}", err=True)
    if exc.details is not None:
        click.echo(json.dumps(exc.details, indent=2, default=str), err=True)
    sys.exit(1)


@click.group()
@click.option(
    "--data-dir",
    envvar="COURSEGATE_DATA_DIR",
    default="coursegate-data",
    show_default=True,
    type=click.Path(path_type=Path),
    help="Directory holding the repository archive and run records.",
)
@click.pass_context
def main(ctx: click.Context, data_dir: Path) -> None:
    """Course gateway: module catalog, track planning, and workflow runs."""
    try:
        ctx.obj = CliState(data_dir)
    except CourseGateError as exc:
        _fail(exc)


# -- module ----------------------------------------------------------------


@main.group()
def module() -> None:
    """Manage catalog modules."""


@module.command("add")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@pass_state
def module_add(state: CliState, file: Path) -> None:
    try:
        meta = module_from_dict(canonical.loads(file.read_bytes()))
        module_id = state.registry.register_module(meta)
        state.save()
    except (CourseGateError, ValueError) as exc:
        _fail(exc if isinstance(exc, CourseGateError) else CourseGateError(str(exc)))
    click.echo(module_id)


@module.command("validate")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@pass_state
def module_validate(state: CliState, file: Path) -> None:
    try:
        meta = module_from_dict(canonical.loads(file.read_bytes()))
    except CourseGateError as exc:
        _fail(exc)
    report = validate_meta(meta, state.registry.module_ids() | {meta.id})
    for finding in report.findings:
        location = f" ({finding.field})" if finding.field else ""
        click.echo(f"{finding.severity}: {finding.code}{location}: {finding.message}")
    if report.ok:
        click.echo("ok")
    if report.errors:
        sys.exit(1)


@module.command("search")
@click.option("--keyword", "keywords", multiple=True)
@click.option("--scale", type=click.Choice([s.value for s in ScaleLevel]))
@click.option("--category-prefix")
@click.option("--language")
@click.option("--max-complexity", type=int)
@pass_state
def module_search(
    state: CliState,
    keywords: tuple[str, ...],
    scale: str | None,
    category_prefix: str | None,
    language: str | None,
    max_complexity: int | None,
) -> None:
    query = SearchQuery(
        keywords=keywords,
        category_prefix=category_prefix,
        scale=ScaleLevel(scale) if scale else None,
        language=language,
        max_complexity=max_complexity,
    )
    for meta in state.registry.search_modules(query):
        mean = meta.rating.mean
        stars = f"{float(mean):.2f}" if mean is not None else "unrated"
        click.echo(f"{meta.id}\t{stars}\t{meta.title}")


# -- repo --------------------------------------------------------------------


@main.group()
def repo() -> None:
    """Import and export repository archives."""


@repo.command("export")
@click.argument("path", type=click.Path(path_type=Path))
@pass_state
def repo_export(state: CliState, path: Path) -> None:
    path.write_bytes(state.registry.export_archive())
    click.echo(f"wrote {path}")


@repo.command("import")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@pass_state
def repo_import(state: CliState, path: Path) -> None:
    try:
        report = state.registry.import_archive(path.read_bytes())
        state.save()
    except CourseGateError as exc:
        _fail(exc)
    click.echo(f"added {report.added} module(s), {report.added_workflows} workflow(s)")
    for module_id, reason in report.skipped:
        click.echo(f"skipped {module_id}: {reason}")
    for ref in report.external_refs:
        click.echo(f"external reference: {ref}")


# -- track -------------------------------------------------------------------


def _constraints(
    max_minutes: int | None,
    max_complexity: int | None,
    scales: tuple[str, ...],
    language: str | None,
) -> TrackConstraints:
    return TrackConstraints(
        max_total_minutes=max_minutes,
        max_complexity=max_complexity,
        allowed_scales=frozenset(ScaleLevel(s) for s in scales) if scales else None,
        required_language=language,
    )


constraint_options = [
    click.option("--max-minutes", type=int, default=None),
    click.option("--max-complexity", type=int, default=None),
    click.option("--scale", "scales", multiple=True, type=click.Choice([s.value for s in ScaleLevel])),
    click.option("--language", default=None),
]


def with_constraints(command):
    for option in reversed(constraint_options):
        command = option(command)
    return command


@main.group()
def track() -> None:
    """Plan, check, and total course tracks."""


@track.command("plan")
@click.option("--target", required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@with_constraints
@pass_state
def track_plan(
    state: CliState,
    target: str,
    out: Path | None,
    max_minutes: int | None,
    max_complexity: int | None,
    scales: tuple[str, ...],
    language: str | None,
) -> None:
    graph = build_graph(state.registry.list_modules())
    try:
        planned = plan_track(target, graph, _constraints(max_minutes, max_complexity, scales, language))
    except CourseGateError as exc:
        _fail(exc)
    for entry in planned.entries:
        click.echo(entry)
    if out is not None:
        out.write_bytes(canonical.dump_bytes(track_to_dict(planned)))


@track.command("check")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@with_constraints
@pass_state
def track_check(
    state: CliState,
    file: Path,
    max_minutes: int | None,
    max_complexity: int | None,
    scales: tuple[str, ...],
    language: str | None,
) -> None:
    graph = build_graph(state.registry.list_modules())
    try:
        loaded = track_from_dict(canonical.loads(file.read_bytes()))
        findings = check_track(
            loaded, graph, _constraints(max_minutes, max_complexity, scales, language)
        )
    except CourseGateError as exc:
        _fail(exc)
    for finding in findings:
        click.echo(f"{finding.code}: {finding.message}")
    if not findings:
        click.echo("ok")
    else:
        sys.exit(1)


@track.command("aggregate")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@pass_state
def track_aggregate(state: CliState, file: Path) -> None:
    try:
        loaded = track_from_dict(canonical.loads(file.read_bytes()))
        totals = aggregate(loaded, state.registry.modules_by_id())
    except CourseGateError as exc:
        _fail(exc)
    click.echo(canonical.dumps(totals.to_dict()))


@track.command("graph")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@pass_state
def track_graph(state: CliState, out: Path | None) -> None:
    dot = graph_to_dot(build_graph(state.registry.list_modules()))
    if out is None:
        click.echo(dot, nl=False)
    else:
        out.write_text(dot, "utf-8")


# -- wf ------------------------------------------------------------------------


@main.group()
def wf() -> None:
    """Validate and slice crate workflows."""


def _load_workflow(file: Path):
    try:
        return deserialize_workflow(file.read_bytes())
    except CourseGateError as exc:
        _fail(exc)


@wf.command("validate")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
def wf_validate(file: Path) -> None:
    findings = validate_workflow(_load_workflow(file))
    for finding in findings:
        click.echo(f"{finding.severity}: {finding.code}: {finding.message}")
    if not findings:
        click.echo("ok")
    if any(f.severity == "error" for f in findings):
        sys.exit(1)


@wf.command("layers")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
def wf_layers(file: Path) -> None:
    try:
        layers = topo_layers(_load_workflow(file))
    except CourseGateError as exc:
        _fail(exc)
    for depth, layer in enumerate(layers):
        click.echo(f"{depth}: {', '.join(layer)}")


@wf.command("subset")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--keep", required=True, help="Comma-separated node ids to keep.")
@click.option("--out", type=click.Path(path_type=Path), default=None)
def wf_subset(file: Path, keep: str, out: Path | None) -> None:
    kept = {part.strip() for part in keep.split(",") if part.strip()}
    try:
        subset = derive_subset(_load_workflow(file), kept)
    except CourseGateError as exc:
        _fail(exc)
    from .workflow import serialize_workflow

    data = serialize_workflow(subset)
    if out is None:
        click.echo(data.decode("utf-8"))
    else:
        out.write_bytes(data)


# -- run ------------------------------------------------------------------------


@main.group()
def run() -> None:
    """Execute workflows and inspect run records."""


@run.command("submit")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--pool", "pool_file", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--policy", type=click.Choice([p.value for p in Policy]), default=Policy.ROUND_ROBIN.value)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--worker-limit", type=int, default=4, show_default=True)
@pass_state
def run_submit(
    state: CliState,
    file: Path,
    pool_file: Path | None,
    policy: str,
    seed: int,
    worker_limit: int,
) -> None:
    workflow = _load_workflow(file)
    try:
        pool = pool_from_json(pool_file.read_bytes()) if pool_file else default_pool()
        plan = plan_execution(workflow, pool, policy)
        store = ArtifactStore(state.data_dir)
        record = execute(
            workflow, plan, seed=seed, store=store, worker_limit=worker_limit
        )
    except CourseGateError as exc:
        _fail(exc)
    run_dir = state.data_dir / "runs" / record.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "record.json").write_text(json.dumps(record.to_dict(), sort_keys=True), "utf-8")
    click.echo(f"run {record.run_id}: {record.status.value}")
    for artifact in record.artifacts:
        click.echo(f"artifact {artifact.node}/{artifact.port} ({artifact.kind}, {artifact.size} B)")


def _read_record(state: CliState, run_id: str) -> dict:
    path = state.data_dir / "runs" / run_id / "record.json"
    if not path.is_file():
        raise UnknownRunError(f"unknown run {run_id!r}")
    return json.loads(path.read_text("utf-8"))


@run.command("status")
@click.argument("run_id")
@pass_state
def run_status(state: CliState, run_id: str) -> None:
    try:
        record = _read_record(state, run_id)
    except CourseGateError as exc:
        _fail(exc)
    click.echo(json.dumps(record, indent=2, sort_keys=True))


@run.command("cancel")
@click.argument("run_id")
@pass_state
def run_cancel(state: CliState, run_id: str) -> None:
    try:
        record = _read_record(state, run_id)
    except CourseGateError as exc:
        _fail(exc)
    click.echo(f"run {run_id} already {record['status']}; nothing to cancel")


@run.command("artifacts")
@click.argument("run_id")
@click.option("--node", required=True)
@click.option("--port", required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@pass_state
def run_artifacts(state: CliState, run_id: str, node: str, port: str, out: Path) -> None:
    try:
        _read_record(state, run_id)
        path = state.data_dir / "runs" / run_id / node / port
        if not path.is_file():
            raise UnknownRunError(f"run {run_id} has no artifact at {node}/{port}")
    except CourseGateError as exc:
        _fail(exc)
    out.write_bytes(path.read_bytes())
    click.echo(f"wrote {out}")


# -- serve ------------------------------------------------------------------------


@main.command("serve")
@click.option("--port", type=int, envvar="COURSEGATE_PORT", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--worker-limit", type=int, default=4, show_default=True)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None)
@pass_state
def serve_command(state: CliState, port: int, host: str, worker_limit: int, ui_dir: Path | None) -> None:
    """Start the HTTP service on the shared data directory."""
    from .service import serve

    try:
        serve(
            port=port,
            data_dir=state.data_dir,
            host=host,
            worker_limit=worker_limit,
            ui_dir=ui_dir,
        )
    except CourseGateError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
