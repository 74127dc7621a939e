"""Module registry: validation, search, rating, and archive interchange."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Iterable, Mapping

from . import canonical
from .curriculum import classify_scale, is_oversize
from .errors import (
    DuplicateIdError,
    MalformedArchiveError,
    MalformedModuleError,
    MalformedWorkflowError,
    StarsOutOfRangeError,
    UnknownModuleError,
    UnknownWorkflowError,
    UnsupportedVersionError,
    ValidationFailedError,
)
from .meta import (
    ModuleMeta,
    ScaleLevel,
    is_valid_slug,
    module_from_dict,
    module_to_dict,
    title_tokens,
)
from .workflow import Workflow, workflow_from_dict, workflow_to_dict

FORMAT_VERSION = "1.0"


def utc_now_string() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    message: str
    field: str | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }
        if self.field is not None:
            payload["field"] = self.field
        return payload


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_dict(self) -> dict[str, Any]:
        return {"findings": [f.to_dict() for f in self.findings]}


def validate_meta(meta: ModuleMeta, known_ids: Iterable[str] = ()) -> ValidationReport:
    """Check structural invariants (errors) and cross-reference hygiene (warnings).

    Unresolved references are warnings because catalogs routinely combine
    modules from several institutions; everything structural is an error.
    """
    known = set(known_ids)
    findings: list[Finding] = []

    def error(code: str, message: str, field_name: str | None = None) -> None:
        findings.append(Finding("error", code, message, field_name))

    def warning(code: str, message: str, field_name: str | None = None) -> None:
        findings.append(Finding("warning", code, message, field_name))

    if not is_valid_slug(meta.id):
        error("INVALID_ID", f"id {meta.id!r} must match [a-z0-9][a-z0-9-]* and be at most 128 chars", "id")
    if not meta.title.strip():
        error("EMPTY_TITLE", "title must be non-empty", "title")
    if meta.complexity not in (1, 2, 3, 4, 5):
        error("BAD_COMPLEXITY", f"complexity must be in 1..5, got {meta.complexity}", "complexity")
    if meta.duration.minutes < 1:
        error("BAD_DURATION", "duration must be at least one minute", "duration_minutes")
    if not (0 < meta.workload.min_hours_per_week <= meta.workload.max_hours_per_week):
        error("BAD_WORKLOAD", "workload must satisfy 0 < min <= max", "workload")
    if meta.exercises < 0:
        error("BAD_EXERCISES", "exercises must be non-negative", "exercises")
    if meta.price < 0:
        error("BAD_PRICE", "price must be non-negative", "price")
    rating = meta.rating
    if rating.count < 0 or rating.sum < 0:
        error("BAD_RATING", "rating count and sum must be non-negative", "rating")
    elif rating.count == 0 and rating.sum != 0:
        error("BAD_RATING", "rating sum must be zero when there are no votes", "rating")
    elif rating.count > 0 and not (rating.count <= rating.sum <= 5 * rating.count):
        error("BAD_RATING", "rating mean must lie in [1, 5]", "rating")
    if not meta.has_language("English"):
        error("MISSING_ENGLISH", "languages must include English", "languages")

    for field_name in ("previous", "next", "alternatives"):
        refs: tuple[str, ...] = getattr(meta, field_name)
        for ref in refs:
            if ref == meta.id:
                error("SELF_REFERENCE", f"module references itself in {field_name}", field_name)
            elif not is_valid_slug(ref):
                error("INVALID_ID", f"reference {ref!r} is not a valid id", field_name)
            elif ref not in known:
                warning(
                    "UNRESOLVED_REFERENCE",
                    f"referenced module {ref!r} is not known here",
                    field_name,
                )

    if meta.duration.minutes >= 1:
        if is_oversize(meta.duration):
            warning("OVERSIZE", "duration exceeds six months", "duration_minutes")
        derived = classify_scale(meta.duration)
        if derived is not meta.scale:
            warning(
                "SCALE_MISMATCH",
                f"declared scale {meta.scale.value!r} does not match duration-derived "
                f"{derived.value!r}",
                "scale",
            )
    return ValidationReport(tuple(findings))


@dataclass(frozen=True)
class SearchQuery:
    keywords: tuple[str, ...] = ()
    category_prefix: str | None = None
    scale: ScaleLevel | None = None
    language: str | None = None
    max_complexity: int | None = None


def _matches(meta: ModuleMeta, query: SearchQuery) -> bool:
    if query.keywords:
        tokens = {k.casefold() for k in meta.keywords} | title_tokens(meta.title)
        if any(kw.casefold() not in tokens for kw in query.keywords):
            return False
    if query.category_prefix is not None:
        prefix = query.category_prefix.casefold()
        if not any(
            c.casefold() == prefix or c.casefold().startswith(prefix + ":")
            for c in meta.categories
        ):
            return False
    if query.scale is not None and meta.scale is not query.scale:
        return False
    if query.language is not None and not meta.has_language(query.language):
        return False
    if query.max_complexity is not None and meta.complexity > query.max_complexity:
        return False
    return True


def _search_order_key(meta: ModuleMeta) -> tuple[int, Fraction, str]:
    mean = meta.rating.mean
    if mean is None:
        return (1, Fraction(0), meta.id)
    return (0, -mean, meta.id)


@dataclass(frozen=True)
class ImportReport:
    added: int
    added_workflows: int
    skipped: tuple[tuple[str, str], ...]
    external_refs: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "added": self.added,
            "added_workflows": self.added_workflows,
            "skipped": [list(item) for item in self.skipped],
            "external_refs": list(self.external_refs),
        }


class Registry:
    """Shared store of modules and workflows.

    Reads may happen at any time; mutations are serialized behind one lock
    and are visible to subsequent reads. Exports are canonical bytes and a
    function of logical state only, so re-exporting an unchanged registry is
    byte-identical.
    """

    def __init__(self, created_at: str | None = None) -> None:
        self._modules: dict[str, ModuleMeta] = {}
        self._workflows: dict[str, Workflow] = {}
        self._created_at = created_at or utc_now_string()
        self._lock = threading.RLock()

    @property
    def created_at(self) -> str:
        return self._created_at

    def __len__(self) -> int:
        with self._lock:
            return len(self._modules)

    def is_empty(self) -> bool:
        with self._lock:
            return not self._modules and not self._workflows

    # -- modules ---------------------------------------------------------

    def module_ids(self) -> frozenset[str]:
        with self._lock:
            return frozenset(self._modules)

    def modules_by_id(self) -> dict[str, ModuleMeta]:
        with self._lock:
            return dict(self._modules)

    def list_modules(self) -> list[ModuleMeta]:
        with self._lock:
            return [self._modules[mid] for mid in sorted(self._modules)]

    def get_module(self, module_id: str) -> ModuleMeta:
        with self._lock:
            meta = self._modules.get(module_id)
        if meta is None:
            raise UnknownModuleError(f"unknown module {module_id!r}")
        return meta

    def validate(self, meta: ModuleMeta) -> ValidationReport:
        with self._lock:
            known = set(self._modules) | {meta.id}
        return validate_meta(meta, known)

    def register_module(self, meta: ModuleMeta) -> str:
        with self._lock:
            if meta.id in self._modules:
                raise DuplicateIdError(f"module id {meta.id!r} already registered")
            report = validate_meta(meta, set(self._modules) | {meta.id})
            if report.errors:
                raise ValidationFailedError(
                    f"module {meta.id!r} failed validation", details=report.to_dict()
                )
            self._modules[meta.id] = meta
        return meta.id

    def update_module(self, meta: ModuleMeta) -> None:
        with self._lock:
            if meta.id not in self._modules:
                raise UnknownModuleError(f"unknown module {meta.id!r}")
            report = validate_meta(meta, set(self._modules))
            if report.errors:
                raise ValidationFailedError(
                    f"module {meta.id!r} failed validation", details=report.to_dict()
                )
            self._modules[meta.id] = meta

    def search_modules(self, query: SearchQuery | None = None) -> list[ModuleMeta]:
        query = query or SearchQuery()
        with self._lock:
            candidates = list(self._modules.values())
        return sorted((m for m in candidates if _matches(m, query)), key=_search_order_key)

    def rate_module(self, module_id: str, stars: int):
        if isinstance(stars, bool) or not isinstance(stars, int) or not 1 <= stars <= 5:
            raise StarsOutOfRangeError(f"stars must be an integer in [1, 5], got {stars!r}")
        with self._lock:
            meta = self._modules.get(module_id)
            if meta is None:
                raise UnknownModuleError(f"unknown module {module_id!r}")
            updated = meta.with_rating(meta.rating.with_vote(stars))
            self._modules[module_id] = updated
            return updated.rating

    # -- workflows -------------------------------------------------------

    def list_workflows(self) -> list[Workflow]:
        with self._lock:
            return [self._workflows[wid] for wid in sorted(self._workflows)]

    def get_workflow(self, workflow_id: str) -> Workflow:
        with self._lock:
            wf = self._workflows.get(workflow_id)
        if wf is None:
            raise UnknownWorkflowError(f"unknown workflow {workflow_id!r}")
        return wf

    def register_workflow(self, wf: Workflow) -> str:
        from .workflow import validate_workflow

        errors = [f for f in validate_workflow(wf) if f.severity == "error"]
        if errors:
            from .errors import InvalidWorkflowError

            raise InvalidWorkflowError(
                f"workflow {wf.id!r} is invalid",
                details={"findings": [f.to_dict() for f in errors]},
            )
        with self._lock:
            if wf.id in self._workflows:
                raise DuplicateIdError(f"workflow id {wf.id!r} already registered")
            self._workflows[wf.id] = wf
        return wf.id

    # -- archives --------------------------------------------------------

    def export_archive(self) -> bytes:
        with self._lock:
            payload = {
                "format_version": FORMAT_VERSION,
                "created_at": self._created_at,
                "modules": [module_to_dict(self._modules[mid]) for mid in sorted(self._modules)],
                "workflows": [
                    workflow_to_dict(self._workflows[wid]) for wid in sorted(self._workflows)
                ],
            }
        return canonical.dump_bytes(payload)

    def import_archive(self, data: bytes | str) -> ImportReport:
        try:
            parsed = canonical.loads(data)
        except ValueError as exc:
            raise MalformedArchiveError(f"archive is not valid JSON: {exc}") from exc
        if not isinstance(parsed, Mapping):
            raise MalformedArchiveError("archive must be a JSON object")
        version = parsed.get("format_version")
        if not isinstance(version, str):
            raise MalformedArchiveError("archive is missing format_version")
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"unsupported format_version {version!r}")
        modules_raw = parsed.get("modules", [])
        workflows_raw = parsed.get("workflows", [])
        if not isinstance(modules_raw, list) or not isinstance(workflows_raw, list):
            raise MalformedArchiveError("modules and workflows must be lists")

        parsed_modules: list[ModuleMeta | MalformedModuleError] = []
        for raw in modules_raw:
            try:
                parsed_modules.append(module_from_dict(raw, derive_id=False))
            except MalformedModuleError as exc:
                parsed_modules.append(exc)

        with self._lock:
            if not self._modules and not self._workflows:
                stamp = parsed.get("created_at")
                if isinstance(stamp, str) and stamp:
                    self._created_at = stamp

            archive_ids = {m.id for m in parsed_modules if isinstance(m, ModuleMeta)}
            known = set(self._modules) | archive_ids
            added = 0
            skipped: list[tuple[str, str]] = []
            for item in parsed_modules:
                if isinstance(item, MalformedModuleError):
                    skipped.append(("?", f"MALFORMED_MODULE: {item.message}"))
                    continue
                if item.id in self._modules:
                    skipped.append((item.id, "DUPLICATE_ID"))
                    continue
                report = validate_meta(item, known)
                if report.errors:
                    skipped.append((item.id, "VALIDATION_FAILED"))
                    continue
                self._modules[item.id] = item
                added += 1

            added_workflows = 0
            for raw in workflows_raw:
                try:
                    wf = workflow_from_dict(raw)
                except MalformedWorkflowError as exc:
                    skipped.append(("?", f"MALFORMED_WORKFLOW: {exc.message}"))
                    continue
                if wf.id in self._workflows:
                    skipped.append((wf.id, "DUPLICATE_ID"))
                    continue
                from .workflow import validate_workflow

                if any(f.severity == "error" for f in validate_workflow(wf)):
                    skipped.append((wf.id, "INVALID_WORKFLOW"))
                    continue
                self._workflows[wf.id] = wf
                added_workflows += 1

            resolved = set(self._modules) | archive_ids
            external = sorted(
                {
                    ref
                    for item in parsed_modules
                    if isinstance(item, ModuleMeta)
                    for ref in item.references()
                    if ref not in resolved
                }
            )
        return ImportReport(added, added_workflows, tuple(skipped), tuple(external))
