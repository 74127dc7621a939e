"""Standardized meta-information records for course modules."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping

from .errors import MalformedModuleError

SLUG_RE = re.compile(r"[a-z0-9][a-z0-9-]*")
MAX_SLUG_LENGTH = 128

MINUTES_PER_HOUR = 60
MINUTES_PER_DAY = 24 * MINUTES_PER_HOUR
MINUTES_PER_WEEK = 7 * MINUTES_PER_DAY
MINUTES_PER_MONTH = 30 * MINUTES_PER_DAY


def is_valid_slug(text: str) -> bool:
    return 0 < len(text) <= MAX_SLUG_LENGTH and SLUG_RE.fullmatch(text) is not None


def slug_for_title(title: str) -> str:
    """Derive the default module id from a display title.

    Lowercase, whitespace becomes hyphens, punctuation is dropped. Titles are
    display-only after that; cross-references always use the slug.
    """
    lowered = title.casefold()
    hyphenated = re.sub(r"\s+", "-", lowered.strip())
    cleaned = re.sub(r"[^a-z0-9-]", "", hyphenated)
    collapsed = re.sub(r"-{2,}", "-", cleaned).strip("-")
    return collapsed[:MAX_SLUG_LENGTH]


class ScaleLevel(str, Enum):
    """Duration class of a module, smallest to largest."""

    NANO = "nano"
    MICRO = "micro"
    MINI = "mini"
    MACRO = "macro"

    @property
    def rank(self) -> int:
        return _SCALE_ORDER.index(self)


_SCALE_ORDER = (ScaleLevel.NANO, ScaleLevel.MICRO, ScaleLevel.MINI, ScaleLevel.MACRO)


class ModuleKind(str, Enum):
    """Passive legacy web content vs. an active workflow-backed virtual lab."""

    PASSIVE = "passive"
    ACTIVE = "active"


@dataclass(frozen=True)
class Duration:
    """Module length stored uniformly in minutes.

    Fixed conversions: 1 h = 60 min, 1 day = 24 h, 1 week = 7 days,
    1 month = 30 days.
    """

    minutes: int

    @classmethod
    def hours(cls, n: int) -> Duration:
        return cls(n * MINUTES_PER_HOUR)

    @classmethod
    def days(cls, n: int) -> Duration:
        return cls(n * MINUTES_PER_DAY)

    @classmethod
    def weeks(cls, n: int) -> Duration:
        return cls(n * MINUTES_PER_WEEK)

    @classmethod
    def months(cls, n: int) -> Duration:
        return cls(n * MINUTES_PER_MONTH)

    def as_weeks(self) -> Fraction:
        return Fraction(self.minutes, MINUTES_PER_WEEK)


@dataclass(frozen=True)
class WorkloadRange:
    """Hours per week a module demands, as a closed [min, max] range."""

    min_hours_per_week: Decimal
    max_hours_per_week: Decimal

    @classmethod
    def single(cls, hours: Decimal | int) -> WorkloadRange:
        value = Decimal(hours)
        return cls(value, value)

    def midpoint_hours(self) -> Fraction:
        return (Fraction(self.min_hours_per_week) + Fraction(self.max_hours_per_week)) / 2


@dataclass(frozen=True)
class RatingAggregate:
    """Star votes kept as (count, sum) so the mean stays exact and mergeable."""

    count: int = 0
    sum: int = 0

    @property
    def mean(self) -> Fraction | None:
        if self.count == 0:
            return None
        return Fraction(self.sum, self.count)

    def with_vote(self, stars: int) -> RatingAggregate:
        return RatingAggregate(self.count + 1, self.sum + stars)


@dataclass(frozen=True)
class ModuleMeta:
    """One module's interchange record.

    previous is the input socket (obligatory prerequisites), next the output
    socket (suggested continuations), alternatives the interchangeable
    variants. Unknown fields from imported records ride along in extra and
    are re-emitted verbatim.
    """

    id: str
    title: str
    previous: tuple[str, ...] = ()
    next: tuple[str, ...] = ()
    alternatives: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()
    complexity: int = 1
    scale: ScaleLevel = ScaleLevel.MINI
    duration: Duration = Duration(MINUTES_PER_WEEK)
    workload: WorkloadRange = WorkloadRange(Decimal(1), Decimal(1))
    exercises: int = 0
    keywords: tuple[str, ...] = ()
    languages: tuple[str, ...] = ("English",)
    rating: RatingAggregate = RatingAggregate()
    certificate: bool = False
    price: Decimal = Decimal(0)
    kind: ModuleKind = ModuleKind.PASSIVE
    extra: dict[str, Any] = field(default_factory=dict)

    def references(self) -> tuple[str, ...]:
        return self.previous + self.next + self.alternatives

    def has_language(self, name: str) -> bool:
        wanted = name.casefold()
        return any(lang.casefold() == wanted for lang in self.languages)

    def with_rating(self, rating: RatingAggregate) -> ModuleMeta:
        return replace(self, rating=rating)


KNOWN_MODULE_KEYS = frozenset(
    {
        "id",
        "title",
        "previous",
        "next",
        "alternatives",
        "categories",
        "complexity",
        "scale",
        "duration_minutes",
        "workload",
        "exercises",
        "keywords",
        "languages",
        "rating",
        "certificate",
        "price",
        "kind",
    }
)


def module_to_dict(meta: ModuleMeta) -> dict[str, Any]:
    """Canonical JSON object for one module; durations in integer minutes."""
    payload: dict[str, Any] = {
        "id": meta.id,
        "title": meta.title,
        "previous": list(meta.previous),
        "next": list(meta.next),
        "alternatives": list(meta.alternatives),
        "categories": list(meta.categories),
        "complexity": meta.complexity,
        "scale": meta.scale.value,
        "duration_minutes": meta.duration.minutes,
        "workload": {
            "min_hours_per_week": meta.workload.min_hours_per_week,
            "max_hours_per_week": meta.workload.max_hours_per_week,
        },
        "exercises": meta.exercises,
        "keywords": list(meta.keywords),
        "languages": list(meta.languages),
        "rating": {"count": meta.rating.count, "sum": meta.rating.sum},
        "certificate": meta.certificate,
        "price": meta.price,
        "kind": meta.kind.value,
    }
    for key, value in meta.extra.items():
        if key not in KNOWN_MODULE_KEYS:
            payload[key] = value
    return payload


def _expect_str(data: Mapping[str, Any], key: str) -> str:
    value = data.get(key)
    if not isinstance(value, str):
        raise MalformedModuleError(f"field {key!r} must be a string")
    return value


def _expect_int(data: Mapping[str, Any], key: str, default: int | None = None) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedModuleError(f"field {key!r} must be an integer")
    return value


def _expect_bool(data: Mapping[str, Any], key: str, default: bool = False) -> bool:
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise MalformedModuleError(f"field {key!r} must be a boolean")
    return value


def _expect_decimal(data: Mapping[str, Any], key: str) -> Decimal:
    value = data.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, Decimal, str)):
        raise MalformedModuleError(f"field {key!r} must be a number")
    try:
        return Decimal(value)
    except InvalidOperation as exc:
        raise MalformedModuleError(f"field {key!r} is not a valid number") from exc


def _expect_str_list(data: Mapping[str, Any], key: str) -> tuple[str, ...]:
    value = data.get(key, [])
    if not isinstance(value, (list, tuple)) or any(not isinstance(v, str) for v in value):
        raise MalformedModuleError(f"field {key!r} must be a list of strings")
    return tuple(value)


def module_from_dict(data: Mapping[str, Any], *, derive_id: bool = True) -> ModuleMeta:
    """Parse one module object; raises MalformedModuleError on shape problems.

    Range and cross-reference rules are left to validate_meta so that a
    structurally parseable record can still be inspected and reported on.
    """
    if not isinstance(data, Mapping):
        raise MalformedModuleError("module record must be a JSON object")
    title = _expect_str(data, "title")
    if "id" in data:
        module_id = _expect_str(data, "id")
    elif derive_id:
        module_id = slug_for_title(title)
        if not module_id:
            raise MalformedModuleError("cannot derive an id from the title")
    else:
        raise MalformedModuleError("field 'id' is required")

    scale_raw = _expect_str(data, "scale") if "scale" in data else ScaleLevel.MINI.value
    try:
        scale = ScaleLevel(scale_raw.casefold())
    except ValueError as exc:
        raise MalformedModuleError(f"unknown scale level {scale_raw!r}") from exc

    kind_raw = _expect_str(data, "kind") if "kind" in data else ModuleKind.PASSIVE.value
    try:
        kind = ModuleKind(kind_raw.casefold())
    except ValueError as exc:
        raise MalformedModuleError(f"unknown module kind {kind_raw!r}") from exc

    workload_raw = data.get("workload")
    if not isinstance(workload_raw, Mapping):
        raise MalformedModuleError("field 'workload' must be an object")
    workload = WorkloadRange(
        _expect_decimal(workload_raw, "min_hours_per_week"),
        _expect_decimal(workload_raw, "max_hours_per_week"),
    )

    rating_raw = data.get("rating", {"count": 0, "sum": 0})
    if not isinstance(rating_raw, Mapping):
        raise MalformedModuleError("field 'rating' must be an object")
    rating = RatingAggregate(
        _expect_int(rating_raw, "count", 0),
        _expect_int(rating_raw, "sum", 0),
    )

    extra = {k: v for k, v in data.items() if k not in KNOWN_MODULE_KEYS}

    return ModuleMeta(
        id=module_id,
        title=title,
        previous=_expect_str_list(data, "previous"),
        next=_expect_str_list(data, "next"),
        alternatives=_expect_str_list(data, "alternatives"),
        categories=_expect_str_list(data, "categories"),
        complexity=_expect_int(data, "complexity", 1),
        scale=scale,
        duration=Duration(_expect_int(data, "duration_minutes")),
        workload=workload,
        exercises=_expect_int(data, "exercises", 0),
        keywords=_expect_str_list(data, "keywords"),
        languages=_expect_str_list(data, "languages"),
        rating=rating,
        certificate=_expect_bool(data, "certificate"),
        price=_expect_decimal(data, "price") if "price" in data else Decimal(0),
        kind=kind,
        extra=extra,
    )


def title_tokens(title: str) -> frozenset[str]:
    return frozenset(token.casefold() for token in re.findall(r"[A-Za-z0-9]+", title))
