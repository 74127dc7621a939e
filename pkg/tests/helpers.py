"""Shared builders for test catalogs."""

from __future__ import annotations

from decimal import Decimal

from coursegate.curriculum import classify_scale
from coursegate.meta import (
    Duration,
    ModuleKind,
    ModuleMeta,
    RatingAggregate,
    ScaleLevel,
    WorkloadRange,
)


def make_module(
    module_id: str,
    *,
    title: str | None = None,
    previous: tuple[str, ...] = (),
    next_: tuple[str, ...] = (),
    alternatives: tuple[str, ...] = (),
    categories: tuple[str, ...] = (),
    minutes: int = 10080,
    workload: tuple[int | str, int | str] = (1, 1),
    complexity: int = 1,
    scale: ScaleLevel | None = None,
    exercises: int = 0,
    keywords: tuple[str, ...] = (),
    languages: tuple[str, ...] = ("English",),
    rating: tuple[int, int] = (0, 0),
    certificate: bool = False,
    price: str | int = 0,
    kind: ModuleKind = ModuleKind.PASSIVE,
) -> ModuleMeta:
    return ModuleMeta(
        id=module_id,
        title=title if title is not None else module_id.replace("-", " ").title(),
        previous=previous,
        next=next_,
        alternatives=alternatives,
        categories=categories,
        complexity=complexity,
        scale=scale if scale is not None else classify_scale(minutes),
        duration=Duration(minutes),
        workload=WorkloadRange(Decimal(workload[0]), Decimal(workload[1])),
        exercises=exercises,
        keywords=keywords,
        languages=languages,
        rating=RatingAggregate(*rating),
        certificate=certificate,
        price=Decimal(price),
        kind=kind,
    )
