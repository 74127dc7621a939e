"""Exhaustive-enumeration oracle for track planning.

Deliberately independent of the engine's planner: plain sets and itertools,
no bitmask search. Enumerates every subset containing the target, keeps the
ones whose prerequisites can be satisfied in some order ending at the target
and that pass the constraints, and returns the cheapest (cost first, then
lexicographically smallest entry sequence).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Mapping

from coursegate.curriculum import TrackConstraints
from coursegate.meta import MINUTES_PER_WEEK, ModuleMeta


def module_cost(meta: ModuleMeta) -> Fraction:
    midpoint = (
        Fraction(meta.workload.min_hours_per_week)
        + Fraction(meta.workload.max_hours_per_week)
    ) / 2
    return Fraction(meta.duration.minutes, MINUTES_PER_WEEK) * midpoint


def _satisfies(candidate: str, prereq: str, metas: Mapping[str, ModuleMeta]) -> bool:
    if candidate == prereq:
        return True
    candidate_meta = metas.get(candidate)
    if candidate_meta is not None and prereq in candidate_meta.alternatives:
        return True
    prereq_meta = metas.get(prereq)
    return prereq_meta is not None and candidate in prereq_meta.alternatives


def _allowed(meta: ModuleMeta, cons: TrackConstraints) -> bool:
    if cons.max_complexity is not None and meta.complexity > cons.max_complexity:
        return False
    if cons.allowed_scales is not None and meta.scale not in cons.allowed_scales:
        return False
    if cons.required_language is not None and not meta.has_language(cons.required_language):
        return False
    return True


def _greedy_order(
    chosen: frozenset[str], target: str, metas: Mapping[str, ModuleMeta]
) -> tuple[str, ...] | None:
    placed: list[str] = []
    remaining = sorted(chosen - {target})

    def ready(module_id: str) -> bool:
        return all(
            any(_satisfies(done, prereq, metas) for done in placed)
            for prereq in metas[module_id].previous
        )

    while remaining:
        pick = next((m for m in remaining if ready(m)), None)
        if pick is None:
            return None
        remaining.remove(pick)
        placed.append(pick)
    if not ready(target):
        return None
    return tuple(placed) + (target,)


def best_track_by_enumeration(
    target: str,
    metas: Mapping[str, ModuleMeta],
    constraints: TrackConstraints | None = None,
) -> tuple[Fraction, tuple[str, ...]] | None:
    """Minimum-cost valid track ending at target, or None if none exists."""
    cons = constraints or TrackConstraints()
    if target not in metas or not _allowed(metas[target], cons):
        return None
    candidates = sorted(m for m in metas if m != target and _allowed(metas[m], cons))
    best: tuple[Fraction, tuple[str, ...]] | None = None
    for size in range(len(candidates) + 1):
        for combo in combinations(candidates, size):
            chosen = frozenset(combo) | {target}
            if cons.max_total_minutes is not None:
                total = sum(metas[m].duration.minutes for m in chosen)
                if total > cons.max_total_minutes:
                    continue
            order = _greedy_order(chosen, target, metas)
            if order is None:
                continue
            cost = sum((module_cost(metas[m]) for m in chosen), Fraction(0))
            key = (cost, order)
            if best is None or key < best:
                best = key
    return best
