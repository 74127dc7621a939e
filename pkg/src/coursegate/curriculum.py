"""Prerequisite graph, scale classification, track checking and planning."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    CycleDetectedError,
    DuplicateIdError,
    MalformedTrackError,
    UnknownModuleError,
    UnresolvedPrereqError,
    UnsatisfiableError,
)
from .meta import (
    MINUTES_PER_HOUR,
    MINUTES_PER_MONTH,
    MINUTES_PER_WEEK,
    Duration,
    ModuleMeta,
    ScaleLevel,
)

# Upper bound in minutes of each scale class; anything above the last is macro.
_SCALE_UPPER_BOUNDS = (
    (ScaleLevel.NANO, 30),
    (ScaleLevel.MICRO, 8 * MINUTES_PER_HOUR),
    (ScaleLevel.MINI, 14 * 24 * MINUTES_PER_HOUR),
)

OVERSIZE_MINUTES = 6 * MINUTES_PER_MONTH


def classify_scale(duration: Duration | int) -> ScaleLevel:
    """Map a duration to its scale class.

    nano up to 30 min, micro up to 8 h, mini up to 14 days, macro beyond.
    Durations above six months still classify as macro; callers that care
    flag them with is_oversize.
    """
    minutes = duration.minutes if isinstance(duration, Duration) else duration
    for level, upper in _SCALE_UPPER_BOUNDS:
        if minutes <= upper:
            return level
    return ScaleLevel.MACRO


def is_oversize(duration: Duration | int) -> bool:
    minutes = duration.minutes if isinstance(duration, Duration) else duration
    return minutes > OVERSIZE_MINUTES


def expected_workload_hours(meta: ModuleMeta) -> Fraction:
    """Planner cost of a module: duration in weeks times the workload midpoint."""
    return meta.duration.as_weeks() * meta.workload.midpoint_hours()


@dataclass(frozen=True)
class PrereqGraph:
    """Immutable snapshot of the prerequisite/suggestion/alternative structure."""

    metas: dict[str, ModuleMeta]
    requires: dict[str, tuple[str, ...]]
    suggests: dict[str, tuple[str, ...]]
    alt_groups: dict[str, frozenset[str]]
    external: frozenset[str]

    def __contains__(self, module_id: str) -> bool:
        return module_id in self.metas

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.metas))


def _find_requires_cycle(
    nodes: Sequence[str], requires: Mapping[str, tuple[str, ...]]
) -> list[str] | None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    parent: dict[str, str] = {}
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        color[root] = GRAY
        while stack:
            node, i = stack[-1]
            internal = [p for p in requires.get(node, ()) if p in color]
            if i < len(internal):
                stack[-1] = (node, i + 1)
                nxt = internal[i]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, 0))
                elif color[nxt] == GRAY:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.append(nxt)
                    cycle.reverse()
                    return cycle
            else:
                color[node] = BLACK
                stack.pop()
    return None


def build_graph(modules: Iterable[ModuleMeta]) -> PrereqGraph:
    """Assemble the prerequisite graph; requires edges must be acyclic."""
    metas: dict[str, ModuleMeta] = {}
    for meta in modules:
        if meta.id in metas:
            raise DuplicateIdError(f"duplicate module id {meta.id!r}")
        metas[meta.id] = meta
    requires = {m.id: m.previous for m in metas.values()}
    suggests = {m.id: m.next for m in metas.values()}
    alt_groups = {m.id: frozenset(m.alternatives) for m in metas.values()}
    external = frozenset(
        ref for m in metas.values() for ref in m.references() if ref not in metas
    )
    cycle = _find_requires_cycle(sorted(metas), requires)
    if cycle is not None:
        raise CycleDetectedError(
            "prerequisite cycle: " + " -> ".join(cycle), details=cycle
        )
    return PrereqGraph(metas, requires, suggests, alt_groups, external)


@dataclass(frozen=True)
class CourseTrack:
    """An ordered path through the module hierarchy."""

    id: str
    title: str
    entries: tuple[str, ...]
    created_by: str = ""


def track_from_dict(data: Mapping[str, Any]) -> CourseTrack:
    if not isinstance(data, Mapping):
        raise MalformedTrackError("track must be a JSON object")
    entries = data.get("entries")
    if not isinstance(entries, (list, tuple)) or any(not isinstance(e, str) for e in entries):
        raise MalformedTrackError("field 'entries' must be a list of module ids")
    track_id = data.get("id", "")
    title = data.get("title", "")
    created_by = data.get("created_by", "")
    if not all(isinstance(v, str) for v in (track_id, title, created_by)):
        raise MalformedTrackError("track id, title, and created_by must be strings")
    return CourseTrack(track_id, title, tuple(entries), created_by)


def track_to_dict(track: CourseTrack) -> dict[str, Any]:
    return {
        "id": track.id,
        "title": track.title,
        "entries": list(track.entries),
        "created_by": track.created_by,
    }


@dataclass(frozen=True)
class TrackConstraints:
    max_total_minutes: int | None = None
    max_complexity: int | None = None
    allowed_scales: frozenset[ScaleLevel] | None = None
    required_language: str | None = None


def constraints_from_dict(data: Mapping[str, Any] | None) -> TrackConstraints:
    if not data:
        return TrackConstraints()
    if not isinstance(data, Mapping):
        raise MalformedTrackError("constraints must be a JSON object")
    scales = data.get("allowed_scales")
    allowed: frozenset[ScaleLevel] | None = None
    if scales is not None:
        if not isinstance(scales, (list, tuple)):
            raise MalformedTrackError("allowed_scales must be a list")
        try:
            allowed = frozenset(ScaleLevel(str(s).casefold()) for s in scales)
        except ValueError as exc:
            raise MalformedTrackError(f"unknown scale in allowed_scales: {exc}") from exc
    max_minutes = data.get("max_total_minutes")
    max_complexity = data.get("max_complexity")
    for name, value in (("max_total_minutes", max_minutes), ("max_complexity", max_complexity)):
        if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value <= 0):
            raise MalformedTrackError(f"{name} must be a positive integer")
    language = data.get("required_language")
    if language is not None and not isinstance(language, str):
        raise MalformedTrackError("required_language must be a string")
    return TrackConstraints(max_minutes, max_complexity, allowed, language)


@dataclass(frozen=True)
class TrackFinding:
    code: str
    message: str
    module: str | None = None
    prerequisite: str | None = None
    constraint: str | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code, "message": self.message}
        for key in ("module", "prerequisite", "constraint"):
            value = getattr(self, key)
            if value is not None:
                payload[key] = value
        return payload


def _satisfies(earlier: str, prereq: str, graph: PrereqGraph) -> bool:
    """A prerequisite counts as met by itself or by a declared alternative.

    Alternative satisfaction is symmetric: either side declaring the other is
    enough.
    """
    if earlier == prereq:
        return True
    if prereq in graph.alt_groups.get(earlier, frozenset()):
        return True
    return earlier in graph.alt_groups.get(prereq, frozenset())


def check_track(
    track: CourseTrack,
    graph: PrereqGraph,
    constraints: TrackConstraints | None = None,
) -> list[TrackFinding]:
    """Validate entry order against prerequisites and optional constraints.

    An empty list means the track is valid.
    """
    for entry in track.entries:
        if entry not in graph.metas:
            raise UnknownModuleError(f"track entry {entry!r} is not a known module")

    findings: list[TrackFinding] = []
    seen: set[str] = set()
    for entry in track.entries:
        if entry in seen:
            findings.append(
                TrackFinding("DUPLICATE_ENTRY", f"module {entry!r} appears more than once", module=entry)
            )
        seen.add(entry)

    for position, entry in enumerate(track.entries):
        earlier = track.entries[:position]
        for prereq in graph.requires.get(entry, ()):
            if not any(_satisfies(e, prereq, graph) for e in earlier):
                findings.append(
                    TrackFinding(
                        "PREREQ_UNSATISFIED",
                        f"module {entry!r} requires {prereq!r} (or an alternative) earlier in the track",
                        module=entry,
                        prerequisite=prereq,
                    )
                )

    if constraints is not None:
        findings.extend(_constraint_findings(track, graph, constraints))
    return findings


def _constraint_findings(
    track: CourseTrack, graph: PrereqGraph, cons: TrackConstraints
) -> list[TrackFinding]:
    findings: list[TrackFinding] = []
    metas = [graph.metas[e] for e in track.entries]
    if cons.max_total_minutes is not None:
        total = sum(m.duration.minutes for m in metas)
        if total > cons.max_total_minutes:
            findings.append(
                TrackFinding(
                    "CONSTRAINT_VIOLATION",
                    f"total duration {total} min exceeds limit {cons.max_total_minutes} min",
                    constraint="max_total_minutes",
                )
            )
    if cons.max_complexity is not None:
        offenders = sorted(m.id for m in metas if m.complexity > cons.max_complexity)
        if offenders:
            findings.append(
                TrackFinding(
                    "CONSTRAINT_VIOLATION",
                    f"complexity above {cons.max_complexity}: {', '.join(offenders)}",
                    constraint="max_complexity",
                )
            )
    if cons.allowed_scales is not None:
        offenders = sorted(m.id for m in metas if m.scale not in cons.allowed_scales)
        if offenders:
            allowed = ", ".join(sorted(s.value for s in cons.allowed_scales))
            findings.append(
                TrackFinding(
                    "CONSTRAINT_VIOLATION",
                    f"scale outside [{allowed}]: {', '.join(offenders)}",
                    constraint="allowed_scales",
                )
            )
    if cons.required_language is not None:
        offenders = sorted(m.id for m in metas if not m.has_language(cons.required_language))
        if offenders:
            findings.append(
                TrackFinding(
                    "CONSTRAINT_VIOLATION",
                    f"missing language {cons.required_language!r}: {', '.join(offenders)}",
                    constraint="required_language",
                )
            )
    return findings


def _module_allowed(meta: ModuleMeta, cons: TrackConstraints) -> bool:
    if cons.max_complexity is not None and meta.complexity > cons.max_complexity:
        return False
    if cons.allowed_scales is not None and meta.scale not in cons.allowed_scales:
        return False
    if cons.required_language is not None and not meta.has_language(cons.required_language):
        return False
    return True


def plan_track(
    target: str,
    graph: PrereqGraph,
    constraints: TrackConstraints | None = None,
    *,
    created_by: str = "planner",
) -> CourseTrack:
    """Build a minimum-cost prerequisite closure ending at the target.

    Cost is the sum of expected workload hours over the chosen modules;
    alternatives are used whenever they lower that sum. Equal-cost solutions
    are tie-broken by the lexicographically smallest id sequence.

    The search is exact: states are sets of already-schedulable modules,
    grown one module at a time (a module is addable only when each of its
    prerequisites is satisfied by something already in the set, so every
    state admits a valid order by construction). States pop in best-first
    cost order, and set cost is path-independent, so the first state from
    which the target is addable is optimal. Worst-case exponential in the
    satisfier closure of the target, which is fine at catalog scale.
    """
    if target not in graph.metas:
        raise UnknownModuleError(f"unknown module {target!r}")
    cons = constraints or TrackConstraints()
    if not _module_allowed(graph.metas[target], cons):
        raise UnsatisfiableError(f"constraints exclude the target module {target!r}")

    def allowed(module_id: str) -> bool:
        return _module_allowed(graph.metas[module_id], cons)

    # Universe: modules reachable through satisfier sets of required prereqs.
    satisfiers_of: dict[str, tuple[str, ...]] = {}
    external_blockers: set[str] = set()
    universe: set[str] = {target}
    frontier = [target]
    while frontier:
        module_id = frontier.pop()
        for prereq in graph.requires.get(module_id, ()):
            if prereq not in satisfiers_of:
                found = tuple(
                    candidate
                    for candidate in sorted(graph.metas)
                    if allowed(candidate) and _satisfies(candidate, prereq, graph)
                )
                satisfiers_of[prereq] = found
                if not found and prereq in graph.external:
                    external_blockers.add(prereq)
            for candidate in satisfiers_of[prereq]:
                if candidate not in universe:
                    universe.add(candidate)
                    frontier.append(candidate)

    ids = sorted(universe - {target})
    index = {module_id: i for i, module_id in enumerate(ids)}
    cost = {m: expected_workload_hours(graph.metas[m]) for m in universe}
    minutes = {m: graph.metas[m].duration.minutes for m in universe}

    def satisfier_bits(prereq: str) -> int:
        bits = 0
        for candidate in satisfiers_of.get(prereq, ()):
            position = index.get(candidate)
            if position is not None:
                bits |= 1 << position
        return bits

    requirements = {
        m: tuple(
            (prereq, satisfier_bits(prereq)) for prereq in graph.requires.get(m, ())
        )
        for m in universe
    }

    def addable(module_id: str, mask: int) -> bool:
        return all(mask & bits for _, bits in requirements[module_id])

    def lex_min_entries(mask: int) -> tuple[str, ...]:
        remaining = sorted(m for m in ids if mask & (1 << index[m]))
        placed_mask = 0
        placed: list[str] = []
        while remaining:
            pick = next(m for m in remaining if addable(m, placed_mask))
            remaining.remove(pick)
            placed.append(pick)
            placed_mask |= 1 << index[pick]
        return tuple(placed) + (target,)

    budget = cons.max_total_minutes
    target_minutes = minutes[target]
    budget_exceeded = budget is not None and target_minutes > budget

    heap: list[tuple[Fraction, int, int]] = [(Fraction(0), 0, 0)]
    seen = {0}
    best_cost: Fraction | None = None
    best_entries: tuple[str, ...] | None = None

    while heap:
        current_cost, current_minutes, mask = heapq.heappop(heap)
        if best_cost is not None and current_cost > best_cost:
            break
        if addable(target, mask) and (
            budget is None or current_minutes + target_minutes <= budget
        ):
            entries = lex_min_entries(mask)
            if best_cost is None:
                best_cost, best_entries = current_cost, entries
            elif entries < best_entries:  # type: ignore[operator]
                best_entries = entries
            continue
        for module_id in ids:
            bit = 1 << index[module_id]
            if mask & bit or not addable(module_id, mask):
                continue
            new_minutes = current_minutes + minutes[module_id]
            if budget is not None and new_minutes + target_minutes > budget:
                budget_exceeded = True
                continue
            new_mask = mask | bit
            if new_mask in seen:
                continue
            seen.add(new_mask)
            heapq.heappush(heap, (current_cost + cost[module_id], new_minutes, new_mask))

    if best_entries is None:
        if external_blockers:
            blockers = ", ".join(sorted(external_blockers))
            raise UnresolvedPrereqError(
                f"closure needs external module(s): {blockers}",
                details=sorted(external_blockers),
            )
        if budget_exceeded:
            raise UnsatisfiableError("no prerequisite closure fits the duration budget")
        raise UnsatisfiableError(f"no valid prerequisite closure exists for {target!r}")

    return CourseTrack(
        id=f"plan-{target}",
        title=f"Planned track to {graph.metas[target].title}",
        entries=best_entries,
        created_by=created_by,
    )


@dataclass(frozen=True)
class CourseAggregate:
    """Field-wise totals over a track; workload is duration-weighted."""

    total_minutes: int
    workload_min_hours: Fraction
    workload_max_hours: Fraction
    max_complexity: int
    total_exercises: int
    total_price: Decimal
    scale_histogram: dict[ScaleLevel, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_minutes": self.total_minutes,
            "workload_hours": {
                "min": float(self.workload_min_hours),
                "max": float(self.workload_max_hours),
            },
            "max_complexity": self.max_complexity,
            "total_exercises": self.total_exercises,
            "total_price": self.total_price,
            "scale_histogram": {level.value: n for level, n in sorted(
                self.scale_histogram.items(), key=lambda kv: kv[0].rank
            )},
        }


def aggregate(track: CourseTrack, modules: Mapping[str, ModuleMeta]) -> CourseAggregate:
    """Sum duration, workload, exercises, and price over a track.

    Workload totals use 1 week = 10 080 minutes: each module contributes its
    duration in weeks times its hours-per-week range.
    """
    total_minutes = 0
    wl_min = Fraction(0)
    wl_max = Fraction(0)
    max_complexity = 0
    exercises = 0
    price = Decimal(0)
    histogram: dict[ScaleLevel, int] = {}
    for entry in track.entries:
        meta = modules.get(entry)
        if meta is None:
            raise UnknownModuleError(f"track entry {entry!r} is not a known module")
        weeks = meta.duration.as_weeks()
        total_minutes += meta.duration.minutes
        wl_min += weeks * Fraction(meta.workload.min_hours_per_week)
        wl_max += weeks * Fraction(meta.workload.max_hours_per_week)
        max_complexity = max(max_complexity, meta.complexity)
        exercises += meta.exercises
        price += meta.price
        histogram[meta.scale] = histogram.get(meta.scale, 0) + 1
    return CourseAggregate(
        total_minutes, wl_min, wl_max, max_complexity, exercises, price, histogram
    )


def list_next(module_id: str, graph: PrereqGraph) -> list[str]:
    """Suggested continuations: declared next plus anyone requiring this module."""
    if module_id not in graph.metas:
        raise UnknownModuleError(f"unknown module {module_id!r}")
    continuations = set(graph.suggests.get(module_id, ()))
    for other, prereqs in graph.requires.items():
        if module_id in prereqs:
            continuations.add(other)
    return sorted(continuations)


def lint_graph(graph: PrereqGraph) -> list[TrackFinding]:
    """Advisory consistency checks; next never blocks validation."""
    findings: list[TrackFinding] = []
    for module_id in sorted(graph.metas):
        for follower in graph.suggests.get(module_id, ()):
            follower_meta = graph.metas.get(follower)
            if follower_meta is not None and module_id not in follower_meta.previous:
                findings.append(
                    TrackFinding(
                        "NEXT_ASYMMETRY",
                        f"{module_id!r} lists {follower!r} as next, but {follower!r} does not "
                        f"list it as a prerequisite",
                        module=module_id,
                    )
                )
    return findings


def graph_to_dot(graph: PrereqGraph) -> str:
    """DOT dump: requires solid, suggests dashed, alternatives dotted."""
    lines = ["digraph course_graph {"]
    for node in sorted(graph.metas):
        lines.append(f'  "{node}";')
    for node in sorted(graph.external):
        lines.append(f'  "{node}" [style=dashed];')
    for node in sorted(graph.metas):
        for prereq in graph.requires.get(node, ()):
            lines.append(f'  "{node}" -> "{prereq}" [style=solid];')
        for follower in graph.suggests.get(node, ()):
            lines.append(f'  "{node}" -> "{follower}" [style=dashed];')
        for alt in sorted(graph.alt_groups.get(node, frozenset())):
            lines.append(f'  "{node}" -> "{alt}" [style=dotted, dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"
