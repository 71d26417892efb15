"""Observation-scheduling problem model.

A static snapshot pairs a set of active observation requests with the
candidate tasks, downlinks, and constraints of every satellite. A dynamic
problem is a time-ordered sequence of snapshots over one global horizon:
requests are added and removed at change times, and utility is only earned
by tasks that were scheduled during the interval in which they actually ran.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .geometry import SatelliteSpec, Target
from .intervals import TimeInterval

TASK_DURATION_S = 63.0
MB = 1e6


class MalformedScheduleError(Exception):
    """Structural defect in a schedule (distinct from infeasibility)."""


class GenerationError(Exception):
    """A scenario cannot be generated from the given inputs."""


@dataclass(frozen=True)
class Request:
    request_id: int
    target_id: int
    start: float
    end: float

    @property
    def interval(self) -> TimeInterval:
        return TimeInterval(self.start, self.end)


@dataclass(frozen=True)
class Task:
    task_id: int
    request_id: int
    agent_id: int
    start: float
    end: float
    volume_bytes: float

    @property
    def interval(self) -> TimeInterval:
        return TimeInterval(self.start, self.end)


@dataclass(frozen=True)
class Downlink:
    downlink_id: int
    agent_id: int
    start: float
    end: float
    capacity_bytes: float

    @property
    def interval(self) -> TimeInterval:
        return TimeInterval(self.start, self.end)


@dataclass(frozen=True)
class ChangeEvent:
    time: float
    added: tuple[int, ...]
    removed: tuple[int, ...]


@dataclass(frozen=True)
class Snapshot:
    """One static problem instance: active requests from ``start`` onward."""

    index: int
    start: float
    active: frozenset[int]


@dataclass
class DynamicProblem:
    horizon: TimeInterval
    agents: list[SatelliteSpec]
    requests: dict[int, Request]
    tasks: dict[int, Task]
    tasks_by_agent: dict[int, list[Task]]
    downlinks_by_agent: dict[int, list[Downlink]]
    snapshots: list[Snapshot]

    def __post_init__(self):
        starts = [s.start for s in self.snapshots]
        if starts and starts[0] != self.horizon.start:
            raise ValueError("first snapshot must start at the horizon start")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("change times must be strictly increasing")

    @property
    def num_changes(self) -> int:
        return len(self.snapshots) - 1

    @property
    def ever_active(self) -> frozenset[int]:
        """All requests that were active in at least one snapshot."""
        out: set[int] = set()
        for s in self.snapshots:
            out |= s.active
        return frozenset(out)

    def static_window(self, t: int) -> TimeInterval:
        """Interval during which snapshot t is the live problem."""
        start = self.snapshots[t].start
        if t + 1 < len(self.snapshots):
            return TimeInterval(start, self.snapshots[t + 1].start)
        return TimeInterval(start, self.horizon.end)

    def events(self) -> list[ChangeEvent]:
        evs = []
        for prev, cur in zip(self.snapshots, self.snapshots[1:]):
            evs.append(
                ChangeEvent(
                    time=cur.start,
                    added=tuple(sorted(cur.active - prev.active)),
                    removed=tuple(sorted(prev.active - cur.active)),
                )
            )
        return evs

    def validate(self) -> None:
        """Raise ValueError on any violated structural invariant."""
        removed_ever: set[int] = set()
        for prev, cur in zip(self.snapshots, self.snapshots[1:]):
            gone = prev.active - cur.active
            added = cur.active - prev.active
            if added & removed_ever:
                raise ValueError("a removed request reappeared")
            removed_ever |= gone
            for rid in added | gone:
                if self.requests[rid].start <= cur.start:
                    raise ValueError(
                        f"request {rid} changed after its window opened"
                    )
        for task in self.tasks.values():
            req = self.requests[task.request_id]
            if not req.interval.contains(task.interval):
                raise ValueError(f"task {task.task_id} outside its request window")
        for agent_id, dls in self.downlinks_by_agent.items():
            for a, b in zip(dls, dls[1:]):
                if a.interval.overlaps(b.interval):
                    raise ValueError(f"agent {agent_id} has overlapping downlinks")


# ---------------------------------------------------------------------------
# constraint checking


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    reason: str | None = None
    detail: str | None = None

    def __bool__(self) -> bool:
        return self.feasible


def downlink_bucket(task_end: float, downlink_starts: list[float]) -> int:
    """Index of the soonest downlink starting at or after the task's end.

    Returns len(downlink_starts) for tasks with no future downlink; their
    data is bounded by onboard memory only.
    """
    return bisect_left(downlink_starts, task_end)


def check_constraints(
    tasks: list[Task], memory_bytes: float, downlinks: list[Downlink]
) -> Verdict:
    """Full feasibility check of one agent's schedule, from first principles.

    Verifies: no duplicate tasks (structural), no two tasks overlap, no task
    overlaps a downlink, and per-downlink data volume within
    min(memory, downlink capacity). The verdict names the first violation.
    """
    seen: set[int] = set()
    agent_ids = set()
    for t in tasks:
        if t.task_id in seen:
            raise MalformedScheduleError(f"duplicate task id {t.task_id}")
        seen.add(t.task_id)
        agent_ids.add(t.agent_id)
    if len(agent_ids) > 1:
        raise MalformedScheduleError(f"schedule mixes agents {sorted(agent_ids)}")

    ordered = sorted(tasks, key=lambda t: (t.start, t.task_id))
    for a, b in zip(ordered, ordered[1:]):
        if a.interval.overlaps(b.interval):
            return Verdict(
                False, "processing-conflict", f"tasks {a.task_id} and {b.task_id} overlap"
            )

    dls = sorted(downlinks, key=lambda d: d.start)
    for t in ordered:
        for d in dls:
            if t.interval.overlaps(d.interval):
                return Verdict(
                    False,
                    "downlink-conflict",
                    f"task {t.task_id} overlaps downlink {d.downlink_id}",
                )

    dl_starts = [d.start for d in dls]
    loads: dict[int, float] = {}
    for t in ordered:
        b = downlink_bucket(t.end, dl_starts)
        loads[b] = loads.get(b, 0.0) + t.volume_bytes
    for b, load in sorted(loads.items()):
        cap = memory_bytes if b == len(dls) else min(memory_bytes, dls[b].capacity_bytes)
        if load > cap:
            where = "end of horizon" if b == len(dls) else f"downlink {dls[b].downlink_id}"
            return Verdict(
                False, "capacity", f"{load:.0f} B before {where} exceeds {cap:.0f} B"
            )
    return Verdict(True)


# ---------------------------------------------------------------------------
# utilities


def static_utility(
    scheduled_task_ids: set[int], tasks: dict[int, Task], request_ids: frozenset[int]
) -> int:
    """Number of requests with at least one scheduled task.

    A request is satisfied once; extra tasks for the same request add nothing.
    """
    satisfied = {
        tasks[tid].request_id
        for tid in scheduled_task_ids
        if tasks[tid].request_id in request_ids
    }
    return len(satisfied)


def executed_task_ids(
    trace: list[set[int]], problem: DynamicProblem
) -> set[int]:
    """Tasks that actually ran: scheduled in a snapshot whose static window
    overlaps the task's interval."""
    if len(trace) != len(problem.snapshots):
        raise ValueError(
            f"trace length {len(trace)} != snapshot count {len(problem.snapshots)}"
        )
    executed: set[int] = set()
    for t, scheduled in enumerate(trace):
        window = problem.static_window(t)
        active = problem.snapshots[t].active
        for tid in scheduled:
            task = problem.tasks[tid]
            if task.request_id not in active:
                raise ValueError(
                    f"snapshot {t} schedules task {tid} of inactive request "
                    f"{task.request_id}"
                )
            if task.interval.overlaps(window):
                executed.add(tid)
    return executed


def dynamic_utility(trace: list[set[int]], problem: DynamicProblem) -> int:
    """Number of requests with at least one executed task over the whole run."""
    executed = executed_task_ids(trace, problem)
    satisfied = {problem.tasks[tid].request_id for tid in executed}
    return len(satisfied & problem.ever_active)


# ---------------------------------------------------------------------------
# generators


def generate_tasks(
    agent_id: int,
    requests: list[Request],
    windows_by_target: dict[int, list[TimeInterval]],
    rng,
    *,
    duration_s: float = TASK_DURATION_S,
    stride_s: float | None = None,
    id_start: int = 0,
    mean_volume_bytes: float = 50 * MB,
    sd_volume_bytes: float = 10 * MB,
    min_volume_bytes: float = 1 * MB,
) -> list[Task]:
    """Candidate tasks for one agent: tile each access window overlapping a
    request window from its start, advancing by ``stride_s`` per candidate.

    Data volumes are drawn from a truncated normal (resampled below the
    floor). Iteration order is fixed by request id then window order, so task
    ids and volumes are deterministic for a given RNG state.
    """
    stride = duration_s if stride_s is None else stride_s
    tasks: list[Task] = []
    next_id = id_start
    for req in sorted(requests, key=lambda r: r.request_id):
        for window in windows_by_target.get(req.target_id, []):
            overlap = window.intersect(req.interval)
            if overlap is None:
                continue
            t0 = overlap.start
            # tolerance absorbs float noise from window refinement
            while t0 + duration_s <= overlap.end + 1e-9:
                vol = rng.gauss(mean_volume_bytes, sd_volume_bytes)
                while vol < min_volume_bytes:
                    vol = rng.gauss(mean_volume_bytes, sd_volume_bytes)
                tasks.append(
                    Task(
                        task_id=next_id,
                        request_id=req.request_id,
                        agent_id=agent_id,
                        start=t0,
                        end=t0 + duration_s,
                        volume_bytes=vol,
                    )
                )
                next_id += 1
                t0 += stride
    return tasks


def generate_campaign(
    targets: list[Target],
    horizon: TimeInterval,
    periodicity_range: tuple[int, int],
    rng,
    *,
    id_start: int = 0,
) -> list[Request]:
    """Periodic observation requests: each target is sampled a periodicity p
    and asked to be observed once within each of p evenly spaced intervals."""
    lo, hi = periodicity_range
    if lo < 1 or hi < lo:
        raise GenerationError(f"empty periodicity range [{lo}, {hi}]")
    requests: list[Request] = []
    next_id = id_start
    for target in sorted(targets, key=lambda t: t.target_id):
        p = rng.randint(lo, hi)
        width = horizon.duration / p
        for k in range(p):
            start = horizon.start + k * width
            end = horizon.start + (k + 1) * width if k < p - 1 else horizon.end
            requests.append(Request(next_id, target.target_id, start, end))
            next_id += 1
    return requests


def generate_dynamics(
    campaign: list[Request],
    volatility: int,
    horizon: TimeInterval,
    rng,
) -> tuple[set[int], list[ChangeEvent]]:
    """Initial active set plus one change event per unit of volatility.

    One third of the campaign starts active. Each of the v events, placed
    uniformly over the final 1 - 2/(3v) of the horizon, adds a 2/(3v)
    fraction of the campaign from the never-activated pool and removes a
    1/(3v) fraction of the currently active set. Removed requests never
    return, and a request is never touched once its window has opened;
    ineligible requests are skipped, which can shrink an event below its
    nominal fraction.
    """
    if volatility < 1:
        raise GenerationError(f"volatility must be >= 1, got {volatility}")
    n = len(campaign)
    if n < 3:
        raise GenerationError(
            f"campaign of {n} requests is too small to seed a one-third active set"
        )
    by_id = {r.request_id: r for r in campaign}
    ids = sorted(by_id)

    init_count = math.ceil(n / 3)
    initial = set(rng.sample(ids, init_count))
    active = set(initial)
    pool = set(ids) - active  # never activated yet

    earliest = horizon.start + (2.0 / (3.0 * volatility)) * horizon.duration
    times = sorted(rng.uniform(earliest, horizon.end) for _ in range(volatility))

    add_count = math.ceil(n * 2.0 / (3.0 * volatility))
    events: list[ChangeEvent] = []
    for c in times:
        eligible_add = sorted(rid for rid in pool if by_id[rid].start > c)
        adds = rng.sample(eligible_add, min(add_count, len(eligible_add)))

        remove_count = math.ceil(len(active) / (3.0 * volatility))
        eligible_rem = sorted(rid for rid in active if by_id[rid].start > c)
        removes = rng.sample(eligible_rem, min(remove_count, len(eligible_rem)))

        active |= set(adds)
        active -= set(removes)
        pool -= set(adds)
        events.append(ChangeEvent(time=c, added=tuple(sorted(adds)), removed=tuple(sorted(removes))))
    return initial, events


def build_snapshots(
    initial_active: set[int], events: list[ChangeEvent], horizon: TimeInterval
) -> list[Snapshot]:
    snaps = [Snapshot(0, horizon.start, frozenset(initial_active))]
    active = set(initial_active)
    for i, ev in enumerate(events, start=1):
        active |= set(ev.added)
        active -= set(ev.removed)
        snaps.append(Snapshot(i, ev.time, frozenset(active)))
    return snaps
