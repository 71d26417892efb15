"""Omniscient offline references: problem collapse, exact search, SWO bound.

The collapse keeps only tasks whose interval overlaps some static window of
an instance in which their request was active; under the executed-task
utility, assignments over the full timeline and assignments over the
collapsed static problem score identically, so solving the collapsed problem
exactly bounds every online solver. These constructions see all change times
up front and are benchmarking tools only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .accounting import message_bytes
from .geometry import SatelliteSpec
from .problem import Downlink, DynamicProblem, Task, check_constraints
from .solvers import ScheduleState


@dataclass
class CollapsedInstance:
    request_ids: frozenset[int]  # every request that was ever active
    tasks: dict[int, Task]  # surviving tasks only
    candidates: dict[int, list[Task]]  # request -> surviving tasks, by start
    agents: dict[int, SatelliteSpec]
    downlinks_by_agent: dict[int, list[Downlink]]


def collapse(problem: DynamicProblem) -> CollapsedInstance:
    """Restrict to tasks that could ever be executed.

    A task survives iff some snapshot both had its request active and stayed
    the live problem for an interval overlapping the task's own interval.
    """
    windows = [problem.static_window(t) for t in range(len(problem.snapshots))]
    actives = [snap.active for snap in problem.snapshots]
    surviving: dict[int, Task] = {}
    for task in problem.tasks.values():
        for window, active in zip(windows, actives):
            if task.request_id in active and task.interval.overlaps(window):
                surviving[task.task_id] = task
                break
    candidates: dict[int, list[Task]] = {}
    for task in surviving.values():
        candidates.setdefault(task.request_id, []).append(task)
    for lst in candidates.values():
        lst.sort(key=lambda t: (t.start, t.task_id))
    return CollapsedInstance(
        request_ids=problem.ever_active,
        tasks=surviving,
        candidates=candidates,
        agents={a.agent_id: a for a in problem.agents},
        downlinks_by_agent=problem.downlinks_by_agent,
    )


def _fresh_states(inst: CollapsedInstance) -> dict[int, ScheduleState]:
    return {
        aid: ScheduleState(agent, inst.downlinks_by_agent.get(aid, []))
        for aid, agent in inst.agents.items()
    }


def _schedules(states: dict[int, ScheduleState]) -> dict[int, list[Task]]:
    return {aid: st.tasks() for aid, st in states.items() if len(st) > 0}


def uplink_bytes(schedules: dict[int, list[Task]]) -> int:
    """Byte volume a ground station would uplink to distribute these schedules."""
    return sum(message_bytes(len(tasks)) for tasks in schedules.values())


def verify_schedules(inst: CollapsedInstance, schedules: dict[int, list[Task]]) -> None:
    for aid, tasks in schedules.items():
        verdict = check_constraints(
            tasks, inst.agents[aid].memory_bytes, inst.downlinks_by_agent.get(aid, [])
        )
        if not verdict:
            raise AssertionError(f"agent {aid}: {verdict.reason} ({verdict.detail})")


@dataclass
class OracleResult:
    satisfied: int
    proven_optimal: bool
    schedules: dict[int, list[Task]]
    nodes: int = 0
    rounds: int = 0

    @property
    def scheduled_task_ids(self) -> set[int]:
        return {t.task_id for tasks in self.schedules.values() for t in tasks}

    def satisfaction_pct(self, total_requests: int) -> float:
        if total_requests == 0:
            return 100.0
        return 100.0 * self.satisfied / total_requests


class BudgetExhausted(Exception):
    pass


def branch_and_bound(
    inst: CollapsedInstance,
    *,
    node_budget: int = 2_000_000,
    time_budget_s: float = 120.0,
) -> OracleResult:
    """Exact maximum of satisfied requests, depth-first with pruning.

    Requests are expanded in ascending candidate-count order; the bound at a
    node is the satisfied count plus the number of remaining requests that
    still have an individually insertable task. If the node or time budget
    runs out, the best solution found is returned flagged unproven, never
    silently claimed optimal.
    """
    import sys

    order = sorted(
        (rid for rid in inst.request_ids if inst.candidates.get(rid)),
        key=lambda rid: (len(inst.candidates[rid]), rid),
    )
    if sys.getrecursionlimit() < len(order) + 100:
        sys.setrecursionlimit(len(order) + 100)
    states = _fresh_states(inst)
    best_count = -1
    best_schedules: dict[int, list[Task]] = {}
    nodes = 0
    deadline = time.monotonic() + time_budget_s
    exhausted = False

    def insertable(rid: int) -> bool:
        return any(states[t.agent_id].can_insert(t) for t in inst.candidates[rid])

    def dfs(i: int, satisfied: int):
        nonlocal nodes, best_count, best_schedules, exhausted
        nodes += 1
        if nodes > node_budget or (nodes % 1024 == 0 and time.monotonic() > deadline):
            exhausted = True
            raise BudgetExhausted
        if satisfied > best_count:
            best_count = satisfied
            best_schedules = _schedules(states)
        if i == len(order):
            return
        bound = satisfied + sum(1 for rid in order[i:] if insertable(rid))
        if bound <= best_count:
            return
        rid = order[i]
        for task in inst.candidates[rid]:
            st = states[task.agent_id]
            if st.can_insert(task):
                st.insert(task)
                dfs(i + 1, satisfied + 1)
                st.remove(task)
        dfs(i + 1, satisfied)  # skip branch

    try:
        dfs(0, 0)
    except BudgetExhausted:
        pass
    result = OracleResult(
        satisfied=best_count,
        proven_optimal=not exhausted,
        schedules=best_schedules,
        nodes=nodes,
    )
    verify_schedules(inst, result.schedules)
    return result


def _construct(inst: CollapsedInstance, priority: list[int]) -> tuple[int, dict[int, ScheduleState], set[int]]:
    """Centralized greedy build: earliest feasible task per request, in order."""
    states = _fresh_states(inst)
    satisfied: set[int] = set()
    for rid in priority:
        for task in inst.candidates.get(rid, []):
            st = states[task.agent_id]
            if st.can_insert(task):
                st.insert(task)
                satisfied.add(rid)
                break
    return len(satisfied), states, satisfied


def greedy_priority(inst: CollapsedInstance) -> list[int]:
    """The start-time greedy order: requests by their earliest candidate task."""
    with_tasks = [rid for rid in inst.request_ids if inst.candidates.get(rid)]
    return sorted(
        with_tasks, key=lambda rid: (inst.candidates[rid][0].start, rid)
    )


def greedy_bound(inst: CollapsedInstance) -> OracleResult:
    """Round-1 SWO construction; the centralized greedy baseline."""
    count, states, _ = _construct(inst, greedy_priority(inst))
    result = OracleResult(count, False, _schedules(states), rounds=1)
    verify_schedules(inst, result.schedules)
    return result


def swo(
    inst: CollapsedInstance,
    *,
    rounds: int = 50,
    jump: int | None = None,
) -> OracleResult:
    """Squeaky wheel optimization: iterated greedy with priority promotion.

    Starts from the greedy order (so the result never falls below the greedy
    baseline); after each round every unsatisfied request jumps forward a
    fixed number of positions. Returns the best round, a valid lower bound on
    the optimum.
    """
    priority = greedy_priority(inst)
    if jump is None:
        jump = max(1, math.ceil(len(inst.request_ids) / 10))
    best_count = -1
    best_schedules: dict[int, list[Task]] = {}
    done = 0
    for rnd in range(max(1, rounds)):
        count, states, satisfied = _construct(inst, priority)
        done = rnd + 1
        if count > best_count:
            best_count = count
            best_schedules = _schedules(states)
        if best_count == len(priority):
            break
        pos = {rid: k for k, rid in enumerate(priority)}
        keys = {
            rid: (pos[rid] - jump if rid not in satisfied else pos[rid], pos[rid])
            for rid in priority
        }
        priority = sorted(priority, key=lambda rid: keys[rid])
    result = OracleResult(best_count, False, best_schedules, rounds=done)
    verify_schedules(inst, result.schedules)
    return result


def run_oracle(
    problem: DynamicProblem,
    mode: str,
    *,
    node_budget: int = 2_000_000,
    time_budget_s: float = 120.0,
    swo_rounds: int = 50,
) -> OracleResult:
    inst = collapse(problem)
    if mode == "bnb":
        return branch_and_bound(inst, node_budget=node_budget, time_budget_s=time_budget_s)
    if mode == "swo":
        return swo(inst, rounds=swo_rounds)
    raise ValueError(f"unknown oracle mode {mode!r}")
