"""Deterministic event-driven simulation of one solver over one scenario.

The run is a pure fold over change events: at each event time, tasks that
already started are frozen and marked executed, the problem's active request
set is swapped, the solver takes its step (instantaneous in simulated time),
and the global assignment is snapshotted. Utility is evaluated afterwards
from the snapshots alone, so a persisted run can be re-scored independently.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .accounting import MessageLedger, OpCounter
from .geometry import Target
from .intervals import TimeInterval
from .problem import DynamicProblem, check_constraints, dynamic_utility
from .solvers import (
    AgentState,
    RunContext,
    ScheduleState,
    Solver,
    SolverConfig,
    SolverInvariantError,
    make_solver,
)


@dataclass
class TraceRow:
    event: int
    iteration: int
    satisfied: int
    satisfaction_pct: float
    message_bytes: int
    op_count: int


@dataclass
class RunMetrics:
    solver: str
    satisfied: int
    total_requests: int
    satisfaction_pct: float
    message_bytes: int
    message_count: int
    bytes_by_phase: dict[str, int]
    constraint_checks: int
    rng_draws: int
    serializations: int
    iterations_total: int
    wall_time_s: float
    trace: list[TraceRow] = field(default_factory=list)

    def to_record(self, include_wall_time: bool = False) -> dict:
        rec = {
            "solver": self.solver,
            "satisfied": self.satisfied,
            "total_requests": self.total_requests,
            "satisfaction_pct": self.satisfaction_pct,
            "message_bytes": self.message_bytes,
            "message_count": self.message_count,
            "bytes_by_phase": dict(sorted(self.bytes_by_phase.items())),
            "constraint_checks": self.constraint_checks,
            "rng_draws": self.rng_draws,
            "serializations": self.serializations,
            "iterations_total": self.iterations_total,
            "trace": [
                [r.event, r.iteration, r.satisfied, r.satisfaction_pct, r.message_bytes, r.op_count]
                for r in self.trace
            ],
        }
        if include_wall_time:
            rec["wall_time_s"] = self.wall_time_s
        return rec


@dataclass
class RunResult:
    metrics: RunMetrics
    snapshots: list[set[int]]  # scheduled task ids per instance
    final_schedules: dict[int, list[int]]  # agent -> task ids

    def to_record(self) -> dict:
        return {
            "metrics": self.metrics.to_record(),
            "snapshots": [sorted(s) for s in self.snapshots],
            "final_schedules": {str(a): ids for a, ids in sorted(self.final_schedules.items())},
        }


def build_context(problem: DynamicProblem, targets: list[Target]) -> RunContext:
    ops = OpCounter()
    states = {}
    for agent in problem.agents:
        sched = ScheduleState(agent, problem.downlinks_by_agent.get(agent.agent_id, []), ops)
        states[agent.agent_id] = AgentState(agent.agent_id, sched)
    candidates: dict[tuple[int, int], list] = {}
    agent_requests: dict[int, list[int]] = {}
    request_agents: dict[int, set[int]] = {}
    for aid, tasks in problem.tasks_by_agent.items():
        for task in sorted(tasks, key=lambda t: (t.start, t.task_id)):
            candidates.setdefault((aid, task.request_id), []).append(task)
            request_agents.setdefault(task.request_id, set()).add(aid)
    for (aid, rid) in sorted(candidates):
        agent_requests.setdefault(aid, []).append(rid)
    for lst in agent_requests.values():
        lst.sort()
    return RunContext(
        problem=problem,
        targets={t.target_id: t for t in targets},
        satellites=list(problem.agents),
        states=states,
        candidates=candidates,
        agent_requests=agent_requests,
        request_agents=request_agents,
        ledger=MessageLedger(),
        ops=ops,
        now=problem.horizon.start,
    )


def _advance(ctx: RunContext, window_start: float, now: float) -> None:
    """Freeze and mark executed every scheduled task that has started.

    A task in a schedule at the change time ran during the elapsed static
    window; it becomes an immutable fact for the rest of the run.
    """
    elapsed = TimeInterval(window_start, now)
    for st in ctx.states.values():
        for task in st.schedule.tasks():
            if task.start < now and task.interval.overlaps(elapsed):
                st.schedule.frozen.add(task.task_id)
                st.executed.add(task.request_id)
                st.known_executed.add(task.request_id)
    ctx.now = now


def _capture_snapshot(ctx: RunContext, active: frozenset[int]) -> set[int]:
    out: set[int] = set()
    for st in ctx.states.values():
        for rid, task in st.schedule.by_request.items():
            if rid in active:
                out.add(task.task_id)
    return out


def _satisfied_now(ctx: RunContext, ever_active: frozenset[int]) -> int:
    done: set[int] = set()
    for st in ctx.states.values():
        done |= st.executed
        done |= set(st.schedule.by_request)
    return len(done & ever_active)


def run(
    problem: DynamicProblem,
    targets: list[Target],
    solver_name: str,
    cfg: SolverConfig | None = None,
    *,
    check_feasibility: bool = True,
) -> RunResult:
    """Replay the change-event timeline under one solver; fully deterministic."""
    cfg = cfg or SolverConfig()
    ctx = build_context(problem, targets)
    ever_active = problem.ever_active
    total = len(ever_active)

    trace: list[TraceRow] = []

    def hook(event_index: int, iteration: int) -> None:
        sat = _satisfied_now(ctx, ever_active)
        pct = 100.0 * sat / total if total else 100.0
        trace.append(
            TraceRow(event_index, iteration, sat, pct, ctx.ledger.bytes_total, ctx.ops.total)
        )

    ctx.iteration_hook = hook
    solver: Solver = make_solver(solver_name, ctx, cfg)

    t0 = time.perf_counter()
    snapshots: list[set[int]] = []
    for t, snap in enumerate(problem.snapshots):
        if t > 0:
            _advance(ctx, problem.snapshots[t - 1].start, snap.start)
        ctx.event_index = t
        solver.on_event(t, snap.start, snap.active)
        if check_feasibility:
            _assert_feasible(ctx)
        snapshots.append(_capture_snapshot(ctx, snap.active))
    wall = time.perf_counter() - t0

    satisfied = dynamic_utility(snapshots, problem)
    metrics = RunMetrics(
        solver=solver.name,
        satisfied=satisfied,
        total_requests=total,
        satisfaction_pct=100.0 * satisfied / total if total else 100.0,
        message_bytes=ctx.ledger.bytes_total,
        message_count=ctx.ledger.count_total,
        bytes_by_phase=dict(ctx.ledger.bytes_by_phase),
        constraint_checks=ctx.ops.constraint_checks,
        rng_draws=ctx.ops.rng_draws,
        serializations=ctx.ops.serializations,
        iterations_total=sum(1 for _ in trace),
        wall_time_s=wall,
        trace=trace,
    )
    final = {
        aid: [t.task_id for t in st.schedule.tasks()] for aid, st in ctx.states.items()
    }
    return RunResult(metrics=metrics, snapshots=snapshots, final_schedules=final)


def _assert_feasible(ctx: RunContext) -> None:
    for aid, st in ctx.states.items():
        agent = next(a for a in ctx.satellites if a.agent_id == aid)
        verdict = check_constraints(
            st.schedule.tasks(),
            agent.memory_bytes,
            ctx.problem.downlinks_by_agent.get(aid, []),
        )
        if not verdict:
            raise SolverInvariantError(
                f"agent {aid} schedule infeasible after event {ctx.event_index}: "
                f"{verdict.reason} ({verdict.detail})"
            )


@dataclass
class Gap:
    percent_points: float
    reference: str  # "optimal" or "lower-bound"


def optimality_gap(solver_pct: float, oracle_pct: float, proven: bool) -> Gap:
    return Gap(oracle_pct - solver_pct, "optimal" if proven else "lower-bound")


def stability_drops(trace: list[TraceRow], num_events: int) -> list[float]:
    """Per-event quality drop: last pre-event row minus first post-event row."""
    drops = []
    for e in range(1, num_events + 1):
        pre = [r for r in trace if r.event == e - 1]
        post = [r for r in trace if r.event == e]
        if not pre or not post:
            continue
        drops.append(pre[-1].satisfaction_pct - post[0].satisfaction_pct)
    return drops
