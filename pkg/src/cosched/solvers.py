"""Online solvers: neighborhood stochastic search, DSA variants, greedy, random.

All solvers share one event-driven interface: ``on_event`` is invoked once at
the start of the run and once per problem change, and must leave every
agent's schedule feasible. The iterative solvers advance in synchronous
rounds; messages sent in round i are readable in round i+1, and every message
is charged to the ledger with its exact byte size. Per-agent RNG streams are
derived from the solver seed so parallel and sequential execution of a round
produce identical results.
"""

from __future__ import annotations

import random
from bisect import bisect_left, insort
from dataclasses import dataclass, field

from .accounting import MessageLedger, OpCounter, message_bytes
from .decomposition import Allocation, gnd
from .geometry import SatelliteSpec, Target
from .intervals import TimeInterval
from .problem import Downlink, DynamicProblem, Request, Task

SOLVER_NAMES = ("random", "greedy", "dnss", "0nss", "ddsa", "0dsa")


class SolverInvariantError(Exception):
    """A solver produced an infeasible schedule; always a bug, never recoverable."""


@dataclass
class SolverConfig:
    p_u: float = 0.7
    max_iters: int = 20
    solver_seed: int = 1234
    repair_seed: int = 1
    random_solver_seed: int = 2023
    gnd_seed: int = 2
    gnd_n: int = 2
    neighborhood_size: int = 10
    run_all_iterations: bool = False  # disable early convergence exit


class ScheduleState:
    """One agent's committed schedule with incremental feasibility checks.

    Maintains tasks sorted by start time, per-downlink capacity loads, and the
    set of frozen (already started or executed) tasks that may never be
    removed. Every feasibility query increments the constraint-check counter.
    """

    def __init__(self, agent: SatelliteSpec, downlinks: list[Downlink], ops: OpCounter | None = None):
        self.agent_id = agent.agent_id
        self.memory = agent.memory_bytes
        self.downlinks = sorted(downlinks, key=lambda d: d.start)
        self._dl_starts = [d.start for d in self.downlinks]
        self.ops = ops
        self._starts: list[tuple[float, int]] = []  # (start, task_id), sorted
        self._by_id: dict[int, Task] = {}
        self.by_request: dict[int, Task] = {}
        self._loads: dict[int, float] = {}
        self.frozen: set[int] = set()  # task ids

    def tasks(self) -> list[Task]:
        return [self._by_id[tid] for _, tid in self._starts]

    def __len__(self) -> int:
        return len(self._starts)

    def __contains__(self, task_id: int) -> bool:
        return task_id in self._by_id

    def has_request(self, request_id: int) -> bool:
        return request_id in self.by_request

    def _bucket(self, task: Task) -> int:
        return bisect_left(self._dl_starts, task.end)

    def _bucket_cap(self, b: int) -> float:
        if b == len(self.downlinks):
            return self.memory
        return min(self.memory, self.downlinks[b].capacity_bytes)

    def can_insert(self, task: Task) -> bool:
        if self.ops is not None:
            self.ops.constraint_checks += 1
        if task.agent_id != self.agent_id or task.task_id in self._by_id:
            return False
        # processing conflicts: schedule is disjoint, so only the immediate
        # neighbors in start order can overlap
        i = bisect_left(self._starts, (task.start, task.task_id))
        if i > 0 and self._by_id[self._starts[i - 1][1]].end > task.start:
            return False
        if i < len(self._starts) and self._by_id[self._starts[i][1]].start < task.end:
            return False
        # downlink overlap: same argument over the disjoint downlink list
        k = bisect_left(self._dl_starts, task.end) - 1
        if k >= 0 and self.downlinks[k].end > task.start:
            return False
        # capacity before the soonest future downlink
        b = self._bucket(task)
        if self._loads.get(b, 0.0) + task.volume_bytes > self._bucket_cap(b):
            return False
        return True

    def insert(self, task: Task) -> None:
        if task.request_id in self.by_request:
            raise SolverInvariantError(
                f"agent {self.agent_id} already holds a task for request {task.request_id}"
            )
        insort(self._starts, (task.start, task.task_id))
        self._by_id[task.task_id] = task
        self.by_request[task.request_id] = task
        b = self._bucket(task)
        self._loads[b] = self._loads.get(b, 0.0) + task.volume_bytes

    def remove(self, task: Task) -> None:
        if task.task_id in self.frozen:
            raise SolverInvariantError(f"task {task.task_id} is frozen and cannot be removed")
        self._starts.remove((task.start, task.task_id))
        del self._by_id[task.task_id]
        del self.by_request[task.request_id]
        b = self._bucket(task)
        self._loads[b] -= task.volume_bytes

    def closest_removable(self, start: float) -> Task | None:
        """Non-frozen scheduled task nearest in start time; ties prefer the
        larger data volume (frees more capacity), then the lower id."""
        best = None
        best_key = None
        for _, tid in self._starts:
            if tid in self.frozen:
                continue
            t = self._by_id[tid]
            key = (abs(t.start - start), -t.volume_bytes, t.task_id)
            if best_key is None or key < best_key:
                best, best_key = t, key
        return best


@dataclass
class AgentState:
    agent_id: int
    schedule: ScheduleState
    assigned: set[int] = field(default_factory=set)
    executed: set[int] = field(default_factory=set)  # requests this agent completed
    known_executed: set[int] = field(default_factory=set)  # incl. neighborhood reports
    scheduled_last: set[int] = field(default_factory=set)  # requests held after prev round
    rng: random.Random = field(default_factory=random.Random)


@dataclass
class RunContext:
    """Everything a solver needs: problem data, per-agent state, accounting."""

    problem: DynamicProblem
    targets: dict[int, Target]
    satellites: list[SatelliteSpec]
    states: dict[int, AgentState]
    candidates: dict[tuple[int, int], list[Task]]  # (agent, request) -> tasks by start
    agent_requests: dict[int, list[int]]  # agent -> request ids it has tasks for
    request_agents: dict[int, set[int]]  # request -> agents with candidates
    ledger: MessageLedger
    ops: OpCounter
    now: float = 0.0
    event_index: int = 0
    iteration_hook: object = None  # callable(event_index, iteration) or None

    def record_iteration(self, iteration: int) -> None:
        if self.iteration_hook is not None:
            self.iteration_hook(self.event_index, iteration)


def stochastic_update(executed: bool, assigned: bool, w: int, p_u: float, rng, ops: OpCounter | None = None) -> bool:
    """Assignment decision for one request under the stochastic update scheme.

    Probability of staying/becoming assigned: 0 if the request was executed;
    1 if unassigned with no competitor; 0 if unassigned with competitors;
    1 - p_u if assigned and uncontested; 1/w if assigned against w others.
    """
    if executed:
        return False
    if not assigned:
        return w == 0
    if ops is not None:
        ops.rng_draws += 1
    if w == 0:
        return rng.random() < 1.0 - p_u
    return rng.random() < 1.0 / w


def schedule_insert(state: AgentState, request_id: int, candidates: list[Task], now: float, ops: OpCounter | None = None) -> bool:
    """Try to place a task for the request, allowing one displacement.

    Candidates are tried in ascending start order. If a candidate does not
    fit, the scheduled task closest in start time is removed and the insert
    retried; on failure the removed task is restored. A displaced task's
    request stays assigned, so the agent may re-schedule it later.
    """
    sched = state.schedule
    if sched.has_request(request_id):
        return True
    for task in candidates:
        if task.start < now:
            continue
        if sched.can_insert(task):
            sched.insert(task)
            return True
        victim = sched.closest_removable(task.start)
        if victim is None:
            continue
        sched.remove(victim)
        if sched.can_insert(task):
            sched.insert(task)
            return True
        sched.insert(victim)
    return False


def repair(state: AgentState, allowed: set[int], ctx: RunContext, rng: random.Random) -> None:
    """Drop tasks that left the subproblem, then greedily refill in random order.

    Removes every non-frozen task whose request is outside ``allowed`` or
    already executed somewhere in the neighborhood, then shuffles the agent's
    candidate tasks and inserts each one that fits and whose request is not
    yet held. The result is always feasible.
    """
    sched = state.schedule
    for task in sched.tasks():
        if task.task_id in sched.frozen:
            continue
        if task.request_id not in allowed or task.request_id in state.known_executed:
            sched.remove(task)
    state.assigned &= allowed
    state.assigned |= set(sched.by_request) & allowed
    state.assigned -= state.known_executed

    pool = [
        t
        for t in ctx.problem.tasks_by_agent.get(state.agent_id, [])
        if t.request_id in allowed
        and t.request_id not in state.known_executed
        and t.start >= ctx.now
    ]
    rng.shuffle(pool)
    if ctx.ops is not None:
        ctx.ops.rng_draws += len(pool)
    for task in pool:
        if not sched.has_request(task.request_id) and sched.can_insert(task):
            sched.insert(task)
            state.assigned.add(task.request_id)


@dataclass
class SearchGroup:
    """One synchronized search unit: a neighborhood (or the whole fleet)."""

    agents: tuple[int, ...]
    requests: frozenset[int]
    converged: bool = False


def synchronous_search(groups: list[SearchGroup], ctx: RunContext, cfg: SolverConfig, phase: str) -> int:
    """Iterate all groups in lockstep for up to max_iters rounds.

    Each round: agents exchange their executed set and previously scheduled
    set with every other group member (charged to the ledger), then update
    each of their requests with the stochastic scheme and try insertions.
    A group stops early once a full round changes nothing, unless
    run_all_iterations is set. Returns the number of rounds executed.
    """
    for st in ctx.states.values():
        st.scheduled_last = set(st.schedule.by_request)
    for g in groups:
        g.converged = False

    rounds = 0
    for it in range(cfg.max_iters):
        live = [g for g in groups if not g.converged]
        if not live:
            break
        rounds += 1
        for g in live:
            _search_round(g, ctx, cfg, phase)
        ctx.record_iteration(it + 1)
        if cfg.run_all_iterations:
            for g in groups:
                g.converged = False
    return rounds


def _search_round(group: SearchGroup, ctx: RunContext, cfg: SolverConfig, phase: str) -> None:
    states = ctx.states
    members = group.agents
    # message exchange: each member broadcasts (executed, scheduled-last-round)
    counts: dict[int, int] = {}
    group_executed: set[int] = set()
    payloads: dict[int, set[int]] = {}
    for a in members:
        st = states[a]
        payload = (st.scheduled_last | st.executed) & group.requests
        payloads[a] = payload
        for rid in payload:
            counts[rid] = counts.get(rid, 0) + 1
        group_executed |= st.executed & group.requests
        fanout = len(members) - 1
        if fanout > 0:
            ctx.ledger.record(phase, fanout, fanout * message_bytes(len(payload)))
            ctx.ops.serializations += fanout
    for a in members:
        states[a].known_executed |= group_executed

    changed = False
    for a in members:
        st = states[a]
        mine = [rid for rid in ctx.agent_requests.get(a, []) if rid in group.requests]
        st.rng.shuffle(mine)
        ctx.ops.rng_draws += len(mine)
        own_payload = payloads[a]
        for rid in mine:
            w = counts.get(rid, 0) - (1 if rid in own_payload else 0)
            was = rid in st.assigned
            now_assigned = stochastic_update(
                rid in group_executed, was, w, cfg.p_u, st.rng, ctx.ops
            )
            if now_assigned != was:
                changed = True
                if now_assigned:
                    st.assigned.add(rid)
                else:
                    st.assigned.discard(rid)
            if now_assigned:
                if not st.schedule.has_request(rid):
                    if schedule_insert(
                        st, rid, ctx.candidates.get((a, rid), []), ctx.now, ctx.ops
                    ):
                        changed = True
            elif rid in group_executed:
                # unassignment alone never evicts a scheduled task; only a
                # request executed elsewhere in the group is dropped here
                task = st.schedule.by_request.get(rid)
                if task is not None and task.task_id not in st.schedule.frozen:
                    st.schedule.remove(task)
                    changed = True
    for a in members:
        st = states[a]
        new_sched = set(st.schedule.by_request)
        if new_sched != st.scheduled_last:
            changed = True
        st.scheduled_last = new_sched
    if not changed:
        group.converged = True


# ---------------------------------------------------------------------------
# solvers


class Solver:
    name = "base"
    communicates = True

    def __init__(self, ctx: RunContext, cfg: SolverConfig):
        self.ctx = ctx
        self.cfg = cfg

    def on_event(self, event_index: int, now: float, active: frozenset[int]) -> None:
        raise NotImplementedError

    def _agent_rng(self, agent_id: int) -> random.Random:
        return random.Random(f"solver:{self.cfg.solver_seed}:{agent_id}")

    def _repair_rng(self, event_index: int, agent_id: int) -> random.Random:
        return random.Random(f"repair:{self.cfg.repair_seed}:{event_index}:{agent_id}")

    def _clear_mutable_state(self) -> None:
        """Reset to the executed/frozen facts only (the from-scratch variants)."""
        for st in self.ctx.states.values():
            for task in st.schedule.tasks():
                if task.task_id not in st.schedule.frozen:
                    st.schedule.remove(task)
            st.assigned = set()
            st.scheduled_last = set()


class NssSolver(Solver):
    """Neighborhood stochastic search; incremental repairs or from-scratch."""

    def __init__(self, ctx: RunContext, cfg: SolverConfig, incremental: bool):
        super().__init__(ctx, cfg)
        self.incremental = incremental
        self.name = "dnss" if incremental else "0nss"
        for st in ctx.states.values():
            st.rng = self._agent_rng(st.agent_id)

    def on_event(self, event_index: int, now: float, active: frozenset[int]) -> None:
        ctx = self.ctx
        # decomposition: pure local computation, zero messages
        active_requests = {rid: ctx.problem.requests[rid] for rid in active}
        candidates = {
            rid: ctx.request_agents.get(rid, set()) for rid in active
        }
        alloc = gnd(
            active_requests,
            ctx.targets,
            ctx.satellites,
            candidates,
            n=self.cfg.gnd_n,
            neighborhood_size=self.cfg.neighborhood_size,
        )
        self.last_allocation: Allocation = alloc
        if not self.incremental:
            self._clear_mutable_state()
        # iteration 0: state carried into the event, before any repair work
        ctx.record_iteration(0)
        groups = []
        for nb in alloc.neighborhoods:
            allowed = set(nb.requests)
            for a in nb.agents:
                repair(ctx.states[a], allowed, ctx, self._repair_rng(event_index, a))
            groups.append(SearchGroup(nb.agents, frozenset(nb.requests)))
        synchronous_search(groups, ctx, self.cfg, phase="search")


class DsaSolver(Solver):
    """Distributed stochastic algorithm over the full agent and request sets."""

    def __init__(self, ctx: RunContext, cfg: SolverConfig, incremental: bool):
        super().__init__(ctx, cfg)
        self.incremental = incremental
        self.name = "ddsa" if incremental else "0dsa"
        for st in ctx.states.values():
            st.rng = self._agent_rng(st.agent_id)

    def on_event(self, event_index: int, now: float, active: frozenset[int]) -> None:
        ctx = self.ctx
        if not self.incremental:
            self._clear_mutable_state()
        ctx.record_iteration(0)
        allowed = set(active)
        for a in sorted(ctx.states):
            repair(ctx.states[a], allowed, ctx, self._repair_rng(event_index, a))
        group = SearchGroup(tuple(sorted(ctx.states)), frozenset(active))
        synchronous_search([group], ctx, self.cfg, phase="search")


class GreedySolver(Solver):
    """Single ascending-start insertion pass per agent; no communication."""

    name = "greedy"
    communicates = False

    def on_event(self, event_index: int, now: float, active: frozenset[int]) -> None:
        ctx = self.ctx
        ctx.record_iteration(0)
        for a in sorted(ctx.states):
            st = ctx.states[a]
            sched = st.schedule
            for task in sched.tasks():
                if task.task_id not in sched.frozen and task.request_id not in active:
                    sched.remove(task)
            for task in self._pass_order(a, active):
                if task.start >= now and not sched.has_request(task.request_id):
                    if sched.can_insert(task):
                        sched.insert(task)
        ctx.record_iteration(1)

    def _pass_order(self, agent_id: int, active: frozenset[int]) -> list[Task]:
        return [
            t
            for t in sorted(
                self.ctx.problem.tasks_by_agent.get(agent_id, []),
                key=lambda t: (t.start, t.task_id),
            )
            if t.request_id in active
        ]


class RandomSolver(GreedySolver):
    """Greedy transition but with a seeded shuffled insertion order."""

    name = "random"
    communicates = False

    def _pass_order(self, agent_id: int, active: frozenset[int]) -> list[Task]:
        pool = [
            t
            for t in self.ctx.problem.tasks_by_agent.get(agent_id, [])
            if t.request_id in active
        ]
        rng = random.Random(
            f"random-solver:{self.cfg.random_solver_seed}:{self.ctx.event_index}:{agent_id}"
        )
        rng.shuffle(pool)
        self.ctx.ops.rng_draws += len(pool)
        return pool


def make_solver(name: str, ctx: RunContext, cfg: SolverConfig) -> Solver:
    if name == "dnss":
        return NssSolver(ctx, cfg, incremental=True)
    if name == "0nss":
        return NssSolver(ctx, cfg, incremental=False)
    if name == "ddsa":
        return DsaSolver(ctx, cfg, incremental=True)
    if name == "0dsa":
        return DsaSolver(ctx, cfg, incremental=False)
    if name == "greedy":
        return GreedySolver(ctx, cfg)
    if name == "random":
        return RandomSolver(ctx, cfg)
    raise ValueError(f"unknown solver {name!r}; expected one of {SOLVER_NAMES}")
