"""Command-line harness: generate scenarios, run benchmark sweeps, replay runs.

Exit codes: 0 success, 2 configuration error, 3 solver invariant violation or
replay mismatch, 4 oracle budget exhausted where an optimum was required.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .oracle import run_oracle
from .problem import check_constraints, dynamic_utility
from .scenarios import (
    ConfigError,
    PRESETS,
    Scenario,
    ScenarioConfig,
    generate_scenario,
    load_scenario,
    preset,
    save_scenario,
)
from .sim import RunResult, run
from .solvers import SOLVER_NAMES, SolverInvariantError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_ORACLE_BUDGET = 4

TABLE_ORDER = ("random", "greedy", "dnss", "0nss", "ddsa", "0dsa")


def _load_config(args) -> ScenarioConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        cfg = ScenarioConfig.from_dict(data)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("either --preset or --config is required")
    overrides = {}
    for field in ("target_count", "horizon_s", "volatility", "periodicity", "oracle"):
        value = getattr(args, field.replace("-", "_"), None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "solvers", None):
        overrides["solvers"] = args.solvers.split(",")
    if getattr(args, "fixed_iterations", False):
        overrides["run_all_iterations"] = True
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        sc = generate_scenario(cfg, i)
        path = out / f"{sc.label}.json"
        save_scenario(sc, path)
        p = sc.problem
        print(
            f"{path}: agents={len(p.agents)} requests={len(p.requests)} "
            f"active-ever={len(p.ever_active)} events={p.num_changes} "
            f"tasks={len(p.tasks)}"
        )
    return EXIT_OK


def _write_trace_csv(path: Path, scenario: Scenario, solver: str, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["event", "iteration", "solver", "satisfaction_pct", "message_bytes", "op_counter"]
        )
        for r in result.metrics.trace:
            w.writerow([r.event, r.iteration, solver, f"{r.satisfaction_pct:.4f}", r.message_bytes, r.op_count])


def cmd_bench(args) -> int:
    paths = sorted(Path(args.scenarios).glob("*.json"))
    if not paths:
        print(f"no scenario files in {args.scenarios}", file=sys.stderr)
        return EXIT_CONFIG
    if args.solvers:
        for name in args.solvers.split(","):
            if name not in SOLVER_NAMES:
                raise ConfigError(f"solvers: unknown solver {name!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    budget_hit = False
    for path in paths:
        sc = load_scenario(path)
        cfg = sc.config
        if args.solvers:
            solvers = args.solvers.split(",")
        else:
            solvers = cfg.solvers
        oracle_mode = args.oracle or cfg.oracle
        solver_cfg = cfg.solver_config()
        if args.fixed_iterations:
            solver_cfg.run_all_iterations = True

        oracle_res = None
        if oracle_mode != "none":
            oracle_res = run_oracle(
                sc.problem,
                oracle_mode,
                node_budget=cfg.oracle_node_budget,
                time_budget_s=cfg.oracle_time_budget_s,
            )
            if oracle_mode == "bnb" and not oracle_res.proven_optimal:
                budget_hit = True
            oracle_rec = {
                "scenario": sc.label,
                "mode": oracle_mode,
                "satisfied": oracle_res.satisfied,
                "satisfaction_pct": oracle_res.satisfaction_pct(len(sc.problem.ever_active)),
                "proven_optimal": oracle_res.proven_optimal,
                "nodes": oracle_res.nodes,
                "rounds": oracle_res.rounds,
            }
            (out / f"{sc.label}_oracle.json").write_text(
                json.dumps(oracle_rec, indent=1, sort_keys=True) + "\n"
            )

        for name in solvers:
            try:
                result = run(sc.problem, sc.targets, name, solver_cfg)
            except SolverInvariantError as exc:
                print(f"solver invariant violation: {exc}", file=sys.stderr)
                return EXIT_INVARIANT
            m = result.metrics
            record = {
                "scenario": sc.label,
                "scenario_file": str(path),
                "solver": name,
                "solver_config": asdict(solver_cfg),
                "run": result.to_record(),
                "wall_time_s": m.wall_time_s,
            }
            if oracle_res is not None:
                gap = oracle_res.satisfaction_pct(m.total_requests) - m.satisfaction_pct
                record["gap_pct"] = gap
                record["gap_reference"] = (
                    "optimal" if oracle_res.proven_optimal else "lower-bound"
                )
            (out / f"{sc.label}_{name}.json").write_text(
                json.dumps(record, indent=1, sort_keys=True) + "\n"
            )
            _write_trace_csv(out / f"{sc.label}_{name}_trace.csv", sc, name, result)
            rows.append(record)

    table = _format_table(rows)
    (out / "results_table.txt").write_text(table + "\n")
    print(table)
    return EXIT_ORACLE_BUDGET if (budget_hit and args.require_optimal) else EXIT_OK


def _format_table(rows: list[dict]) -> str:
    by_solver: dict[str, list[dict]] = {}
    for r in rows:
        by_solver.setdefault(r["solver"], []).append(r)
    lines = [
        f"{'Algorithm':<10} {'Opt. Gap (%)':>14} {'Time (ms)':>12} {'Messages (KB)':>15}  Reference"
    ]
    for name in TABLE_ORDER:
        if name not in by_solver:
            continue
        rs = by_solver[name]
        gaps = [r["gap_pct"] for r in rs if "gap_pct" in r]
        gap_str = f"{sum(gaps)/len(gaps):.3f}" if gaps else "n/a"
        refs = {r.get("gap_reference", "n/a") for r in rs}
        ref = "optimal" if refs == {"optimal"} else ("/".join(sorted(refs)))
        ms = 1000.0 * sum(r["wall_time_s"] for r in rs) / len(rs)
        kb = sum(r["run"]["metrics"]["message_bytes"] for r in rs) / len(rs) / 1000.0
        lines.append(f"{name:<10} {gap_str:>14} {ms:>12.1f} {kb:>15.1f}  {ref}")
    return "\n".join(lines)


def cmd_replay(args) -> int:
    record = json.loads(Path(args.run).read_text())
    sc = load_scenario(record["scenario_file"])
    solver_cfg = sc.config.solver_config()
    for key, value in record["solver_config"].items():
        setattr(solver_cfg, key, value)
    result = run(sc.problem, sc.targets, record["solver"], solver_cfg)
    fresh = result.to_record()
    if fresh != record["run"]:
        print("replay mismatch: stored run differs from deterministic re-run", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"replay ok: {record['scenario']} / {record['solver']} reproduced bit-identically")
    return EXIT_OK


def cmd_verify(args) -> int:
    run_files = sorted(Path(args.runs).glob("*_*.json"))
    run_files = [p for p in run_files if not p.name.endswith("_oracle.json")]
    failures = 0
    scenarios: dict[str, Scenario] = {}
    for path in run_files:
        record = json.loads(path.read_text())
        if "run" not in record:
            continue
        sc_file = record["scenario_file"]
        if sc_file not in scenarios:
            scenarios[sc_file] = load_scenario(sc_file)
        sc = scenarios[sc_file]
        problem = sc.problem
        ok = True
        # schedule trace re-scores to the recorded utility
        snapshots = [set(s) for s in record["run"]["snapshots"]]
        try:
            satisfied = dynamic_utility(snapshots, problem)
        except ValueError as exc:
            print(f"{path.name}: snapshot consistency violated: {exc}")
            ok = False
            satisfied = None
        if satisfied is not None and satisfied != record["run"]["metrics"]["satisfied"]:
            print(f"{path.name}: recorded utility {record['run']['metrics']['satisfied']} != replay {satisfied}")
            ok = False
        # final schedules feasible
        agents = {a.agent_id: a for a in problem.agents}
        for aid_str, task_ids in record["run"]["final_schedules"].items():
            aid = int(aid_str)
            tasks = [problem.tasks[t] for t in task_ids]
            verdict = check_constraints(
                tasks, agents[aid].memory_bytes, problem.downlinks_by_agent.get(aid, [])
            )
            if not verdict:
                print(f"{path.name}: agent {aid} infeasible: {verdict.reason}")
                ok = False
        # zero-communication baselines
        if record["solver"] in ("greedy", "random"):
            if record["run"]["metrics"]["message_bytes"] != 0:
                print(f"{path.name}: {record['solver']} sent messages")
                ok = False
        if ok:
            print(f"{path.name}: ok")
        else:
            failures += 1
    if failures:
        print(f"{failures} run(s) failed verification", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosched",
        description="Dynamic constellation observation scheduling harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write seeded scenario files")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--config", help="scenario config JSON (overrides --preset)")
    g.add_argument("--count", type=int, default=1, help="number of scenarios")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--target-count", type=int, dest="target_count")
    g.add_argument("--horizon-s", type=float, dest="horizon_s")
    g.add_argument("--volatility", help="fixed-<k> or uniform-<lo>-<hi>")
    g.add_argument("--periodicity", help="fixed-<k> or uniform-<lo>-<hi>")
    g.add_argument("--oracle", choices=("bnb", "swo", "none"))
    g.add_argument("--solvers", help="comma-separated solver list")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run solver sweeps over generated scenarios")
    b.add_argument("--scenarios", required=True, help="directory of scenario files")
    b.add_argument("--out", required=True, help="results directory")
    b.add_argument("--solvers", help=f"comma-separated subset of {','.join(SOLVER_NAMES)}")
    b.add_argument("--oracle", choices=("bnb", "swo", "none"))
    b.add_argument("--fixed-iterations", action="store_true", help="disable early convergence exit")
    b.add_argument("--require-optimal", action="store_true", help="exit 4 if the exact oracle ran out of budget")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("replay", help="re-run a persisted run record and compare")
    r.add_argument("--run", required=True, help="run record JSON from bench")
    r.set_defaults(func=cmd_replay)

    v = sub.add_parser("verify", help="invariant suite over persisted run records")
    v.add_argument("--runs", required=True, help="directory of run records")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverInvariantError as exc:
        print(f"solver invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
