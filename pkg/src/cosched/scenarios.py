"""Scenario configuration, seeded generation, and lossless serialization.

A scenario file captures everything non-derivable: the config, the sampled
targets, the request campaign, and the change timeline. Geometry, candidate
tasks, and data volumes are regenerated from the recorded seeds on load, so
a scenario replays byte-identically anywhere.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import geometry
from .geometry import Constellation, OrbitalPlane, SatelliteSpec, Target
from .intervals import TimeInterval
from .problem import (
    ChangeEvent,
    Downlink,
    DynamicProblem,
    GenerationError,
    Request,
    build_snapshots,
    generate_campaign,
    generate_dynamics,
    generate_tasks,
)
from .solvers import SOLVER_NAMES, SolverConfig

SCENARIO_FORMAT_VERSION = 1
DAY_S = 86400.0


class ConfigError(Exception):
    """Invalid scenario configuration; message names the offending field."""


@dataclass
class ScenarioConfig:
    name: str = "custom"
    constellation: str = "planet"  # planet | walker | custom
    custom_planes: list[dict] | None = None  # inclination/altitude/raan/count
    max_off_nadir_deg: float | None = None  # None: constellation default
    memory_bytes: float = 125e9
    target_count: int = 634
    targets_path: str | None = None
    horizon_s: float = DAY_S
    periodicity: str = "uniform-5-12"  # fixed-3 | uniform-5-12 | fixed-<k>
    volatility: str = "uniform-3-5"  # uniform-3-5 | fixed-<k>
    scan_step_s: float = 10.0
    # seeds: all entropy is explicit
    scenario_seed: int = 2005
    repair_seed: int = 1
    solver_seed: int = 1234
    gnd_seed: int = 2
    random_solver_seed: int = 2023
    # solver hyperparameters
    p_u: float = 0.7
    max_iters: int = 20
    gnd_n: int = 2
    neighborhood_size: int = 10
    run_all_iterations: bool = False
    solvers: list[str] = field(default_factory=lambda: list(SOLVER_NAMES))
    oracle: str = "bnb"  # bnb | swo | none
    oracle_node_budget: int = 2_000_000
    oracle_time_budget_s: float = 120.0

    def validate(self) -> None:
        if self.constellation not in ("planet", "walker", "custom"):
            raise ConfigError(f"constellation: unknown value {self.constellation!r}")
        if self.constellation == "custom" and not self.custom_planes:
            raise ConfigError("custom_planes: required when constellation='custom'")
        if self.target_count < 1 and not self.targets_path:
            raise ConfigError(f"target_count: must be >= 1, got {self.target_count}")
        if self.horizon_s <= 0:
            raise ConfigError(f"horizon_s: must be positive, got {self.horizon_s}")
        if self.scan_step_s <= 0:
            raise ConfigError(f"scan_step_s: must be positive, got {self.scan_step_s}")
        if not 0.0 <= self.p_u <= 1.0:
            raise ConfigError(f"p_u: must lie in [0, 1], got {self.p_u}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters: must be >= 1, got {self.max_iters}")
        if self.gnd_n < 1:
            raise ConfigError(f"gnd_n: must be >= 1, got {self.gnd_n}")
        if self.neighborhood_size < 1:
            raise ConfigError(f"neighborhood_size: must be >= 1, got {self.neighborhood_size}")
        self._periodicity_range()
        self._volatility_range()
        for s in self.solvers:
            if s not in SOLVER_NAMES:
                raise ConfigError(f"solvers: unknown solver {s!r}")
        if self.oracle not in ("bnb", "swo", "none"):
            raise ConfigError(f"oracle: unknown mode {self.oracle!r}")

    def _periodicity_range(self) -> tuple[int, int]:
        return _parse_range("periodicity", self.periodicity)

    def _volatility_range(self) -> tuple[int, int]:
        return _parse_range("volatility", self.volatility)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            p_u=self.p_u,
            max_iters=self.max_iters,
            solver_seed=self.solver_seed,
            repair_seed=self.repair_seed,
            random_solver_seed=self.random_solver_seed,
            gnd_seed=self.gnd_seed,
            gnd_n=self.gnd_n,
            neighborhood_size=self.neighborhood_size,
            run_all_iterations=self.run_all_iterations,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        fields = {f: data[f] for f in data}
        known = set(cls.__dataclass_fields__)
        unknown = set(fields) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**fields)
        cfg.validate()
        return cfg


def _parse_range(field_name: str, spec: str) -> tuple[int, int]:
    try:
        if spec.startswith("fixed-"):
            k = int(spec.split("-", 1)[1])
            if k < 1:
                raise ValueError
            return (k, k)
        if spec.startswith("uniform-"):
            _, lo, hi = spec.split("-")
            lo, hi = int(lo), int(hi)
            if hi < lo or lo < 1:
                raise ValueError
            return (lo, hi)
    except (ValueError, IndexError):
        pass
    raise ConfigError(
        f"{field_name}: expected 'fixed-<k>' or 'uniform-<lo>-<hi>', got {spec!r}"
    )


PRESETS: dict[str, ScenarioConfig] = {
    "tiny": ScenarioConfig(
        name="tiny",
        constellation="custom",
        custom_planes=[
            {"inclination_deg": 97.0, "altitude_km": 500.0, "raan_deg": 0.0, "count": 4},
            {"inclination_deg": 97.0, "altitude_km": 500.0, "raan_deg": 90.0, "count": 4},
        ],
        max_off_nadir_deg=60.0,
        target_count=10,
        periodicity="fixed-3",
        volatility="uniform-3-5",
        neighborhood_size=4,
        oracle="bnb",
    ),
    "small-planet": ScenarioConfig(
        name="small-planet",
        constellation="planet",
        target_count=50,
        periodicity="fixed-3",
        volatility="uniform-3-5",
        oracle="swo",
    ),
    "small-walker": ScenarioConfig(
        name="small-walker",
        constellation="walker",
        target_count=100,
        periodicity="fixed-3",
        volatility="uniform-3-5",
        oracle="swo",
    ),
    "planet": ScenarioConfig(
        name="planet", constellation="planet", target_count=634, oracle="swo"
    ),
    "walker": ScenarioConfig(
        name="walker", constellation="walker", target_count=634, oracle="swo"
    ),
}


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = replace(PRESETS[name], **overrides)
    cfg.validate()
    return cfg


def build_constellation(config: ScenarioConfig) -> Constellation:
    if config.constellation == "planet":
        base = geometry.planet_constellation()
    elif config.constellation == "walker":
        base = geometry.walker_constellation()
    else:
        planes = tuple(
            OrbitalPlane(
                inclination_deg=p["inclination_deg"],
                altitude_km=p["altitude_km"],
                raan_deg=p["raan_deg"],
                count=p["count"],
            )
            for p in config.custom_planes
        )
        base = Constellation("custom", planes, config.max_off_nadir_deg or 45.0, config.memory_bytes)
    off_nadir = config.max_off_nadir_deg or base.max_off_nadir_deg
    return Constellation(base.name, base.planes, off_nadir, config.memory_bytes)


def sample_targets(config: ScenarioConfig, seed: int) -> list[Target]:
    if config.targets_path:
        return load_targets(config.targets_path)
    rng = random.Random(f"targets:{seed}")
    targets = []
    for i in range(config.target_count):
        # populated-latitude band; matches where observation demand is
        lat = rng.uniform(-60.0, 72.0)
        lon = rng.uniform(-180.0, 180.0)
        targets.append(Target(i, round(lat, 6), round(lon, 6)))
    return targets


def load_targets(path: str) -> list[Target]:
    """CSV with header id,lat,lon (or lat,lon with implicit ids)."""
    targets = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line or line.lower().startswith(("id", "lat", "#")):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) == 3:
                targets.append(Target(int(parts[0]), float(parts[1]), float(parts[2])))
            else:
                targets.append(Target(i, float(parts[0]), float(parts[1])))
    if not targets:
        raise ConfigError(f"targets_path: no targets found in {path}")
    return targets


@dataclass
class Scenario:
    config: ScenarioConfig
    index: int
    seed: int
    epoch_offset_s: float
    volatility: int
    targets: list[Target]
    constellation: Constellation
    problem: DynamicProblem

    @property
    def label(self) -> str:
        return f"{self.config.name}-{self.index:03d}"


def generate_scenario(config: ScenarioConfig, index: int = 0) -> Scenario:
    """Deterministically build scenario ``index`` of this config.

    The scenario seed is the configured base plus the index; every stream
    (targets, campaign, volumes, dynamics, epoch) is derived from it by a
    fixed label so the pieces stay independent.
    """
    config.validate()
    seed = config.scenario_seed + index
    horizon = TimeInterval(0.0, config.horizon_s)
    epoch_offset = random.Random(f"epoch:{seed}").uniform(0.0, DAY_S)
    constellation = build_constellation(config)
    targets = sample_targets(config, seed)

    campaign = generate_campaign(
        targets, horizon, config._periodicity_range(), random.Random(f"campaign:{seed}")
    )
    vol_lo, vol_hi = config._volatility_range()
    volatility = random.Random(f"volatility:{seed}").randint(vol_lo, vol_hi)
    initial, events = generate_dynamics(
        campaign, volatility, horizon, random.Random(f"dynamics:{seed}")
    )
    problem = _assemble_problem(
        constellation, targets, campaign, initial, events, horizon, seed, config
    )
    return Scenario(
        config=config,
        index=index,
        seed=seed,
        epoch_offset_s=epoch_offset,
        volatility=volatility,
        targets=targets,
        constellation=constellation,
        problem=problem,
    )


def _assemble_problem(
    constellation: Constellation,
    targets: list[Target],
    campaign: list[Request],
    initial: set[int],
    events: list[ChangeEvent],
    horizon: TimeInterval,
    seed: int,
    config: ScenarioConfig,
) -> DynamicProblem:
    epoch_offset = random.Random(f"epoch:{seed}").uniform(0.0, DAY_S)
    sats = constellation.satellites()
    access = geometry.batch_access_windows(
        constellation, targets, horizon, config.scan_step_s, epoch_offset
    )
    passes = geometry.batch_downlink_windows(
        constellation, list(geometry.DEFAULT_STATIONS), horizon, config.scan_step_s, epoch_offset
    )

    downlinks_by_agent: dict[int, list[Downlink]] = {}
    next_dl = 0
    for sat in sats:
        dls = []
        for window, capacity in passes[sat.agent_id]:
            dls.append(Downlink(next_dl, sat.agent_id, window.start, window.end, capacity))
            next_dl += 1
        downlinks_by_agent[sat.agent_id] = dls

    tasks_by_agent: dict[int, list] = {}
    all_tasks: dict[int, object] = {}
    next_task = 0
    for sat in sats:
        windows_by_target = {
            t.target_id: access[(sat.agent_id, t.target_id)] for t in targets
        }
        agent_tasks = generate_tasks(
            sat.agent_id,
            campaign,
            windows_by_target,
            random.Random(f"tasks:{seed}:{sat.agent_id}"),
            id_start=next_task,
        )
        next_task += len(agent_tasks)
        tasks_by_agent[sat.agent_id] = agent_tasks
        for t in agent_tasks:
            all_tasks[t.task_id] = t

    return DynamicProblem(
        horizon=horizon,
        agents=sats,
        requests={r.request_id: r for r in campaign},
        tasks=all_tasks,
        tasks_by_agent=tasks_by_agent,
        downlinks_by_agent=downlinks_by_agent,
        snapshots=build_snapshots(initial, events, horizon),
    )


# ---------------------------------------------------------------------------
# serialization


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "format_version": SCENARIO_FORMAT_VERSION,
        "config": sc.config.to_dict(),
        "index": sc.index,
        "seed": sc.seed,
        "targets": [[t.target_id, t.latitude_deg, t.longitude_deg] for t in sc.targets],
        "requests": [
            [r.request_id, r.target_id, r.start, r.end]
            for r in sorted(sc.problem.requests.values(), key=lambda r: r.request_id)
        ],
        "initial_active": sorted(sc.problem.snapshots[0].active),
        "events": [
            [ev.time, list(ev.added), list(ev.removed)] for ev in sc.problem.events()
        ],
        "volatility": sc.volatility,
        "epoch_offset_s": sc.epoch_offset_s,
    }


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), sort_keys=True, indent=1) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    """Rebuild a scenario from file; derived data is regenerated from seeds.

    The recorded campaign and timeline are cross-checked against the
    regenerated ones, so silent drift between writer and reader fails loudly.
    """
    data = json.loads(Path(path).read_text())
    if data.get("format_version") != SCENARIO_FORMAT_VERSION:
        raise ConfigError(f"unsupported scenario format {data.get('format_version')}")
    config = ScenarioConfig.from_dict(data["config"])
    sc = generate_scenario(config, data["index"])
    recorded = scenario_to_dict(sc)
    for key in ("seed", "targets", "requests", "initial_active", "events"):
        if recorded[key] != data[key]:
            raise ConfigError(f"scenario file {path} does not match regeneration ({key})")
    return sc
