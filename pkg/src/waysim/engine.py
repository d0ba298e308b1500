"""Simulation driver: world construction, sequential request processing,
trajectories, metrics and seed sweeps."""

from __future__ import annotations

import enum
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agents import (
    Credential,
    Outcome,
    RequestEnvelope,
    Stage,
    WorldState,
    process_request,
)
from .behavior import make_workload
from .config import ConfigError, ScenarioConfig, validate_config
from .trust_core import ActionClass


class EntityKind(enum.Enum):
    USER = "User"
    DOMAIN = "Domain"


@dataclass(frozen=True)
class TrajectoryPoint:
    iteration: int
    entity_kind: EntityKind
    entity_id: str
    action: Optional[ActionClass]
    value: float
    decision: Stage


@dataclass(frozen=True)
class Metrics:
    stage_counts: dict
    time_to_threshold: dict
    removals: dict
    final_trust: dict
    final_domain_trust: dict


@dataclass
class SimulationReport:
    config: ScenarioConfig
    seed: int
    trajectories: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    metrics: Optional[Metrics] = None

    @property
    def events(self) -> list:
        return [e for o in self.outcomes for e in o.events]


def make_rng(config: ScenarioConfig, stream: int) -> np.random.Generator:
    """Independent generator for one purpose (0 = workload, 1 = behavior)."""
    child = np.random.SeedSequence(config.seed).spawn(2)[stream]
    bitgen = getattr(np.random, config.rng)
    return np.random.Generator(bitgen(child))


def init_world(config: ScenarioConfig) -> WorldState:
    problems = validate_config(config)
    if problems:
        raise ConfigError(problems)
    world = WorldState(config.user_layer, config.domain_layer, config.removal)
    for d in config.domains:
        world.add_domain(d)
    for u in config.users:
        world.add_user(u.user_id, u.domain_id, u.password)
    return world


class Simulation:
    """Step-wise run of one scenario.  ``run()`` drives it to completion."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.world = init_world(config)
        self._workload = make_workload(
            [u.user_id for u in config.users],
            config.tasks,
            config.request_count,
            make_rng(config, 0),
            config.selection_policy,
            config.credential_error_rate,
        )
        self._behavior_rng = make_rng(config, 1)
        self._profiles = {u.user_id: u.profile(config.p_wrong) for u in config.users}
        self._next = 0
        self.report = SimulationReport(config, config.seed)

    @property
    def done(self) -> bool:
        return self._next >= len(self._workload)

    def _sample(self, user_id: str) -> ActionClass:
        return self._profiles[user_id].sample(self._behavior_rng)

    def envelope(self, index: int) -> RequestEnvelope:
        item = self._workload[index]
        spec = self.config.user(item.user_id)
        password = spec.password + "#typo" if item.bad_credential else spec.password
        return RequestEnvelope(
            request_id=index + 1,
            user_id=item.user_id,
            credential=Credential(item.user_id, password),
            task=item.task,
            domain_id=spec.domain_id,
        )

    def peek(self) -> RequestEnvelope:
        """Envelope the next ``step()`` will process."""
        return self.envelope(self._next)

    def step(self) -> Outcome:
        if self.done:
            raise StopIteration
        env = self.envelope(self._next)
        self._next += 1
        outcome = process_request(self.world, env, self._sample)
        self.report.outcomes.append(outcome)
        self._trace(outcome)
        return outcome

    def _trace(self, outcome: Outcome) -> None:
        w = self.world
        action = outcome.decision.action_taken
        self.report.trajectories.append(TrajectoryPoint(
            outcome.request_id, EntityKind.USER, outcome.user_id, action,
            w.users[outcome.user_id].ledger.value, outcome.stage,
        ))
        # The domain is touched only when the request reached CSP_A.
        if any(g.gate == "csp_a" for g in outcome.gates) and outcome.domain_id in w.domains:
            self.report.trajectories.append(TrajectoryPoint(
                outcome.request_id, EntityKind.DOMAIN, outcome.domain_id, action,
                w.domains[outcome.domain_id].ledger.value, outcome.stage,
            ))

    def __iter__(self):
        while not self.done:
            yield self.step()

    def run(self) -> SimulationReport:
        for _ in self:
            pass
        self.report.metrics = compute_metrics(self.report, self.world)
        return self.report


def run(config: ScenarioConfig) -> SimulationReport:
    return Simulation(config).run()


def time_to_threshold(report: SimulationReport, entity_id: str) -> Optional[int]:
    """First iteration at which the entity's trust is at or below its layer threshold."""
    cfg = report.config
    for p in report.trajectories:
        if p.entity_id != entity_id:
            continue
        threshold = (cfg.user_layer if p.entity_kind is EntityKind.USER
                     else cfg.domain_layer).threshold
        if p.value <= threshold:
            return p.iteration
    return None


def compute_metrics(report: SimulationReport, world: WorldState) -> Metrics:
    counts = {s: 0 for s in Stage}
    removals = {}
    for o in report.outcomes:
        counts[o.stage] += 1
        if o.removed:
            removals[o.user_id] = o.request_id
    user_ids = [u.user_id for u in report.config.users]
    ttt = {uid: time_to_threshold(report, uid) for uid in user_ids}
    final = {uid: world.users[uid].ledger.value for uid in user_ids}
    final_dom = {d: world.domains[d].ledger.value for d in report.config.domains}
    return Metrics(counts, ttt, removals, final, final_dom)


# -- seed sweeps -------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    seed: int
    user_id: str
    user_type: str
    final_trust: float
    time_to_threshold: Optional[int]
    removed_at: Optional[int]


def _sweep_one(args) -> list:
    config, seed = args
    report = run(config.with_seed(seed))
    m = report.metrics
    return [
        SweepRow(seed, u.user_id, u.user_type.value, m.final_trust[u.user_id],
                 m.time_to_threshold[u.user_id], m.removals.get(u.user_id))
        for u in config.users
    ]


def sweep(config: ScenarioConfig, seeds, jobs: int = 1) -> list:
    """Run ``config`` once per seed.  Rows come back ordered by seed then user,
    whatever the execution order."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seed range is empty")
    tasks = [(config, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        chunks = [_sweep_one(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {u.user_id: i for i, u in enumerate(config.users)}
    rows.sort(key=lambda r: (r.seed, order[r.user_id]))
    return rows


@dataclass(frozen=True)
class TypeSummary:
    user_type: str
    runs: int
    mean_final_trust: float
    reach_fraction: float
    # Never-reached runs count as request_count + 1 (restricted mean).
    mean_time_to_threshold: float
    # Mean over the runs that did reach the threshold (nan if none did).
    mean_time_to_threshold_reached: float


def summarize(rows, request_count: int) -> list:
    by_type = {}
    for r in rows:
        by_type.setdefault(r.user_type, []).append(r)
    out = []
    for utype, group in by_type.items():
        reached = [r.time_to_threshold for r in group if r.time_to_threshold is not None]
        censored = [request_count + 1 if r.time_to_threshold is None else r.time_to_threshold
                    for r in group]
        out.append(TypeSummary(
            utype,
            len(group),
            statistics.fmean(r.final_trust for r in group),
            len(reached) / len(group),
            statistics.fmean(censored),
            statistics.fmean(reached) if reached else float("nan"),
        ))
    return out
