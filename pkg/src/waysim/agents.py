"""Proxy, broker agent (CSU_A), provider (CSP) and provider agent (CSP_A).

A request travels proxy -> CSU_A -> CSP -> CSP_A.  The proxy checks the
credentials, CSU_A gates on the user's trust (UTT), CSP_A gates on the trust
of the domain the request came from (DTT).  Gates only read; trust tables are
updated after the task has executed, and negative behavior is reported back
to CSU_A which may remove the user.

Every hop is recorded as an :class:`AuditEntry` tagged with one of the fifteen
protocol steps, so a run can be traced against the sequence diagram.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from .behavior import TaskSpec
from .trust_core import (
    ActionClass,
    LayerParams,
    TrustLedger,
    passes_threshold,
    update_trust,
)

log = logging.getLogger(__name__)


class Step(enum.IntEnum):
    CREDENTIALS = 1
    PROXY_AUTH = 2
    TO_CSU_A = 3
    CSU_A_CHECK = 4
    CSU_A_UPDATE = 5
    FORWARD_TO_CSP = 6
    REACH_CSP = 7
    TO_CSP_A = 8
    CSP_A_CHECK = 9
    CSP_A_UPDATE = 10
    NOTIFY_CSU_A = 11
    TRUST_SATISFIED = 12
    SEND_DATA = 13
    DATA_ROUTED = 14
    DATA_RECEIVED = 15

    @property
    def label(self) -> str:
        return f"{self.value:02d}-{self.name.lower().replace('_', '-')}"

    @classmethod
    def from_label(cls, label: str) -> "Step":
        return cls(int(label.split("-", 1)[0]))


@dataclass(frozen=True)
class AuditEntry:
    request_id: int
    step: Step
    entity: str
    detail: str = ""


class Stage(enum.Enum):
    DROPPED_AUTH = "DroppedAuth"
    DROPPED_USER_TRUST = "DroppedUserTrust"
    DROPPED_DOMAIN_TRUST = "DroppedDomainTrust"
    DROPPED_REMOVED_USER = "DroppedRemovedUser"
    DELIVERED = "Delivered"


class UserStatus(enum.Enum):
    ACTIVE = "Active"
    REMOVED = "Removed"


@dataclass(frozen=True)
class Credential:
    user_id: str
    password: str

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")


@dataclass
class UserRecord:
    user_id: str
    domain_id: str
    credential: Credential
    ledger: TrustLedger
    status: UserStatus = UserStatus.ACTIVE
    strikes: int = 0


@dataclass
class DomainRecord:
    domain_id: str
    ledger: TrustLedger


@dataclass(frozen=True)
class RemovalPolicy:
    """When CSU_A expels a user: after ``strike_limit`` reports, or (if
    ``threshold_trigger``) as soon as the user's trust is at or below the
    user-layer threshold."""

    strike_limit: int = 3
    threshold_trigger: bool = True

    def __post_init__(self):
        if self.strike_limit < 1:
            raise ValueError("strike_limit must be >= 1")


@dataclass(frozen=True)
class RequestEnvelope:
    request_id: int
    user_id: str
    credential: Credential
    task: TaskSpec
    domain_id: str


@dataclass(frozen=True)
class Decision:
    stage: Stage
    # Sampled behavior; present only when the task actually executed.
    action_taken: Optional[ActionClass] = None


@dataclass(frozen=True)
class ViolationReport:
    user_id: str
    domain_id: str
    action: ActionClass
    request_id: int

    def __post_init__(self):
        if not self.action.is_negative:
            raise ValueError("only negative actions are reported")


@dataclass(frozen=True)
class GateCheck:
    gate: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None


@dataclass(frozen=True)
class Outcome:
    request_id: int
    user_id: str
    domain_id: str
    decision: Decision
    events: tuple
    gates: tuple
    report: Optional[ViolationReport] = None
    removed: bool = False

    @property
    def stage(self) -> Stage:
        return self.decision.stage


@dataclass
class WorldState:
    user_layer: LayerParams
    domain_layer: LayerParams
    removal: RemovalPolicy = field(default_factory=RemovalPolicy)
    users: dict = field(default_factory=dict)
    domains: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)

    def add_domain(self, domain_id: str) -> DomainRecord:
        rec = DomainRecord(domain_id, TrustLedger.fresh(self.domain_layer))
        self.domains[domain_id] = rec
        return rec

    def add_user(self, user_id: str, domain_id: str, password: str) -> UserRecord:
        if domain_id not in self.domains:
            raise KeyError(f"user {user_id!r} references unknown domain {domain_id!r}")
        rec = UserRecord(
            user_id, domain_id, Credential(user_id, password),
            TrustLedger.fresh(self.user_layer),
        )
        self.users[user_id] = rec
        return rec

    def ledgers(self) -> dict:
        """Current ledger of every entity, keyed by ("user"|"domain", id)."""
        out = {("user", u): r.ledger for u, r in self.users.items()}
        out.update({("domain", d): r.ledger for d, r in self.domains.items()})
        return out


def proxy_authenticate(world: WorldState, env: RequestEnvelope) -> Optional[Stage]:
    """Return None when the request may pass, otherwise the drop stage."""
    rec = world.users.get(env.credential.user_id)
    if rec is None or env.credential.user_id != env.user_id:
        return Stage.DROPPED_AUTH
    if rec.credential.password != env.credential.password:
        return Stage.DROPPED_AUTH
    if rec.status is UserStatus.REMOVED:
        return Stage.DROPPED_REMOVED_USER
    return None


def csua_gate(world: WorldState, user_id: str) -> bool:
    return passes_threshold(world.users[user_id].ledger, world.user_layer)


def cspa_gate(world: WorldState, domain_id: str) -> bool:
    rec = world.domains.get(domain_id)
    if rec is None:
        return False
    return passes_threshold(rec.ledger, world.domain_layer)


def record_outcome(
    world: WorldState, env: RequestEnvelope, action: ActionClass
) -> Optional[ViolationReport]:
    """Fold an executed action into the DTT and UTT.

    Returns the violation report to route to CSU_A when the action was
    negative, otherwise None.
    """
    dom = world.domains[env.domain_id]
    dom.ledger = update_trust(dom.ledger, action, world.domain_layer)
    user = world.users[env.user_id]
    user.ledger = update_trust(user.ledger, action, world.user_layer)
    if action.is_negative:
        return ViolationReport(env.user_id, env.domain_id, action, env.request_id)
    return None


def csua_handle_report(world: WorldState, report: ViolationReport) -> bool:
    """Apply a violation report; return True if the user was removed by it."""
    user = world.users.get(report.user_id)
    if user is None:
        log.warning("violation report for unknown user %r ignored", report.user_id)
        return False
    world.reports.append(report)
    user.strikes += 1
    if user.status is UserStatus.REMOVED:
        return False
    policy = world.removal
    if user.strikes >= policy.strike_limit or (
        policy.threshold_trigger and user.ledger.value <= world.user_layer.threshold
    ):
        user.status = UserStatus.REMOVED
        return True
    return False


def process_request(
    world: WorldState,
    env: RequestEnvelope,
    sample: Callable[[str], ActionClass],
) -> Outcome:
    """Run one request through the whole pipeline, mutating ``world``.

    ``sample(user_id)`` is called at most once, and only when the task
    actually executes.
    """
    rid = env.request_id
    events = [AuditEntry(rid, Step.CREDENTIALS, env.user_id, f"task={env.task.task_id}")]
    gates = []

    def finish(stage, action=None, report=None, removed=False):
        return Outcome(
            rid, env.user_id, env.domain_id, Decision(stage, action),
            tuple(events), tuple(gates), report, removed,
        )

    auth = proxy_authenticate(world, env)
    gates.append(GateCheck("proxy", auth is None))
    if auth is not None:
        events.append(AuditEntry(rid, Step.PROXY_AUTH, env.user_id, f"drop {auth.value}"))
        return finish(auth)
    events.append(AuditEntry(rid, Step.PROXY_AUTH, env.user_id, "pass"))
    events.append(AuditEntry(rid, Step.TO_CSU_A, env.user_id, ""))

    user = world.users[env.user_id]
    ok = csua_gate(world, env.user_id)
    v = user.ledger.value
    gates.append(GateCheck("csu_a", ok, v, world.user_layer.threshold))
    events.append(AuditEntry(rid, Step.CSU_A_CHECK, env.user_id, f"v={v!r}"))
    events.append(AuditEntry(
        rid, Step.CSU_A_UPDATE, env.user_id,
        f"{'pass' if ok else 'fail'} threshold={world.user_layer.threshold!r}"))
    if not ok:
        events.append(AuditEntry(rid, Step.FORWARD_TO_CSP, env.user_id, "drop"))
        return finish(Stage.DROPPED_USER_TRUST)
    events.append(AuditEntry(rid, Step.FORWARD_TO_CSP, env.user_id, "forward"))
    events.append(AuditEntry(rid, Step.REACH_CSP, env.user_id, f"task={env.task.task_id}"))
    events.append(AuditEntry(rid, Step.TO_CSP_A, env.domain_id, ""))

    ok = cspa_gate(world, env.domain_id)
    dom = world.domains.get(env.domain_id)
    dv = dom.ledger.value if dom is not None else None
    gates.append(GateCheck("csp_a", ok, dv, world.domain_layer.threshold))
    events.append(AuditEntry(rid, Step.CSP_A_CHECK, env.domain_id,
                             f"V={dv!r}" if dom is not None else "unknown domain"))
    events.append(AuditEntry(
        rid, Step.CSP_A_UPDATE, env.domain_id,
        f"{'pass' if ok else 'fail'} threshold={world.domain_layer.threshold!r}"))
    if not ok:
        # CSU_A is told about the drop; no task ran, so nothing is sampled or scored.
        events.append(AuditEntry(rid, Step.NOTIFY_CSU_A, env.domain_id,
                                 f"drop; notify csu_a user={env.user_id}"))
        return finish(Stage.DROPPED_DOMAIN_TRUST)
    events.append(AuditEntry(rid, Step.TRUST_SATISFIED, env.domain_id, ""))

    action = sample(env.user_id)
    events.append(AuditEntry(rid, Step.SEND_DATA, env.user_id, f"action={action.value}"))
    report = record_outcome(world, env, action)
    events.append(AuditEntry(rid, Step.CSP_A_UPDATE, env.domain_id,
                             f"dtt V={world.domains[env.domain_id].ledger.value!r}"))
    events.append(AuditEntry(rid, Step.CSU_A_UPDATE, env.user_id,
                             f"utt v={user.ledger.value!r}"))
    removed = False
    if report is not None:
        events.append(AuditEntry(rid, Step.NOTIFY_CSU_A, env.domain_id,
                                 f"report user={env.user_id} action={action.value}"))
        removed = csua_handle_report(world, report)
        events.append(AuditEntry(rid, Step.CSU_A_UPDATE, env.user_id,
                                 f"strikes={user.strikes}" + (" removed" if removed else "")))
    events.append(AuditEntry(rid, Step.DATA_ROUTED, env.user_id, "via proxy"))
    events.append(AuditEntry(rid, Step.DATA_RECEIVED, env.user_id, ""))
    return finish(Stage.DELIVERED, action, report, removed)
