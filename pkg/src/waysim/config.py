"""Scenario configuration: schema, validation and JSON (de)serialization."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .agents import RemovalPolicy
from .behavior import SelectionPolicy, TaskKind, TaskSpec, UserProfile, UserType
from .trust_core import LayerParams, layer_problems

RNG_NAMES = ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937")


class ConfigError(ValueError):
    """Invalid scenario configuration.  ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class UserSpec:
    user_id: str
    domain_id: str
    user_type: UserType
    password: str
    p_positive: Optional[float] = None

    def profile(self, p_wrong: float) -> UserProfile:
        return UserProfile(self.user_type, self.p_positive, p_wrong)


@dataclass(frozen=True)
class ScenarioConfig:
    users: tuple
    domains: tuple
    user_layer: LayerParams
    domain_layer: LayerParams
    request_count: int
    tasks: tuple = (TaskSpec("1001"),)
    removal: RemovalPolicy = field(default_factory=RemovalPolicy)
    selection_policy: SelectionPolicy = SelectionPolicy.UNIFORM_RANDOM
    p_wrong: float = 0.0
    credential_error_rate: float = 0.0
    seed: int = 0
    rng: str = "PCG64"

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)

    def user(self, user_id: str) -> UserSpec:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rng": self.rng,
            "request_count": self.request_count,
            "selection_policy": self.selection_policy.value,
            "p_wrong": self.p_wrong,
            "credential_error_rate": self.credential_error_rate,
            "tasks": [{"task_id": t.task_id, "kind": t.kind.value} for t in self.tasks],
            "domains": list(self.domains),
            "users": [_user_dict(u) for u in self.users],
            "user_layer": self.user_layer.to_dict(),
            "domain_layer": self.domain_layer.to_dict(),
            "removal": {
                "strike_limit": self.removal.strike_limit,
                "threshold_trigger": self.removal.threshold_trigger,
            },
        }


def _user_dict(u: UserSpec) -> dict:
    d = {
        "user_id": u.user_id,
        "domain_id": u.domain_id,
        "user_type": u.user_type.value,
        "password": u.password,
    }
    if u.p_positive is not None:
        d["p_positive"] = u.p_positive
    return d


def _num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def config_problems(data) -> list[str]:
    """Every violation in a raw config mapping.  Does not stop at the first."""
    if not isinstance(data, dict):
        return ["config must be a JSON object"]
    problems = []

    for name in ("user_layer", "domain_layer"):
        layer = data.get(name)
        if not isinstance(layer, dict):
            problems.append(f"{name}: missing or not an object")
            continue
        unknown = set(layer) - {
            "w_positive", "w_wrong", "w_malicious", "m", "threshold", "initial_trust"}
        problems.extend(f"{name}.{k}: unknown field" for k in sorted(unknown))
        w_mal = layer.get("w_malicious", 0.8)
        problems.extend(layer_problems(
            layer.get("w_positive", 1.0),
            layer.get("w_wrong", w_mal),
            w_mal,
            layer.get("m", 1.0),
            layer.get("threshold", 0.2),
            layer.get("initial_trust", 1.0),
            prefix=f"{name}.",
        ))

    rc = data.get("request_count")
    if not _int(rc) or rc < 1:
        problems.append(f"request_count ≥ 1 (integer) required, got {rc!r}")

    domains = data.get("domains")
    if not isinstance(domains, list) or not domains:
        problems.append("domains: non-empty list required")
        domains = []
    else:
        for d in domains:
            if not isinstance(d, str) or not d or _bad_id(d):
                problems.append(f"domains: invalid domain id {d!r}")
        if len(set(map(str, domains))) != len(domains):
            problems.append("domains: duplicate domain id")

    users = data.get("users")
    if not isinstance(users, list) or not users:
        problems.append("users: non-empty list required")
        users = []
    seen = set()
    p_wrong = data.get("p_wrong", 0.0)
    for i, u in enumerate(users):
        where = f"users[{i}]"
        if not isinstance(u, dict):
            problems.append(f"{where}: must be an object")
            continue
        uid = u.get("user_id")
        if not isinstance(uid, str) or not uid or _bad_id(uid):
            problems.append(f"{where}.user_id: non-empty id without tabs/newlines required")
        elif uid in seen:
            problems.append(f"{where}.user_id: duplicate {uid!r}")
        seen.add(uid)
        if u.get("domain_id") not in domains:
            problems.append(f"{where}.domain_id: {u.get('domain_id')!r} not listed in domains")
        if not isinstance(u.get("password"), str):
            problems.append(f"{where}.password: string required")
        try:
            ut = UserType.parse(str(u.get("user_type")))
        except ValueError:
            problems.append(f"{where}.user_type: one of Trusted/Innocent/NonTrusted required")
            ut = None
        pp = u.get("p_positive")
        if pp is not None and (not _num(pp) or not 0.0 <= pp <= 1.0):
            problems.append(f"{where}.p_positive in [0,1] required, got {pp!r}")
        elif ut is not None and _num(p_wrong):
            eff = ut.p_positive if pp is None else pp
            if eff + p_wrong > 1.0 + 1e-12:
                problems.append(f"{where}: p_positive + p_wrong ≤ 1 required")

    if not _num(p_wrong) or not 0.0 <= p_wrong <= 1.0:
        problems.append(f"p_wrong in [0,1] required, got {p_wrong!r}")
    cer = data.get("credential_error_rate", 0.0)
    if not _num(cer) or not 0.0 <= cer <= 1.0:
        problems.append(f"credential_error_rate in [0,1] required, got {cer!r}")

    tasks = data.get("tasks", [{"task_id": "1001"}])
    if not isinstance(tasks, list) or not tasks:
        problems.append("tasks: non-empty list required")
    else:
        for i, t in enumerate(tasks):
            if not isinstance(t, dict) or not str(t.get("task_id", "")):
                problems.append(f"tasks[{i}].task_id: non-empty id required")
            elif t.get("kind", "TrustedTask") not in {k.value for k in TaskKind}:
                problems.append(f"tasks[{i}].kind: one of TrustedTask/NonTrustedTask required")

    removal = data.get("removal", {})
    if not isinstance(removal, dict):
        problems.append("removal: must be an object")
    else:
        sl = removal.get("strike_limit", 3)
        if not _int(sl) or sl < 1:
            problems.append(f"removal.strike_limit ≥ 1 (integer) required, got {sl!r}")
        if not isinstance(removal.get("threshold_trigger", True), bool):
            problems.append("removal.threshold_trigger: boolean required")

    policy = data.get("selection_policy", SelectionPolicy.UNIFORM_RANDOM.value)
    if policy not in {p.value for p in SelectionPolicy}:
        problems.append(f"selection_policy: one of uniform-random/round-robin, got {policy!r}")

    seed = data.get("seed", 0)
    if not _int(seed) or not 0 <= seed < 2 ** 64:
        problems.append(f"seed: integer in [0, 2^64) required, got {seed!r}")
    if data.get("rng", "PCG64") not in RNG_NAMES:
        problems.append(f"rng: one of {', '.join(RNG_NAMES)} required")

    known = {
        "seed", "rng", "request_count", "selection_policy", "p_wrong",
        "credential_error_rate", "tasks", "domains", "users", "user_layer",
        "domain_layer", "removal",
    }
    problems.extend(f"{k}: unknown field" for k in sorted(set(data) - known))
    return problems


def _bad_id(s: str) -> bool:
    return any(c in s for c in "\t\r\n")


def config_from_dict(data: dict) -> ScenarioConfig:
    problems = config_problems(data)
    if problems:
        raise ConfigError(problems)
    removal = data.get("removal", {})
    return ScenarioConfig(
        users=tuple(
            UserSpec(
                u["user_id"], u["domain_id"], UserType.parse(u["user_type"]),
                u["password"], u.get("p_positive"),
            )
            for u in data["users"]
        ),
        domains=tuple(data["domains"]),
        user_layer=LayerParams(**data["user_layer"]),
        domain_layer=LayerParams(**data["domain_layer"]),
        request_count=data["request_count"],
        tasks=tuple(
            TaskSpec(str(t["task_id"]), TaskKind(t.get("kind", "TrustedTask")))
            for t in data.get("tasks", [{"task_id": "1001"}])
        ),
        removal=RemovalPolicy(
            removal.get("strike_limit", 3), removal.get("threshold_trigger", True)),
        selection_policy=SelectionPolicy(
            data.get("selection_policy", SelectionPolicy.UNIFORM_RANDOM.value)),
        p_wrong=float(data.get("p_wrong", 0.0)),
        credential_error_rate=float(data.get("credential_error_rate", 0.0)),
        seed=data.get("seed", 0),
        rng=data.get("rng", "PCG64"),
    )


def read_config_data(path) -> dict:
    """Parse a JSON config file.  OSError propagates; bad JSON becomes ConfigError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"]) from exc


def load_config(path) -> ScenarioConfig:
    return config_from_dict(read_config_data(path))


def validate_config(config: ScenarioConfig) -> list[str]:
    """Re-check an already built config (e.g. one assembled in code)."""
    return config_problems(config.to_dict())
