"""Stochastic user behavior and request workloads."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .trust_core import ActionClass


class UserType(enum.Enum):
    TRUSTED = "Trusted"
    INNOCENT = "Innocent"
    NON_TRUSTED = "NonTrusted"

    @property
    def p_positive(self) -> float:
        return _DEFAULT_P_POSITIVE[self]

    @classmethod
    def parse(cls, text: str) -> "UserType":
        norm = text.replace("_", "").replace("-", "").replace(" ", "").lower()
        for member in cls:
            if norm == member.value.lower():
                return member
        raise ValueError(f"unknown user type {text!r}")


_DEFAULT_P_POSITIVE = {
    UserType.TRUSTED: 0.8,
    UserType.INNOCENT: 0.5,
    UserType.NON_TRUSTED: 0.2,
}


class TaskKind(enum.Enum):
    TRUSTED_TASK = "TrustedTask"
    NON_TRUSTED_TASK = "NonTrustedTask"


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    # Carried for bookkeeping only; it does not influence sampling.
    kind: TaskKind = TaskKind.TRUSTED_TASK

    def __post_init__(self):
        if not str(self.task_id):
            raise ValueError("task_id must be non-empty")


@dataclass(frozen=True)
class UserProfile:
    """How one user behaves: its type and the probabilities it acts with."""

    user_type: UserType
    p_positive: Optional[float] = None
    p_wrong: float = 0.0

    def __post_init__(self):
        if self.p_positive is None:
            object.__setattr__(self, "p_positive", self.user_type.p_positive)
        if not (0.0 <= self.p_positive <= 1.0 and 0.0 <= self.p_wrong <= 1.0):
            raise ValueError("probabilities must lie in [0,1]")
        if self.p_positive + self.p_wrong > 1.0 + 1e-12:
            raise ValueError("p_positive + p_wrong must not exceed 1")

    def sample(self, rng: np.random.Generator) -> ActionClass:
        return sample_action(self.p_positive, self.p_wrong, rng)


def sample_action(p_positive: float, p_wrong: float, rng: np.random.Generator) -> ActionClass:
    """Draw one action: Positive w.p. ``p_positive``, Wrong w.p. ``p_wrong``, else Malicious.

    Exactly one uniform variate is consumed per call.
    """
    u = rng.random()
    if u < p_positive:
        return ActionClass.POSITIVE
    if u < p_positive + p_wrong:
        return ActionClass.WRONG
    return ActionClass.MALICIOUS


class SelectionPolicy(enum.Enum):
    UNIFORM_RANDOM = "uniform-random"
    ROUND_ROBIN = "round-robin"


@dataclass(frozen=True)
class WorkItem:
    user_id: str
    task: TaskSpec
    # True when the user mistypes its password on this request.
    bad_credential: bool = False


def make_workload(
    user_ids,
    tasks,
    request_count: int,
    rng: np.random.Generator,
    policy: SelectionPolicy = SelectionPolicy.UNIFORM_RANDOM,
    credential_error_rate: float = 0.0,
) -> list[WorkItem]:
    """Build the ordered list of requests for one run.

    Tasks are cycled in order.  Users are drawn uniformly at random or in
    round-robin order depending on ``policy``.
    """
    user_ids = list(user_ids)
    tasks = list(tasks)
    if not user_ids:
        raise ValueError("workload needs at least one user")
    if not tasks:
        raise ValueError("workload needs at least one task")
    if request_count < 1:
        raise ValueError("request_count must be >= 1")

    if policy is SelectionPolicy.UNIFORM_RANDOM:
        picks = rng.integers(0, len(user_ids), size=request_count)
    else:
        picks = np.arange(request_count) % len(user_ids)
    if credential_error_rate > 0.0:
        bad = rng.random(request_count) < credential_error_rate
    else:
        bad = np.zeros(request_count, dtype=bool)

    return [
        WorkItem(user_ids[int(k)], tasks[i % len(tasks)], bool(bad[i]))
        for i, k in enumerate(picks)
    ]
