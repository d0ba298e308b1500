"""Action-value trust computation.

A ledger holds the negative/total action counters of one entity (a user or a
domain) together with its current action value.  Every new action bumps the
counters first and then recomputes the value from scratch::

    value = (1 - negative_count / total_count) * weight(action) ** m

No I/O and no mutable state live here; ledgers are immutable values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional


class ActionClass(enum.Enum):
    POSITIVE = "Positive"
    WRONG = "Wrong"
    MALICIOUS = "Malicious"

    @property
    def is_negative(self) -> bool:
        return self is not ActionClass.POSITIVE

    @classmethod
    def parse(cls, text: str) -> "ActionClass":
        """Accept either the value ("Malicious") or the member name / initial ("M")."""
        key = text.strip()
        for member in cls:
            if key in (member.value, member.name) or key.upper() == member.value[0]:
                return member
        raise ValueError(f"unknown action class {text!r}")


def layer_problems(
    w_positive,
    w_wrong,
    w_malicious,
    m,
    threshold,
    initial_trust,
    prefix: str = "",
) -> list[str]:
    """Return every constraint a set of layer parameters violates (empty if valid)."""
    problems = []
    weights = {"w_positive": w_positive, "w_wrong": w_wrong, "w_malicious": w_malicious}
    for name, w in weights.items():
        if w is None and name == "w_wrong":
            continue
        if not _is_real(w):
            problems.append(f"{prefix}{name} must be a number, got {w!r}")
        elif not 0.0 <= w <= 1.0:
            problems.append(f"{prefix}{name} in [0,1] required, got {w!r}")
    if not _is_real(m):
        problems.append(f"{prefix}m must be a number, got {m!r}")
    elif not m >= 1.0:
        problems.append(f"{prefix}m ≥ 1 required, got {m!r}")
    if not _is_real(threshold):
        problems.append(f"{prefix}threshold must be a number, got {threshold!r}")
    elif not 0.0 <= threshold < 1.0:
        problems.append(f"{prefix}threshold in [0,1) required, got {threshold!r}")
    if not _is_real(initial_trust):
        problems.append(f"{prefix}initial_trust must be a number, got {initial_trust!r}")
    elif not 0.0 <= initial_trust <= 1.0:
        problems.append(f"{prefix}initial_trust in [0,1] required, got {initial_trust!r}")
    return problems


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x == x


@dataclass(frozen=True)
class LayerParams:
    """Weights, security level, gate threshold and starting trust for one tier.

    ``w_wrong`` defaults to ``w_malicious`` when left unset, so a two-weight
    (positive/negative) configuration behaves as expected.
    """

    w_positive: float = 1.0
    w_malicious: float = 0.8
    w_wrong: Optional[float] = None
    m: float = 1.0
    threshold: float = 0.2
    initial_trust: float = 1.0

    def __post_init__(self):
        if self.w_wrong is None:
            object.__setattr__(self, "w_wrong", self.w_malicious)
        problems = layer_problems(
            self.w_positive, self.w_wrong, self.w_malicious,
            self.m, self.threshold, self.initial_trust,
        )
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict:
        return {
            "w_positive": self.w_positive,
            "w_wrong": self.w_wrong,
            "w_malicious": self.w_malicious,
            "m": self.m,
            "threshold": self.threshold,
            "initial_trust": self.initial_trust,
        }


# Parameter sets used by the reference experiments.
TABLE_I_PARAMS = LayerParams(w_positive=1.0, w_malicious=0.8, m=1.0, threshold=0.2)
USER_LAYER = LayerParams(w_positive=0.9, w_malicious=0.8, m=1.0, threshold=0.2)
DOMAIN_LAYER = LayerParams(w_positive=1.0, w_malicious=0.9, m=1.0, threshold=0.1)


@dataclass(frozen=True)
class TrustLedger:
    negative_count: int = 0
    total_count: int = 0
    value: float = 1.0
    # None means "not tracked" (e.g. a ledger loaded from a trust table).
    history: Optional[tuple] = field(default=(), compare=False)

    def __post_init__(self):
        if self.negative_count < 0 or self.total_count < 0:
            raise ValueError("counters must be non-negative")
        if self.negative_count > self.total_count:
            raise ValueError(
                f"negative_count {self.negative_count} exceeds total_count {self.total_count}"
            )
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"value {self.value!r} outside [0,1]")
        if self.history is not None:
            if len(self.history) != self.total_count:
                raise ValueError("history length disagrees with total_count")
            if sum(a.is_negative for a in self.history) != self.negative_count:
                raise ValueError("history negatives disagree with negative_count")

    @classmethod
    def fresh(cls, params: LayerParams, track_history: bool = True) -> "TrustLedger":
        return cls(0, 0, params.initial_trust, () if track_history else None)


def action_weight(action: ActionClass, params: LayerParams) -> float:
    if action is ActionClass.POSITIVE:
        return params.w_positive
    if action is ActionClass.WRONG:
        return params.w_wrong
    return params.w_malicious


def action_value(negative_count: int, total_count: int, weight: float, m: float) -> float:
    """Closed-form action value for already-incremented counters."""
    return (1.0 - negative_count / total_count) * weight ** m


def update_trust(ledger: TrustLedger, action: ActionClass, params: LayerParams) -> TrustLedger:
    negatives = ledger.negative_count + (1 if action.is_negative else 0)
    total = ledger.total_count + 1
    value = action_value(negatives, total, action_weight(action, params), params.m)
    history = None if ledger.history is None else ledger.history + (action,)
    return TrustLedger(negatives, total, value, history)


def passes_threshold(ledger: TrustLedger, params: LayerParams) -> bool:
    # Strict: a value sitting exactly on the threshold is rejected.
    return ledger.value > params.threshold


def replay(history: Iterable[ActionClass], params: LayerParams) -> list[float]:
    """Action value after each step of ``history``, starting from an empty ledger.

    Counts are accumulated directly rather than through :func:`update_trust`,
    so the two paths can be checked against each other.
    """
    values = []
    negatives = total = 0
    for action in history:
        total += 1
        if action is not ActionClass.POSITIVE:
            negatives += 1
        w = params.w_positive if action is ActionClass.POSITIVE else (
            params.w_wrong if action is ActionClass.WRONG else params.w_malicious)
        values.append((1.0 - negatives / total) * w ** params.m)
    return values


def display_round(value: float, places: int = 1) -> str:
    """Round half-up to ``places`` decimals and drop trailing zeros ("1", "0.4")."""
    quantum = Decimal(1).scaleb(-places)
    rounded = Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP)
    text = f"{rounded.normalize():f}"
    return text


def value_candidates(negative_count: int, total_count: int, params: LayerParams) -> list[float]:
    """Values a ledger with these counters could legitimately hold under ``params``.

    The counters alone do not say which class the latest action was, so every
    class consistent with them is offered.
    """
    if total_count == 0:
        return [params.initial_trust]
    out = []
    if negative_count < total_count:
        out.append(action_value(negative_count, total_count, params.w_positive, params.m))
    if negative_count > 0:
        for w in (params.w_wrong, params.w_malicious):
            out.append(action_value(negative_count, total_count, w, params.m))
    return out
