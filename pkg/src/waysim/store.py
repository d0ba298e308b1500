"""Trust tables (UTT/DTT) and the audit log on disk.

Table file::

    #kind=UTT schema=1
    entity_id<TAB>negative_count<TAB>total_count<TAB>value<TAB>status<TAB>strikes

DTT rows carry ``-`` for status and strikes.  Values are written with
``repr`` so they read back bit-exact.

Audit log: one ``request_id<TAB>step<TAB>entity<TAB>detail`` line per event,
no header.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .agents import AuditEntry, Step, UserStatus, WorldState
from .trust_core import LayerParams, value_candidates

SCHEMA_VERSION = 1
ABSENT = "-"


class TableKind(enum.Enum):
    UTT = "UTT"
    DTT = "DTT"


class TableFormatError(ValueError):
    def __init__(self, source, lineno: int, message: str):
        self.source = str(source)
        self.lineno = lineno
        super().__init__(f"{source}:{lineno}: {message}")


class TableValidationError(TableFormatError):
    pass


class TrustTableWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TableEntry:
    entity_id: str
    negative_count: int
    total_count: int
    value: float
    status: Optional[UserStatus] = None
    strikes: Optional[int] = None


@dataclass(frozen=True)
class TrustTableSnapshot:
    kind: TableKind
    entries: tuple = ()
    schema_version: int = SCHEMA_VERSION


def snapshot_world(world: WorldState, kind: TableKind) -> TrustTableSnapshot:
    if kind is TableKind.UTT:
        entries = tuple(
            TableEntry(u.user_id, u.ledger.negative_count, u.ledger.total_count,
                       u.ledger.value, u.status, u.strikes)
            for u in world.users.values()
        )
    else:
        entries = tuple(
            TableEntry(d.domain_id, d.ledger.negative_count, d.ledger.total_count,
                       d.ledger.value)
            for d in world.domains.values()
        )
    return TrustTableSnapshot(kind, entries)


def _entry_problem(e: TableEntry, kind: TableKind) -> Optional[str]:
    if not e.entity_id or any(c in e.entity_id for c in "\t\r\n"):
        return f"bad entity id {e.entity_id!r}"
    if e.negative_count < 0 or e.total_count < 0:
        return "counts must be non-negative"
    if e.negative_count > e.total_count:
        return f"negative_count {e.negative_count} > total_count {e.total_count}"
    if not (0.0 <= e.value <= 1.0):
        return f"value {e.value!r} outside [0,1]"
    if kind is TableKind.UTT and (e.status is None or e.strikes is None):
        return "UTT rows need status and strikes"
    if e.strikes is not None and e.strikes < 0:
        return "strikes must be non-negative"
    return None


def format_table(snapshot: TrustTableSnapshot) -> str:
    lines = [f"#kind={snapshot.kind.value} schema={snapshot.schema_version}"]
    for e in snapshot.entries:
        problem = _entry_problem(e, snapshot.kind)
        if problem:
            raise ValueError(f"entry {e.entity_id!r}: {problem}")
        lines.append("\t".join((
            e.entity_id,
            str(e.negative_count),
            str(e.total_count),
            repr(float(e.value)),
            ABSENT if e.status is None else e.status.value,
            ABSENT if e.strikes is None else str(e.strikes),
        )))
    return "\n".join(lines) + "\n"


def save_tables(snapshot: TrustTableSnapshot, destination) -> Path:
    path = Path(destination)
    path.write_text(format_table(snapshot), encoding="utf-8")
    return path


def _parse_header(line: str, source) -> tuple:
    if not line.startswith("#"):
        raise TableFormatError(source, 1, "missing '#kind=... schema=...' header")
    fields = dict(part.split("=", 1) for part in line[1:].split() if "=" in part)
    try:
        kind = TableKind(fields["kind"])
        schema = int(fields["schema"])
    except (KeyError, ValueError):
        raise TableFormatError(source, 1, f"malformed header {line!r}") from None
    if schema != SCHEMA_VERSION:
        raise TableFormatError(source, 1, f"unsupported schema {schema}")
    return kind, schema


def parse_table(text: str, source="<string>", params: Optional[LayerParams] = None
                ) -> TrustTableSnapshot:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TableFormatError(source, 1, "empty file")
    kind, schema = _parse_header(lines[0], source)
    entries = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != 6:
            raise TableFormatError(source, lineno, f"expected 6 tab-separated fields, got {len(cols)}")
        eid, neg, tot, val, status, strikes = cols
        try:
            neg_i, tot_i = int(neg), int(tot)
            value = float(val)
            st = None if status == ABSENT else UserStatus(status)
            sk = None if strikes == ABSENT else int(strikes)
        except ValueError as exc:
            raise TableFormatError(source, lineno, str(exc)) from None
        if not math.isfinite(value):
            raise TableFormatError(source, lineno, f"non-finite value {val!r}")
        entry = TableEntry(eid, neg_i, tot_i, value, st, sk)
        problem = _entry_problem(entry, kind)
        if problem is None and eid in seen:
            problem = f"duplicate entity {eid!r}"
        if problem:
            raise TableValidationError(source, lineno, problem)
        seen.add(eid)
        if params is not None and not any(
                abs(value - c) <= 1e-12 for c in value_candidates(neg_i, tot_i, params)):
            warnings.warn(
                f"{source}:{lineno}: stored value {value!r} for {eid!r} does not match "
                f"its counters under the given parameters",
                TrustTableWarning, stacklevel=3,
            )
        entries.append(entry)
    return TrustTableSnapshot(kind, tuple(entries), schema)


def load_tables(source, params: Optional[LayerParams] = None) -> TrustTableSnapshot:
    """Read a table file.  With ``params``, stored values are re-derived from the
    counters and a :class:`TrustTableWarning` is issued on mismatch."""
    path = Path(source)
    return parse_table(path.read_text(encoding="utf-8"), path, params)


# -- audit log ---------------------------------------------------------------

def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def format_audit(entry: AuditEntry) -> str:
    return f"{entry.request_id}\t{entry.step.label}\t{_clean(entry.entity)}\t{_clean(entry.detail)}"


class AuditLog:
    """Append-only writer; request ids must never go backwards."""

    def __init__(self, path):
        self.path = Path(path)
        self._last_request = 0
        self.count = 0

    def extend(self, entries: Iterable[AuditEntry]) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            for e in entries:
                if e.request_id < self._last_request:
                    raise ValueError(
                        f"audit request_id {e.request_id} after {self._last_request}")
                self._last_request = e.request_id
                fh.write(format_audit(e) + "\n")
                self.count += 1


def read_audit(source) -> list:
    out = []
    with Path(source).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 4:
                raise TableFormatError(source, lineno, "expected 4 tab-separated fields")
            try:
                out.append(AuditEntry(int(cols[0]), Step.from_label(cols[1]), cols[2], cols[3]))
            except ValueError as exc:
                raise TableFormatError(source, lineno, str(exc)) from None
    return out
