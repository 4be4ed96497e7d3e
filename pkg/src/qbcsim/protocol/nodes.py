"""Syntax tree of a two-party protocol script."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..engine import ObservableSpec, Party


@dataclass(frozen=True)
class Pos:
    line: int
    column: int


@dataclass(frozen=True)
class MeasureOp:
    observable: str
    targets: tuple[str, ...]
    record: str


@dataclass(frozen=True)
class ApplyOp:
    unitary: str
    targets: tuple[str, ...]


Op = Union[MeasureOp, ApplyOp]


@dataclass(frozen=True)
class Branch:
    label: str
    weight: float
    op: Op


@dataclass(frozen=True)
class CaseArm:
    key: tuple[str, ...]
    op: Op


@dataclass(frozen=True)
class Prepare:
    party: Party
    subsystems: tuple[str, ...]
    dims: tuple[int, ...]
    state: str
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Send:
    subsystem: str
    sender: Party
    receiver: Party
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Measure:
    party: Party
    op: MeasureOp
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Apply:
    party: Party
    op: ApplyOp
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Choose:
    party: Party
    record: str
    branches: tuple[Branch, ...]
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Case:
    party: Party
    controls: tuple[str, ...]
    arms: tuple[CaseArm, ...]
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Announce:
    """Broadcast whether ``record == value``; rounds where it is not are discarded."""

    party: Party
    record: str
    value: str
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Commit:
    """Announce the kept rounds whose ``record`` lies in ``sets[bit]``."""

    party: Party
    record: str
    sets: tuple[tuple[str, ...], tuple[str, ...]]
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Reveal:
    """Reveal the bit and claim the other party's ``claim`` record on the proof set.

    Claims are inferred from the revealer's ``source`` record and the announced
    ``given`` record through the inference table ``table``.
    """

    party: Party
    claim: str
    source: str
    given: str
    table: str
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Verify:
    """Accept iff every claimed value equals the verifier's own ``record``."""

    party: Party
    record: str
    pos: Pos | None = field(default=None, compare=False)


# Steps emitted by the purification compiler.


@dataclass(frozen=True)
class PurifiedMeasure:
    party: Party
    op: MeasureOp
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PurifiedChoose:
    party: Party
    record: str
    branches: tuple[Branch, ...]
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PurifiedCase:
    party: Party
    controls: tuple[str, ...]
    arms: tuple[CaseArm, ...]
    pos: Pos | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CopyRecord:
    """Copy a record ancilla into an environment ancilla held by neither party.

    This decoheres the record, which models an honest party's classical record.
    """

    party: Party
    record: str
    copy: str
    pos: Pos | None = field(default=None, compare=False)


Step = Union[
    Prepare, Send, Measure, Apply, Choose, Case, Announce, Commit, Reveal, Verify,
    PurifiedMeasure, PurifiedChoose, PurifiedCase, CopyRecord,
]

ROUND_STEPS = (Prepare, Send, Measure, Apply, Choose, Case, Announce,
               PurifiedMeasure, PurifiedChoose, PurifiedCase, CopyRecord)
FINAL_STEPS = (Commit, Reveal, Verify)


@dataclass(frozen=True)
class RecordInfo:
    owner: Party
    outcomes: tuple[str, ...]
    kind: str  # "measure" or "choice"


@dataclass(frozen=True, eq=False)
class ProtocolScript:
    name: str
    rounds: int
    states: dict[str, np.ndarray]
    unitaries: dict[str, np.ndarray]
    observables: dict[str, ObservableSpec]
    records: dict[str, RecordInfo]
    steps: tuple[Step, ...]
    purified_for: frozenset[Party] = frozenset()
    notes: tuple[str, ...] = ()
    source: str | None = None

    @property
    def round_steps(self) -> tuple[Step, ...]:
        return tuple(s for s in self.steps if isinstance(s, ROUND_STEPS))

    @property
    def final_steps(self) -> tuple[Step, ...]:
        return tuple(s for s in self.steps if isinstance(s, FINAL_STEPS))

    def step_kinds(self) -> list[str]:
        return [type(s).__name__ for s in self.steps]
