"""Purification compiler: rewrite one party's honest steps into the EPR strategy.

Random choices become die ancillas, measurements become pointer ancillas and
steps that depend on earlier outcomes become controlled unitaries on those
ancillas. Nothing is measured until the record is used classically, and then
only the part of the record that is actually disclosed.
"""

from __future__ import annotations

from dataclasses import replace

from ..engine import Party
from .nodes import (
    Announce,
    Case,
    Choose,
    Commit,
    CopyRecord,
    Measure,
    MeasureOp,
    ProtocolScript,
    PurifiedCase,
    PurifiedChoose,
    PurifiedMeasure,
    Reveal,
    Verify,
)

COPY_SUFFIX = "#copy"


def copy_label(record: str) -> str:
    return record + COPY_SUFFIX


def _written(step) -> list[str]:
    """Records a purified step creates."""
    if isinstance(step, PurifiedMeasure):
        return [step.op.record]
    if isinstance(step, PurifiedChoose):
        out = [step.record]
        for b in step.branches:
            if isinstance(b.op, MeasureOp) and b.op.record not in out:
                out.append(b.op.record)
        return out
    if isinstance(step, PurifiedCase):
        out = []
        for arm in step.arms:
            if isinstance(arm.op, MeasureOp) and arm.op.record not in out:
                out.append(arm.op.record)
        return out
    return []


def purify(script: ProtocolScript, party: Party | str, decohere: bool = False) -> ProtocolScript:
    """Replace ``party``'s Choose, Measure and Case steps by their purified forms.

    With ``decohere=True`` every purified record is followed by a CopyRecord
    step, which models an honest party whose records are classical while still
    keeping the global state pure.

    A script in which the party has nothing to purify is returned unchanged.
    """
    party = Party.parse(party)
    purified = {
        Measure: lambda s: PurifiedMeasure(s.party, s.op, s.pos),
        Choose: lambda s: PurifiedChoose(s.party, s.record, s.branches, s.pos),
        Case: lambda s: PurifiedCase(s.party, s.controls, s.arms, s.pos),
    }
    if not any(type(s) in purified and s.party is party for s in script.steps):
        return script
    steps, notes, quantum = [], list(script.notes), set()
    for s in script.steps:
        if type(s) in purified and s.party is party:
            new = purified[type(s)](s)
            steps.append(new)
            for rec in _written(new):
                quantum.add(rec)
                if decohere:
                    steps.append(CopyRecord(party, rec, copy_label(rec), s.pos))
            continue
        steps.append(s)
        used = _classical_uses(s)
        for rec, what in used:
            if rec in quantum:
                where = f" (line {s.pos.line})" if s.pos else ""
                notes.append(f"{type(s).__name__.lower()}{where}: {what} of record {rec!r} is measured here")
    return replace(
        script,
        steps=tuple(steps),
        purified_for=script.purified_for | {party},
        notes=tuple(notes),
    )


def _classical_uses(step) -> list[tuple[str, str]]:
    if isinstance(step, Announce):
        return [(step.record, f"whether it equals {step.value!r}")]
    if isinstance(step, Commit):
        return [(step.record, "membership in the committed outcome set")]
    if isinstance(step, Reveal):
        return [(step.source, "the full value")]
    if isinstance(step, Verify):
        return [(step.record, "the full value")]
    return []


def purify_all(script: ProtocolScript, cheating: Party | str | None) -> ProtocolScript:
    """Purify every party: the cheating one plainly, honest ones with decoherence copies."""
    cheating = Party.parse(cheating) if cheating is not None else None
    out = script
    for p in (Party.ALICE, Party.BOB):
        out = purify(out, p, decohere=p is not cheating)
    return out
