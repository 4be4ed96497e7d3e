"""Run protocol scripts round by round and record a transcript.

Every step handler maps one round state to a list of ``(probability, state)``
branches. The sampling driver picks one branch with the acting party's random
stream; the enumeration driver keeps all of them, which gives exact outcome
distributions for small scripts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..engine import (
    Ancilla,
    ObservableSpec,
    Party,
    Register,
    apply_unitary,
    embed,
    measurement_unitary,
    project,
    purify_choice,
    purify_conditional,
    purify_measurement,
    shift_matrix,
)
from ..errors import DomainError, ExecutionError, QbcError
from ..linalg import StateVector
from . import builtins
from .compiler import purify
from .nodes import (
    Announce,
    Apply,
    ApplyOp,
    Case,
    Choose,
    Commit,
    CopyRecord,
    Measure,
    MeasureOp,
    Prepare,
    ROUND_STEPS,
    ProtocolScript,
    PurifiedCase,
    PurifiedChoose,
    PurifiedMeasure,
    Reveal,
    Send,
    Verify,
)

MODES = ("honest", "cheat:alice", "cheat:bob")
PRUNE = 1e-14


def parse_mode(mode: str) -> Party | None:
    """``"honest"`` -> None, ``"cheat:alice"`` -> Party.ALICE, ``"cheat:bob"`` -> Party.BOB."""
    if mode == "honest":
        return None
    if mode in ("cheat:alice", "cheat:bob"):
        return Party.parse(mode.split(":")[1])
    raise DomainError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


def party_seeds(seed: int) -> dict[Party, int]:
    """Independent per-party seeds derived from the run seed."""
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return {Party.ALICE: int(a), Party.BOB: int(b)}


@dataclass
class RoundState:
    reg: Register
    values: dict[str, str] = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    kept: bool = True

    def fork(self, reg: Register | None = None, values: dict | None = None, event: dict | None = None) -> "RoundState":
        new_values = dict(self.values)
        if values:
            new_values.update(values)
        events = self.events + ([event] if event else [])
        return RoundState(self.reg if reg is None else reg, new_values, events, self.kept)


Branches = list[tuple[float, RoundState]]


class Runtime:
    def __init__(self, script: ProtocolScript):
        self.script = script
        self.observables = dict(builtins.observables())
        self.observables.update(script.observables)

    def observable(self, name: str) -> ObservableSpec:
        return self.observables[name]

    def unitary(self, name: str, dim: int) -> np.ndarray:
        if name == builtins.IDENTITY:
            return np.eye(dim, dtype=complex)
        if name in self.script.unitaries:
            return self.script.unitaries[name]
        return builtins.UNITARIES[name]

    def outcomes(self, record: str) -> tuple[str, ...]:
        return self.script.records[record].outcomes


def _check_owner(reg: Register, party: Party, targets, index: int):
    for t in targets:
        if t not in reg:
            raise ExecutionError(f"subsystem {t!r} does not exist", index)
        if reg.owner(t) is not party:
            raise ExecutionError(f"party {party.value} does not hold {t!r}", index)


def _is_quantum(st: RoundState, record: str) -> bool:
    if record in st.values:
        return False
    try:
        st.reg.ancilla(record)
    except QbcError:
        return False
    return True


def record_projector(reg: Register, record: str, labels) -> np.ndarray:
    outcomes = reg.ancilla(record).outcomes
    return np.diag([1.0 + 0j if o in labels else 0j for o in outcomes])


def partition_branches(reg: Register, record: str, labels) -> list[tuple[float, Register, bool]]:
    """Deferred two-outcome measurement: is the record in ``labels``?"""
    proj = record_projector(reg, record, labels)
    out = []
    for inside, p_op in ((True, proj), (False, np.eye(proj.shape[0]) - proj)):
        new, p = project(reg, p_op, record)
        if p > PRUNE:
            out.append((p, new, inside))
    return out


def value_branches(reg: Register, record: str) -> list[tuple[float, Register, str]]:
    """Deferred full measurement of a record ancilla in its basis."""
    out = []
    for label in reg.ancilla(record).outcomes:
        new, p = project(reg, record_projector(reg, record, {label}), record)
        if p > PRUNE:
            out.append((p, new, label))
    return out


# -- round steps -----------------------------------------------------------


def _honest_op(rt: Runtime, st: RoundState, party: Party, op, index: int) -> Branches:
    _check_owner(st.reg, party, op.targets, index)
    if isinstance(op, ApplyOp):
        dim = int(np.prod([st.reg.subsystem(t).dim for t in op.targets]))
        reg = apply_unitary(st.reg, rt.unitary(op.unitary, dim), list(op.targets))
        return [(1.0, st.fork(reg))]
    obs = rt.observable(op.observable)
    out = []
    for outcome, proj in obs.projectors():
        reg, p = project(st.reg, proj, list(op.targets))
        if p > PRUNE:
            ev = {"kind": "measure", "party": party.value, "observable": op.observable,
                  "targets": list(op.targets), "record": op.record, "value": outcome, "p": p}
            out.append((p, st.fork(reg, {op.record: outcome}, ev)))
    return out


def _op_matrix(rt: Runtime, reg: Register, op, union: list[str]) -> np.ndarray:
    if isinstance(op, MeasureOp):
        obs = rt.observable(op.observable)
        return embed(measurement_unitary(obs), reg, list(op.targets) + [op.record], union)
    dim = int(np.prod([reg.subsystem(t).dim for t in op.targets]))
    return embed(rt.unitary(op.unitary, dim), reg, list(op.targets), union)


def _add_pointers(rt: Runtime, reg: Register, party: Party, ops) -> tuple[Register, list[str]]:
    union: list[str] = []
    for op in ops:
        for t in op.targets:
            if t not in union:
                union.append(t)
    for op in ops:
        if isinstance(op, MeasureOp):
            if op.record not in reg:
                obs = rt.observable(op.observable)
                entry = Ancilla(op.record, "pointer", obs.outcomes, obs.label)
                reg = reg.add(op.record, StateVector.basis(len(obs.outcomes), 0), party, entry)
            if op.record not in union:
                union.append(op.record)
    return reg, union


def step_round(rt: Runtime, index: int, step, st: RoundState) -> Branches:
    reg = st.reg
    if isinstance(step, Prepare):
        vec = rt.script.states.get(step.state)
        if vec is None:
            vec = builtins.STATES[step.state]
        reg = reg.add_joint(step.subsystems, step.dims, vec, step.party)
        return [(1.0, st.fork(reg))]
    if isinstance(step, Send):
        _check_owner(reg, step.sender, [step.subsystem], index)
        ev = {"kind": "send", "subsystem": step.subsystem, "from": step.sender.value, "to": step.receiver.value}
        return [(1.0, st.fork(reg.transfer(step.subsystem, step.receiver), event=ev))]
    if isinstance(step, (Measure, Apply)):
        return _honest_op(rt, st, step.party, step.op, index)
    if isinstance(step, Choose):
        out = []
        for br in step.branches:
            if br.weight <= 0:
                continue
            ev = {"kind": "choose", "party": step.party.value, "record": step.record, "value": br.label, "p": br.weight}
            chosen = st.fork(values={step.record: br.label}, event=ev)
            out.extend((br.weight * p, s) for p, s in _honest_op(rt, chosen, step.party, br.op, index))
        return out
    if isinstance(step, Case):
        try:
            key = tuple(st.values[c] for c in step.controls)
        except KeyError as exc:
            raise ExecutionError(f"record {exc.args[0]!r} has no classical value here", index) from None
        arm = next(a for a in step.arms if a.key == key)
        return _honest_op(rt, st, step.party, arm.op, index)
    if isinstance(step, Announce):
        return _announce(st, step)
    if isinstance(step, PurifiedMeasure):
        _check_owner(reg, step.party, step.op.targets, index)
        obs = rt.observable(step.op.observable)
        reg = purify_measurement(reg, obs, list(step.op.targets), step.op.record, step.party)
        return [(1.0, st.fork(reg))]
    if isinstance(step, PurifiedChoose):
        ops = [b.op for b in step.branches]
        for op in ops:
            _check_owner(reg, step.party, op.targets, index)
        reg, union = _add_pointers(rt, reg, step.party, ops)
        mats = [_op_matrix(rt, reg, op, union) for op in ops]
        reg = purify_choice(reg, mats, [b.weight for b in step.branches], step.record, union,
                            step.party, [b.label for b in step.branches])
        return [(1.0, st.fork(reg))]
    if isinstance(step, PurifiedCase):
        ops = [a.op for a in step.arms]
        for op in ops:
            _check_owner(reg, step.party, op.targets, index)
        for c in step.controls:
            if c not in reg:
                raise ExecutionError(f"control record {c!r} is not held as an ancilla", index)
        reg, union = _add_pointers(rt, reg, step.party, ops)
        table = {a.key: _op_matrix(rt, reg, a.op, union) for a in step.arms}
        reg = purify_conditional(reg, list(step.controls), table, union)
        return [(1.0, st.fork(reg))]
    if isinstance(step, CopyRecord):
        src = reg.ancilla(step.record)
        m = len(src.outcomes)
        entry = Ancilla(step.copy, "copy", src.outcomes, step.record)
        # the copy stands for the environment that makes the record classical
        reg = reg.add(step.copy, StateVector.basis(m, 0), Party.CHANNEL, entry)
        reg = purify_conditional(reg, [step.record], {(k,): shift_matrix(m, k) for k in range(m)}, [step.copy])
        return [(1.0, st.fork(reg))]
    raise ExecutionError(f"{type(step).__name__} is not a round step", index)


def _announce(st: RoundState, step: Announce) -> Branches:
    base = {"kind": "announce", "party": step.party.value, "record": step.record, "value": step.value}
    if not _is_quantum(st, step.record):
        if step.record not in st.values:
            return [(1.0, _discard(st.fork(event={**base, "result": False, "p": 1.0})))]
        ok = st.values[step.record] == step.value
        new = st.fork(event={**base, "result": ok, "p": 1.0})
        return [(1.0, new if ok else _discard(new))]
    out = []
    for p, reg, inside in partition_branches(st.reg, step.record, {step.value}):
        ev = {**base, "result": inside, "p": p, "deferred": True}
        new = st.fork(reg, {step.record: step.value} if inside else None, ev)
        out.append((p, new if inside else _discard(new)))
    return out


def _discard(st: RoundState) -> RoundState:
    st.kept = False
    return st


def _acting_party(step) -> Party | None:
    return getattr(step, "party", None) or getattr(step, "sender", None)


def run_round(
    script: ProtocolScript,
    pick: Callable[[Branches, object], int] | None = None,
    rngs: dict[Party, np.random.Generator] | None = None,
    stop: Callable[[object], bool] | None = None,
) -> RoundState | Branches:
    """Execute one round.

    With ``pick`` given, one branch is followed per step and the final state is
    returned; otherwise every branch is enumerated and the weighted list is
    returned. ``stop(step)`` ends the round before that step.
    """
    rt = Runtime(script)
    frontier: Branches = [(1.0, RoundState(Register.empty()))]
    for index, step in enumerate(script.steps):
        if not isinstance(step, ROUND_STEPS):
            continue
        if stop is not None and stop(step):
            break
        nxt: Branches = []
        for p, st in frontier:
            if not st.kept:
                nxt.append((p, st))
                continue
            branches = step_round(rt, index, step, st)
            if pick is not None and len(branches) > 1:
                party = _acting_party(step)
                k = pick(branches, rngs[party] if rngs and party in rngs else None)
                branches = [(1.0, branches[k][1])]
            elif pick is not None:
                branches = [(1.0, branches[0][1])]
            nxt.extend((p * q, s) for q, s in branches)
        frontier = nxt
    if pick is not None:
        return frontier[0][1]
    return frontier


def sample_index(branches, rng: np.random.Generator) -> int:
    probs = np.array([p for p, *_ in branches], dtype=float)
    cum = np.cumsum(probs / probs.sum())
    k = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(k, len(branches) - 1)


def enumerate_round(script: ProtocolScript, stop: Callable[[object], bool] | None = None) -> Branches:
    """All branches of one round with their probabilities."""
    return run_round(script, stop=stop)


# -- transcript ------------------------------------------------------------


@dataclass
class RoundLog:
    index: int
    kept: bool
    values: dict[str, str]
    events: list[dict]
    register: Register

    def to_dict(self, include_state: bool = True) -> dict:
        out = {"index": self.index, "kept": self.kept, "values": dict(self.values), "events": self.events}
        if include_state:
            reg = self.register
            out["register"] = {
                "labels": list(reg.labels),
                "dims": list(reg.dims),
                "owners": [s.owner.value for s in reg.subsystems],
                "amplitudes": [[float(a.real), float(a.imag)] for a in reg.state.amplitudes],
            }
        return out


@dataclass
class Transcript:
    script: str
    seed: int
    party_seeds: dict[str, int]
    mode: str
    commit_bit: int | None
    reveal_bit: int | None
    rounds: list[RoundLog]
    messages: list[dict]
    verdict: str | None
    notes: list[str]

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    @property
    def kept_rounds(self) -> list[int]:
        return [r.index for r in self.rounds if r.kept]

    def message(self, kind: str) -> dict | None:
        return next((m for m in self.messages if m["kind"] == kind), None)

    def to_dict(self, include_state: bool = True) -> dict:
        return {
            "script": self.script,
            "seed": self.seed,
            "party_seeds": dict(self.party_seeds),
            "mode": self.mode,
            "commit_bit": self.commit_bit,
            "reveal_bit": self.reveal_bit,
            "rounds": [r.to_dict(include_state) for r in self.rounds],
            "messages": self.messages,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


# -- final phase -------------------------------------------------------------


def _resolve_partition(st: RoundState, record: str, labels, rng) -> bool:
    if not _is_quantum(st, record):
        if record not in st.values:
            raise ExecutionError(f"record {record!r} has no value in this round")
        return st.values[record] in labels
    branches = partition_branches(st.reg, record, labels)
    p, reg, inside = branches[sample_index(branches, rng) if len(branches) > 1 else 0]
    st.reg = reg
    st.events.append({"kind": "deferred", "record": record, "partition": sorted(labels), "result": inside, "p": p})
    return inside


def _resolve_value(st: RoundState, record: str, rng) -> str:
    if not _is_quantum(st, record):
        if record not in st.values:
            raise ExecutionError(f"record {record!r} has no value in this round")
        return st.values[record]
    branches = value_branches(st.reg, record)
    p, reg, label = branches[sample_index(branches, rng) if len(branches) > 1 else 0]
    st.reg = reg
    st.values[record] = label
    st.events.append({"kind": "deferred", "record": record, "value": label, "p": p})
    return label


def _final_phase(script, states: list[RoundState], commit_bit, reveal_bit, rngs, messages) -> str | None:
    final = script.final_steps
    commit = next((s for s in final if isinstance(s, Commit)), None)
    reveal = next((s for s in final if isinstance(s, Reveal)), None)
    verify = next((s for s in final if isinstance(s, Verify)), None)
    if commit is None:
        return None
    kept = [i for i, st in enumerate(states) if st.kept]
    committed_set = set(commit.sets[commit_bit])
    announced = [i for i in kept if _resolve_partition(states[i], commit.record, committed_set, rngs[commit.party])]
    messages.append({"kind": "commit", "party": commit.party.value, "rounds": announced})
    if reveal is None:
        return None
    # the proof set is the set of rounds claimed to hold bit-0 outcomes
    proof = announced if reveal_bit == 0 else [i for i in kept if i not in announced]
    table = builtins.inference_table(reveal.table)
    rng = rngs[reveal.party]
    claims = {}
    for i in proof:
        st = states[i]
        src = _resolve_value(st, reveal.source, rng)
        given = st.values[reveal.given]
        cands = table.candidates(src, given) or list(table.claim_outcomes)
        claims[i] = cands[0] if len(cands) == 1 else cands[int(rng.integers(len(cands)))]
    messages.append({"kind": "reveal", "party": reveal.party.value, "bit": reveal_bit,
                     "claims": {str(i): c for i, c in claims.items()}})
    if verify is None:
        return None
    rng = rngs[verify.party]
    mismatched = [i for i in proof if _resolve_value(states[i], verify.record, rng) != claims[i]]
    verdict = "reject" if mismatched else "accept"
    messages.append({"kind": "verify", "party": verify.party.value, "verdict": verdict, "mismatched": mismatched})
    return verdict


def execute(
    script: ProtocolScript,
    seed: int | None = None,
    mode: str = "honest",
    commit_bit: int = 0,
    reveal_bit: int | None = None,
) -> Transcript:
    """Run every round and the closing commit/reveal/verify phase.

    ``reveal_bit`` defaults to ``commit_bit``; a different value makes Alice
    open the other bit without any extra quantum operation. In a cheating mode
    the script is purified for the cheating party first if needed.
    """
    if commit_bit not in (0, 1):
        raise DomainError("commit bit must be 0 or 1")
    reveal_bit = commit_bit if reveal_bit is None else reveal_bit
    if reveal_bit not in (0, 1):
        raise DomainError("reveal bit must be 0 or 1")
    cheating = parse_mode(mode)
    if cheating is not None and cheating not in script.purified_for:
        script = purify(script, cheating)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
    seeds = party_seeds(seed)
    rngs = {p: np.random.default_rng(s) for p, s in seeds.items()}
    states = [run_round(script, pick=lambda b, rng: sample_index(b, rng), rngs=rngs) for _ in range(script.rounds)]
    messages: list[dict] = []
    for i, st in enumerate(states):
        for ev in st.events:
            if ev["kind"] == "announce":
                messages.append({"kind": "announce", "round": i, "party": ev["party"], "record": ev["record"],
                                 "value": ev["value"], "result": ev["result"]})
    verdict = _final_phase(script, states, commit_bit, reveal_bit, rngs, messages)
    rounds = [RoundLog(i, st.kept, dict(st.values), st.events, st.reg) for i, st in enumerate(states)]
    return Transcript(
        script=script.name,
        seed=int(seed),
        party_seeds={p.value: s for p, s in seeds.items()},
        mode=mode,
        commit_bit=commit_bit if script.final_steps else None,
        reveal_bit=reveal_bit if script.final_steps else None,
        rounds=rounds,
        messages=messages,
        verdict=verdict,
        notes=list(script.notes),
    )


def observation_distribution(script: ProtocolScript, observer: Party | str) -> dict[tuple, float]:
    """Exact distribution of one party's classical view of a round.

    The view is the observer's own classical record values plus every
    announcement result, in step order.
    """
    observer = Party.parse(observer)
    dist: dict[tuple, float] = {}
    for p, st in enumerate_round(script):
        view = []
        for ev in st.events:
            if ev["kind"] == "announce":
                view.append(("announce", ev["record"], ev["result"]))
            elif ev["kind"] in ("measure", "choose") and ev["party"] == observer.value:
                view.append((ev["record"], ev["value"]))
        key = tuple(view)
        dist[key] = dist.get(key, 0.0) + p
    return dist


def compare_distributions(a: dict, b: dict) -> float:
    """Largest absolute difference in probability over the union of outcomes."""
    return max((abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b)), default=0.0)


__all__ = [
    "MODES", "RoundState", "RoundLog", "Transcript", "execute", "enumerate_round", "run_round",
    "observation_distribution", "compare_distributions", "parse_mode", "party_seeds",
    "partition_branches", "value_branches", "sample_index",
]
