"""Commitment states: the global state after the commit phase for each bit value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import ObservableSpec, Party, Register, project, reduced_state
from ..errors import DomainError
from ..linalg import DensityOperator, StateVector, trace_distance
from .compiler import copy_label, purify_all
from .executor import PRUNE, RoundState, Runtime, parse_mode, record_projector, step_round
from .nodes import ROUND_STEPS, Announce, Commit, ProtocolScript


@dataclass(frozen=True, eq=False)
class CommitmentStates:
    """Per-round states ``psi_b`` on Alice's side (first) times Bob's.

    Alice's side holds her subsystems followed by the environment copies that
    decohere honest records; ``environment_labels`` lists the latter.
    """

    psi0: StateVector
    psi1: StateVector
    w0: DensityOperator
    w1: DensityOperator
    dim_a: int
    dim_b: int
    alice_labels: tuple[str, ...]
    bob_labels: tuple[str, ...]
    environment_labels: tuple[str, ...]
    registers: tuple[Register, Register]
    probabilities: tuple[float, float]
    mode: str

    @property
    def pair(self) -> tuple[StateVector, StateVector]:
        return self.psi0, self.psi1

    @property
    def bob_states(self) -> tuple[DensityOperator, DensityOperator]:
        return self.w0, self.w1

    @property
    def trace_distance(self) -> float:
        return trace_distance(self.w0, self.w1)


def _postselect_announce(st: RoundState, step: Announce) -> RoundState:
    reg, p = project(st.reg, record_projector(st.reg, step.record, {step.value}), step.record)
    if reg is None or p <= PRUNE:
        raise DomainError(f"announcement {step.record} == {step.value} has zero amplitude")
    # the announced record is now a basis state and carries no further information
    for label in (step.record, copy_label(step.record)):
        if label in reg:
            reg = reg.drop(label)
    values = dict(st.values)
    values[step.record] = step.value
    return RoundState(reg, values, st.events, True)


def _pre_commit_state(script: ProtocolScript) -> RoundState:
    rt = Runtime(script)
    st = RoundState(Register.empty())
    for index, step in enumerate(script.steps):
        if not isinstance(step, ROUND_STEPS):
            continue
        if isinstance(step, Announce):
            st = _postselect_announce(st, step)
            continue
        branches = step_round(rt, index, step, st)
        if len(branches) != 1:
            raise DomainError(f"step {index} still branches after purification")
        st = branches[0][1]
    return st


def commitment_states(script: ProtocolScript, mode: str = "honest") -> CommitmentStates:
    """Global one-round state after committing to each bit, and Bob's reduced operators.

    Every party is purified: the cheating one keeps its ancillas coherent, an
    honest one's records are also copied into environment ancillas, which
    makes them classical. The environment is placed on Alice's side of the
    bipartition so that Bob's operators are exactly his view. Announcements post-select the kept
    value; the commit step then projects the committing record onto the
    outcome set of bit 0 or bit 1.
    """
    cheating = parse_mode(mode)
    commit = next((s for s in script.final_steps if isinstance(s, Commit)), None)
    if commit is None:
        raise DomainError("script has no commit step")
    full = purify_all(script, cheating)
    st = _pre_commit_state(full)
    regs, probs = [], []
    for bit in (0, 1):
        reg, p = project(st.reg, record_projector(st.reg, commit.record, set(commit.sets[bit])), commit.record)
        if reg is None or p <= PRUNE:
            raise DomainError(f"commitment to {bit} has zero amplitude")
        regs.append(reg)
        probs.append(p)
    env = tuple(regs[0].owned_by(Party.CHANNEL))
    alice = tuple(regs[0].owned_by(Party.ALICE)) + env
    bob = tuple(regs[0].owned_by(Party.BOB))
    regs = [r.permuted(alice + bob) for r in regs]
    dim_a = int(np.prod([regs[0].subsystem(x).dim for x in alice])) if alice else 1
    dim_b = int(np.prod([regs[0].subsystem(x).dim for x in bob])) if bob else 1
    psis = [StateVector((dim_a, dim_b), r.state.amplitudes) for r in regs]
    ws = [reduced_state(r, Party.BOB) for r in regs]
    return CommitmentStates(psis[0], psis[1], ws[0], ws[1], dim_a, dim_b, alice, bob, env,
                            (regs[0], regs[1]), (probs[0], probs[1]), mode)


def helstrom_observable(w0: DensityOperator, w1: DensityOperator, label: str = "helstrom") -> ObservableSpec:
    """Two-outcome measurement guessing "0" on the nonnegative part of ``w0 - w1``."""
    vals, vecs = np.linalg.eigh(w0.matrix - w1.matrix)
    order = np.argsort(-vals, kind="stable")
    labels = tuple("0" if vals[k] >= 0 else "1" for k in order)
    return ObservableSpec(label, vecs[:, order], labels)


def helstrom_probability(w0: DensityOperator, w1: DensityOperator) -> float:
    """Optimal probability of guessing an equiprobable bit from one copy."""
    return 0.5 * (1.0 + trace_distance(w0, w1))
